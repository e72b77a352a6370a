//! Tracking control for a fully actuated rigid body on SE(3).
//!
//! The library builds the control pipeline from first principles: exact
//! SO(3)/SE(3) group and algebra operations ([`se3`]), rigid-body dynamics
//! with a manifold-preserving integrator ([`rigid_body`]), log-error state
//! and its linearization around a constant reference twist
//! ([`error_dynamics`]), an LQR gain from the discrete algebraic Riccati
//! equation ([`lqr`]), regularized least-squares identification of the
//! mass/inertia from closed-loop data ([`sysid`]), the adaptive
//! identify-then-requalify loop ([`adaptive`]), and a Monte Carlo sweep
//! harness ([`experiments`]).

pub mod adaptive;
pub mod error;
pub mod error_dynamics;
pub mod experiments;
pub mod lqr;
pub mod rigid_body;
pub mod se3;
pub mod sysid;

pub use adaptive::{
    default_state_cost, evaluate_tracking, run_algorithm1, tracking_rollout, AdaptiveConfig,
    AdaptiveRunResult, PlantMode, RunSummary, TrackingMetrics, TrackingRun, TrackingSample,
};
pub use error::{Error, Result};
pub use error_dynamics::{error_state, gamma_matrix, linearize, ErrorState, LinearModel};
pub use experiments::{
    aggregate, monte_carlo_sweep, AggregateRow, SweepConfig, SweepResult, SweepRow,
};
pub use lqr::{solve_dare, RiccatiSolution};
pub use rigid_body::{
    feasible_reference_input, generalized_inertia, perturb_params, reference_trajectory, step,
    twist_dynamics, BodyState, ControlInput, GeneralizedInertia, InertialParams,
    PerturbationConfig, ReferenceInputMode,
};
pub use se3::{
    ad6, coad6, exp_se3, exp_so3, hat3, hat6, log_se3, log_so3, vee3, vee6, Pose, RotationMatrix,
    Twist,
};
pub use sysid::{
    assemble_dataset, fit_linear_model, reconstruct_params, reconstruction_errors, IdDataset,
    IdentifiedModel, ReconstructedParams,
};

/// Error state `[psi; dzeta]` stacked as a 12-vector.
pub type StateVector = nalgebra::SVector<f64, 12>;
/// Perturbed input as a 6-vector.
pub type InputVector = nalgebra::SVector<f64, 6>;
/// 12x12 state-transition matrix.
pub type StateMatrix = nalgebra::SMatrix<f64, 12, 12>;
/// 12x6 input matrix.
pub type InputMatrix = nalgebra::SMatrix<f64, 12, 6>;
/// 6x12 state-feedback gain.
pub type GainMatrix = nalgebra::SMatrix<f64, 6, 12>;

#[cfg(test)]
pub(crate) mod test_fixtures {
    use crate::rigid_body::InertialParams;
    use crate::se3::Twist;
    use nalgebra::{Matrix3, Vector3};

    /// Inertia and mass of the benchmark body.
    pub fn reference_params_fixture() -> InertialParams {
        #[rustfmt::skip]
        let inertia = Matrix3::new(
            1.0, 0.2, 0.1,
            0.2, 1.0, 0.2,
            0.1, 0.2, 1.0,
        );
        InertialParams::new(2.0, inertia).unwrap()
    }

    /// Constant reference twist of the benchmark scenario.
    pub fn reference_twist_fixture() -> Twist {
        Twist::new(Vector3::new(0.0, 0.0, 1.0), Vector3::new(2.0, 0.0, 0.2))
    }
}
