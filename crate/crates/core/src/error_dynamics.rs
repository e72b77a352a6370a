//! Group-relative error state, its nonlinear dynamics, and the linearized
//! model around a constant reference twist.
//!
//! The error state stacks the log-space pose error over the twist error,
//! `x = [psi; dzeta]`. The state-transition and input matrices depend only
//! on the reference twist and the inertial parameters, never on the error
//! itself; that decoupling is what the identification stage exploits.

use nalgebra::{Matrix4, Matrix6, SMatrix};

use crate::error::Result;
use crate::rigid_body::{generalized_inertia, BodyState, ControlInput, InertialParams};
use crate::se3::{ad6, coad6, hat3, hat6, log_se3, Pose, Twist};
use crate::{InputMatrix, StateMatrix, StateVector};

/// Log-space pose error and twist error relative to a reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorState {
    /// Lie-algebra coordinates of the relative pose `ref^{-1} * actual`.
    pub psi: Twist,
    /// Twist difference `actual - ref`.
    pub dzeta: Twist,
}

impl ErrorState {
    /// Stacks `[psi; dzeta]` into the 12-dimensional regression state.
    pub fn state_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<6>(0).copy_from(&self.psi.as_vector());
        x.fixed_rows_mut::<6>(6).copy_from(&self.dzeta.as_vector());
        x
    }
}

/// Computes the error state of `s` relative to a reference pose and twist.
///
/// Fails when the relative rotation is too close to a half turn for the
/// principal logarithm.
pub fn error_state(s: &BodyState, ref_pose: &Pose, ref_twist: &Twist) -> Result<ErrorState> {
    let relative = ref_pose.inverse().compose(&s.pose);
    Ok(ErrorState {
        psi: log_se3(&relative)?,
        dzeta: s.twist - *ref_twist,
    })
}

/// Exact nonlinear error dynamics: the matrix-valued pose-error rate
/// `Psi zeta^ - zeta_d^ Psi` and the twist-error rate. Verification oracle;
/// the control loop never calls this.
pub fn nonlinear_error_rhs(
    s: &BodyState,
    reference: &(Pose, Twist, ControlInput),
    u: &ControlInput,
    p: &InertialParams,
) -> (Matrix4<f64>, nalgebra::Vector6<f64>) {
    let (ref_pose, ref_twist, ref_input) = reference;
    let psi_mat = ref_pose.inverse().compose(&s.pose).homogeneous();
    let psi_rate = psi_mat * hat6(&s.twist) - hat6(ref_twist) * psi_mat;

    let j = generalized_inertia(p);
    let coupling = coad6(&s.twist) * (j.matrix() * s.twist.as_vector())
        - coad6(ref_twist) * (j.matrix() * ref_twist.as_vector());
    let dzeta_rate = j.inverse() * (coupling + u.as_vector() - ref_input.as_vector());

    (psi_rate, dzeta_rate)
}

/// Velocity-coupling Jacobian of the twist dynamics at the reference twist:
/// `J_b^{-1} coad(zeta_d) J_b + J_b^{-1} [[(I_b w_d)^, m v_d^], [m v_d^, 0]]`.
pub fn gamma_matrix(zeta_d: &Twist, p: &InertialParams) -> Matrix6<f64> {
    let j = generalized_inertia(p);
    let mut momentum_term = Matrix6::zeros();
    let iw = hat3(&(p.inertia() * zeta_d.omega));
    let mv = hat3(&(p.mass() * zeta_d.vel));
    momentum_term.fixed_view_mut::<3, 3>(0, 0).copy_from(&iw);
    momentum_term.fixed_view_mut::<3, 3>(0, 3).copy_from(&mv);
    momentum_term.fixed_view_mut::<3, 3>(3, 0).copy_from(&mv);

    j.inverse() * coad6(zeta_d) * j.matrix() + j.inverse() * momentum_term
}

/// Euler-discretized linear error model `x_{k+1} = a x_k + b du_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearModel {
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub dt: f64,
}

/// Linearizes the error dynamics at the reference twist and discretizes with
/// a forward-Euler step: `a = I + [[-ad(zeta_d), I], [0, Gamma]] dt`,
/// `b = [0; J_b^{-1}] dt`.
pub fn linearize(zeta_d: &Twist, p: &InertialParams, dt: f64) -> LinearModel {
    debug_assert!(dt > 0.0);
    let mut a = StateMatrix::identity();
    a.fixed_view_mut::<6, 6>(0, 0)
        .copy_from(&(Matrix6::identity() - ad6(zeta_d) * dt));
    a.fixed_view_mut::<6, 6>(0, 6)
        .copy_from(&(Matrix6::identity() * dt));
    a.fixed_view_mut::<6, 6>(6, 6)
        .copy_from(&(Matrix6::identity() + gamma_matrix(zeta_d, p) * dt));

    let mut b = InputMatrix::zeros();
    b.fixed_view_mut::<6, 6>(6, 0)
        .copy_from(&(generalized_inertia(p).inverse() * dt));

    LinearModel { a, b, dt }
}

impl LinearModel {
    /// Continuous-time state matrix recovered from the Euler relation.
    pub fn continuous_a(&self) -> StateMatrix {
        (self.a - StateMatrix::identity()) / self.dt
    }

    /// Continuous-time input matrix recovered from the Euler relation.
    pub fn continuous_b(&self) -> InputMatrix {
        self.b / self.dt
    }
}

/// Stacked controllability matrix `[b, a b, ..., a^11 b]`.
pub fn controllability_matrix(model: &LinearModel) -> SMatrix<f64, 12, 72> {
    let mut ctrb = SMatrix::<f64, 12, 72>::zeros();
    let mut block = model.b;
    for i in 0..12 {
        ctrb.fixed_view_mut::<12, 6>(0, 6 * i).copy_from(&block);
        block = model.a * block;
    }
    ctrb
}
