//! Rigid-body parameters, continuous twist dynamics, manifold-preserving
//! integration, constant-twist reference trajectories, and nominal-parameter
//! perturbation.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::se3::{coad6, exp_se3, Pose, Twist};

/// Mass and body-frame inertia of a rigid body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertialParams {
    mass: f64,
    inertia: Matrix3<f64>,
}

impl InertialParams {
    /// Validates mass > 0 and a symmetric positive-definite inertia.
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self> {
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidParams {
                reason: format!("mass {mass} is not positive"),
            });
        }
        if inertia.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams {
                reason: "inertia has non-finite entries".into(),
            });
        }
        let asym = ((inertia - inertia.transpose()) / 2.0).norm();
        if asym > 1e-10 {
            return Err(Error::InvalidParams {
                reason: format!("inertia is asymmetric by {asym:.3e}"),
            });
        }
        let eigs = inertia.symmetric_eigenvalues();
        if eigs.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidParams {
                reason: format!("inertia has a non-positive eigenvalue ({:.3e})", eigs.min()),
            });
        }
        Ok(InertialParams { mass, inertia })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }
}

/// Block-diagonal generalized inertia `diag(I_b, m I)` mapping twists to
/// body-frame momenta, with its exact block inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedInertia {
    matrix: Matrix6<f64>,
    inverse: Matrix6<f64>,
}

impl GeneralizedInertia {
    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &Matrix6<f64> {
        &self.inverse
    }
}

/// Assembles the 6x6 generalized inertia from mass and inertia.
pub fn generalized_inertia(p: &InertialParams) -> GeneralizedInertia {
    let mut matrix = Matrix6::zeros();
    matrix.fixed_view_mut::<3, 3>(0, 0).copy_from(&p.inertia);
    matrix
        .fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * p.mass));

    let inertia_inv = p
        .inertia
        .try_inverse()
        .expect("SPD inertia is always invertible");
    let mut inverse = Matrix6::zeros();
    inverse.fixed_view_mut::<3, 3>(0, 0).copy_from(&inertia_inv);
    inverse
        .fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() / p.mass));

    GeneralizedInertia { matrix, inverse }
}

/// Full kinematic + kinetic state of the body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyState {
    pub pose: Pose,
    pub twist: Twist,
}

impl BodyState {
    pub fn new(pose: Pose, twist: Twist) -> Self {
        BodyState { pose, twist }
    }

    /// At rest on the reference origin.
    pub fn at_identity() -> Self {
        BodyState {
            pose: Pose::identity(),
            twist: Twist::zero(),
        }
    }
}

/// Body-frame wrench, torque stacked over force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlInput {
    pub torque: Vector3<f64>,
    pub force: Vector3<f64>,
}

impl ControlInput {
    pub fn new(torque: Vector3<f64>, force: Vector3<f64>) -> Self {
        ControlInput { torque, force }
    }

    pub fn zero() -> Self {
        ControlInput {
            torque: Vector3::zeros(),
            force: Vector3::zeros(),
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        ControlInput {
            torque: v.fixed_rows::<3>(0).into_owned(),
            force: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.torque);
        v.fixed_rows_mut::<3>(3).copy_from(&self.force);
        v
    }
}

impl std::ops::Add for ControlInput {
    type Output = ControlInput;
    fn add(self, rhs: ControlInput) -> ControlInput {
        ControlInput::new(self.torque + rhs.torque, self.force + rhs.force)
    }
}

fn twist_rate(j: &GeneralizedInertia, zeta: &Vector6<f64>, u: &Vector6<f64>) -> Vector6<f64> {
    let momentum = j.matrix() * zeta;
    j.inverse() * (coad6(&Twist::from_vector(zeta)) * momentum + u)
}

/// Twist acceleration `J_b^{-1}(coad(zeta) J_b zeta + u)`.
pub fn twist_dynamics(zeta: &Twist, u: &ControlInput, p: &InertialParams) -> Vector6<f64> {
    twist_rate(&generalized_inertia(p), &zeta.as_vector(), &u.as_vector())
}

/// How the constant reference input is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceInputMode {
    /// Cancels the full momentum-coupling term so the constant twist is an
    /// exact equilibrium: `u_d = -coad(zeta_d) J_b zeta_d`.
    Exact,
    /// Force-only Coriolis cancellation, `u_d = (0, m (omega_d x v_d))`;
    /// leaves the angular drift `-omega_d x (I_b omega_d)` uncompensated.
    ForceOnly,
}

/// Reference input making the constant twist an (exact or approximate)
/// equilibrium of the dynamics.
pub fn feasible_reference_input(
    zeta_d: &Twist,
    p: &InertialParams,
    mode: ReferenceInputMode,
) -> ControlInput {
    match mode {
        ReferenceInputMode::Exact => {
            let j = generalized_inertia(p);
            let u = -(coad6(zeta_d) * (j.matrix() * zeta_d.as_vector()));
            ControlInput::from_vector(&u)
        }
        ReferenceInputMode::ForceOnly => {
            ControlInput::new(Vector3::zeros(), p.mass * zeta_d.omega.cross(&zeta_d.vel))
        }
    }
}

/// One integration step: classical RK4 on the twist, geometric exponential
/// update on the pose using the RK4-averaged twist (stays on SE(3) exactly).
pub fn step(s: &BodyState, u: &ControlInput, p: &InertialParams, dt: f64) -> BodyState {
    debug_assert!(dt > 0.0);
    let j = generalized_inertia(p);
    let uv = u.as_vector();
    let z0 = s.twist.as_vector();

    let k1 = twist_rate(&j, &z0, &uv);
    let z1 = z0 + 0.5 * dt * k1;
    let k2 = twist_rate(&j, &z1, &uv);
    let z2 = z0 + 0.5 * dt * k2;
    let k3 = twist_rate(&j, &z2, &uv);
    let z3 = z0 + dt * k3;
    let k4 = twist_rate(&j, &z3, &uv);

    let z_next = z0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let z_mid = (z0 + 2.0 * z1 + 2.0 * z2 + z3) / 6.0;

    BodyState {
        pose: s.pose.compose(&exp_se3(&(Twist::from_vector(&z_mid) * dt))),
        twist: Twist::from_vector(&z_next),
    }
}

/// Constant-twist reference at step `k`: closed-form pose
/// `exp(k dt zeta_d)` from the origin plus the constant twist and input.
pub fn reference_trajectory(
    zeta_d: &Twist,
    u_d: &ControlInput,
    dt: f64,
    k: usize,
) -> (Pose, Twist, ControlInput) {
    (exp_se3(&(*zeta_d * (dt * k as f64))), *zeta_d, *u_d)
}

/// Magnitudes of the additive parameter uncertainty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationConfig {
    /// Entries of the random factor G are uniform on [-entry_range, entry_range].
    pub inertia_entry_range: f64,
    /// Inertia perturbation is `scale * G G^T` (positive semidefinite).
    pub inertia_scale: f64,
    /// Mass perturbation is uniform on [-f m, f m] with f = mass_fraction.
    pub mass_fraction: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            inertia_entry_range: 0.3,
            inertia_scale: 1.0,
            mass_fraction: 0.5,
        }
    }
}

/// Draws nominal (measured-with-error) parameters around the true ones.
/// The inertia offset `scale * G G^T` is PSD, so the result stays SPD; the
/// mass is clamped to at least a tenth of the true value. Deterministic for
/// a fixed seed.
pub fn perturb_params(p: &InertialParams, cfg: &PerturbationConfig, seed: u64) -> InertialParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = cfg.inertia_entry_range;
    let factor = Matrix3::from_fn(|_, _| {
        if g > 0.0 {
            rng.random_range(-g..=g)
        } else {
            let _ = rng.random::<f64>();
            0.0
        }
    });
    let delta_inertia = cfg.inertia_scale * factor * factor.transpose();

    let half_width = cfg.mass_fraction * p.mass;
    let delta_mass = if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        let _ = rng.random::<f64>();
        0.0
    };
    let mass = (p.mass + delta_mass).max(0.1 * p.mass);

    InertialParams::new(mass, p.inertia + delta_inertia)
        .expect("PSD offset and clamped mass keep parameters valid")
}
