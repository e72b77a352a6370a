//! SO(3)/SE(3) group and algebra operations: hat/vee maps, exponential and
//! logarithm, composition/inverse, adjoint and coadjoint representations.
//!
//! Twists stack the angular part first, `(omega, vel)`, and every 6x6 block
//! operator in this crate follows that ordering.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Below this rotation angle the trigonometric coefficients of the
/// exponential/logarithm switch to their 4th-order Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Structural tolerance for validating algebra-element inputs.
const STRUCT_TOL: f64 = 1e-9;

/// Margin below pi at which the principal logarithm is rejected.
const BRANCH_MARGIN: f64 = 1e-6;

/// A 3x3 rotation matrix, orthonormal with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Validates orthonormality (`R^T R = I`) and `det R = 1` to 1e-9.
    pub fn try_new(m: Matrix3<f64>) -> Result<Self> {
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        if ortho > STRUCT_TOL {
            return Err(Error::InvalidRotation {
                reason: format!("R^T R deviates from identity by {ortho:.3e}"),
            });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidRotation {
                reason: format!("determinant {det:.12} != 1"),
            });
        }
        Ok(RotationMatrix(m))
    }

    /// For matrices known to be rotations by construction (exponentials,
    /// products of valid rotations).
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Rotation angle in [0, pi].
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

/// A rigid-body pose: rotation plus position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    rot: RotationMatrix,
    pos: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rot: RotationMatrix::identity(),
            pos: Vector3::zeros(),
        }
    }

    pub fn new(rot: RotationMatrix, pos: Vector3<f64>) -> Self {
        Pose { rot, pos }
    }

    pub fn rotation(&self) -> &RotationMatrix {
        &self.rot
    }

    pub fn position(&self) -> &Vector3<f64> {
        &self.pos
    }

    /// Homogeneous 4x4 embedding; the last row is (0, 0, 0, 1) exactly.
    pub fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rot.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.pos);
        m
    }

    /// Group product `self * other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rot: RotationMatrix::from_matrix_unchecked(self.rot.0 * other.rot.0),
            pos: self.rot.0 * other.pos + self.pos,
        }
    }

    /// Group inverse `(R^T, -R^T p)`.
    pub fn inverse(&self) -> Pose {
        let rt = self.rot.0.transpose();
        Pose {
            rot: RotationMatrix::from_matrix_unchecked(rt),
            pos: -(rt * self.pos),
        }
    }
}

/// Body-frame twist, angular velocity stacked over linear velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist {
    pub omega: Vector3<f64>,
    pub vel: Vector3<f64>,
}

impl Twist {
    pub fn new(omega: Vector3<f64>, vel: Vector3<f64>) -> Self {
        Twist { omega, vel }
    }

    pub fn zero() -> Self {
        Twist {
            omega: Vector3::zeros(),
            vel: Vector3::zeros(),
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Twist {
            omega: v.fixed_rows::<3>(0).into_owned(),
            vel: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.omega);
        v.fixed_rows_mut::<3>(3).copy_from(&self.vel);
        v
    }

    pub fn norm(&self) -> f64 {
        (self.omega.norm_squared() + self.vel.norm_squared()).sqrt()
    }
}

impl std::ops::Add for Twist {
    type Output = Twist;
    fn add(self, rhs: Twist) -> Twist {
        Twist::new(self.omega + rhs.omega, self.vel + rhs.vel)
    }
}

impl std::ops::Sub for Twist {
    type Output = Twist;
    fn sub(self, rhs: Twist) -> Twist {
        Twist::new(self.omega - rhs.omega, self.vel - rhs.vel)
    }
}

impl std::ops::Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist::new(-self.omega, -self.vel)
    }
}

impl std::ops::Mul<f64> for Twist {
    type Output = Twist;
    fn mul(self, s: f64) -> Twist {
        Twist::new(self.omega * s, self.vel * s)
    }
}

/// Cross-product matrix: `hat3(w) * u = w x u`.
#[rustfmt::skip]
pub fn hat3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0,  -w[2],  w[1],
        w[2],  0.0,  -w[0],
       -w[1],  w[0],  0.0,
    )
}

/// Inverse of [`hat3`]; rejects matrices whose symmetric part exceeds 1e-9.
pub fn vee3(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let defect = ((m + m.transpose()) / 2.0).norm();
    if defect > STRUCT_TOL {
        return Err(Error::NotSkewSymmetric { defect });
    }
    Ok(vee3_unchecked(m))
}

fn vee3_unchecked(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// se(3) matrix form of a twist: `[[hat3(omega), vel], [0, 0]]`.
pub fn hat6(xi: &Twist) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat3(&xi.omega));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&xi.vel);
    m
}

/// Inverse of [`hat6`]; rejects matrices with a nonzero bottom row or a
/// non-skew upper-left block.
pub fn vee6(m: &Matrix4<f64>) -> Result<Twist> {
    if m.row(3).iter().any(|x| x.abs() > STRUCT_TOL) {
        return Err(Error::MalformedAlgebraElement {
            reason: "bottom row is not zero",
        });
    }
    let top = m.fixed_view::<3, 3>(0, 0).into_owned();
    let omega = vee3(&top).map_err(|_| Error::MalformedAlgebraElement {
        reason: "upper-left block is not skew-symmetric",
    })?;
    Ok(Twist::new(omega, m.fixed_view::<3, 1>(0, 3).into_owned()))
}

/// Coefficients sin(t)/t, (1-cos(t))/t^2, (t-sin(t))/t^3 with Taylor
/// fallbacks below [`SMALL_ANGLE`].
fn exp_coeffs(theta: f64) -> (f64, f64, f64) {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            1.0 - t2 / 6.0 + t4 / 120.0,
            0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
        )
    } else {
        let t2 = theta * theta;
        (
            theta.sin() / theta,
            (1.0 - theta.cos()) / t2,
            (theta - theta.sin()) / (t2 * theta),
        )
    }
}

/// Rodrigues formula for the SO(3) exponential.
pub fn exp_so3(w: &Vector3<f64>) -> RotationMatrix {
    let theta = w.norm();
    let (a, b, _) = exp_coeffs(theta);
    let k = hat3(w);
    RotationMatrix::from_matrix_unchecked(Matrix3::identity() + a * k + b * (k * k))
}

/// SO(3) logarithm on the principal branch; rejects angles within 1e-6 of pi.
pub fn log_so3(r: &RotationMatrix) -> Result<Vector3<f64>> {
    // the angle comes from atan2 of the antisymmetric-part norm against the
    // trace; acos of the trace alone loses ~6 digits near pi
    let anti = vee3_unchecked(&((r.matrix() - r.matrix().transpose()) / 2.0));
    let sin_theta = anti.norm();
    let cos_theta = ((r.matrix().trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = sin_theta.atan2(cos_theta);
    if theta >= std::f64::consts::PI - BRANCH_MARGIN {
        return Err(Error::LogBranchAmbiguous { angle: theta });
    }
    if sin_theta < 1e-12 {
        return Ok(anti);
    }
    Ok(anti * (theta / sin_theta))
}

/// Translation block of the SE(3) exponential (the SO(3) left Jacobian).
fn left_jacobian(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let (_, b, c) = exp_coeffs(theta);
    let k = hat3(w);
    Matrix3::identity() + b * k + c * (k * k)
}

fn left_jacobian_inv(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat3(w);
    // the closed form 1 - a/(2b) cancels catastrophically below theta ~ 0.01
    // (error ~ eps/theta^4); the series stays below 1e-12 up to theta = 0.1
    let e = if theta < 0.1 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let (a, b, _) = exp_coeffs(theta);
        (1.0 - a / (2.0 * b)) / (theta * theta)
    };
    Matrix3::identity() - 0.5 * k + e * (k * k)
}

/// SE(3) exponential: closed-form Rodrigues rotation plus left-Jacobian
/// translation.
pub fn exp_se3(xi: &Twist) -> Pose {
    let rot = exp_so3(&xi.omega);
    let pos = left_jacobian(&xi.omega) * xi.vel;
    Pose::new(rot, pos)
}

/// SE(3) logarithm on the principal branch.
pub fn log_se3(x: &Pose) -> Result<Twist> {
    let omega = log_so3(x.rotation())?;
    let vel = left_jacobian_inv(&omega) * x.position();
    Ok(Twist::new(omega, vel))
}

/// Adjoint of a twist: `ad6(xi) * eta = vee6([hat6(xi), hat6(eta)])`.
pub fn ad6(zeta: &Twist) -> Matrix6<f64> {
    let w = hat3(&zeta.omega);
    let v = hat3(&zeta.vel);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&v);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m
}

/// Coadjoint of a twist: `-[[hat3(omega), hat3(vel)], [0, hat3(omega)]]`,
/// which equals `ad6(zeta)^T`.
pub fn coad6(zeta: &Twist) -> Matrix6<f64> {
    let w = hat3(&zeta.omega);
    let v = hat3(&zeta.vel);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-w));
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-v));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-w));
    m
}
