//! Discrete algebraic Riccati equation solver and the LQR state-feedback
//! gain for the linearized error model.
//!
//! The solver is a fixed-point value iteration from `P_0 = Q`; dimension 12
//! keeps every iteration cheap and the residual invariant verifies the
//! result independently of the algorithm.

use nalgebra::{DMatrix, Matrix6};

use crate::error::{Error, Result};
use crate::error_dynamics::LinearModel;
use crate::{GainMatrix, StateMatrix};

/// Frobenius-norm convergence threshold on successive iterates.
pub const DARE_TOL: f64 = 1e-12;
/// Iteration cap before reporting non-convergence.
pub const DARE_MAX_ITER: usize = 100_000;

/// Cost-to-go and state-feedback gain for the 12-state error model, with the
/// Frobenius norm of the Riccati defect.
#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    pub p: StateMatrix,
    pub k: GainMatrix,
    pub residual: f64,
    pub iterations: usize,
}

/// Riccati solution for an arbitrary-dimension system.
#[derive(Clone, Debug)]
pub struct DareSolution {
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// One value-iteration step `A'PA + Q - A'PB (B'PB + R)^{-1} B'PA`.
pub fn riccati_step(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let btpb_r = b.transpose() * p * b + r;
    let chol = nalgebra::Cholesky::new(btpb_r).ok_or(Error::CostNotPositiveDefinite)?;
    let btpa = b.transpose() * p * a;
    let gain_term = chol.solve(&btpa);
    Ok(a.transpose() * p * a + q - a.transpose() * p * b * gain_term)
}

/// Frobenius norm of the DARE defect at `p`.
pub fn dare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    match riccati_step(a, b, q, r, p) {
        Ok(next) => (p - next).norm(),
        Err(_) => f64::INFINITY,
    }
}

/// Solves the DARE by fixed-point iteration from `P_0 = Q` and returns the
/// stabilizing policy `du = K x` with the minus sign absorbed into `K`,
/// i.e. `K = -(B'PB + R)^{-1} B'PA`.
pub fn solve_dare_dyn(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DareSolution> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::InvalidArgument(
            "Riccati matrices have inconsistent dimensions".into(),
        ));
    }
    if r.nrows() != m || r.ncols() != m {
        return Err(Error::InvalidArgument(
            "R dimension does not match the input count".into(),
        ));
    }
    if nalgebra::Cholesky::new(r.clone()).is_none() {
        return Err(Error::CostNotPositiveDefinite);
    }
    let q_min_eig = q
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if q_min_eig < -1e-9 {
        return Err(Error::InvalidArgument(format!(
            "Q is not positive semidefinite (min eigenvalue {q_min_eig:.3e})"
        )));
    }

    let mut p = q.clone();
    for i in 0..DARE_MAX_ITER {
        let next = riccati_step(a, b, q, r, &p)?;
        let diff = (&next - &p).norm();
        // successive differences cannot shrink below the rounding floor of
        // the iterate itself, so large-norm solutions get a relative floor
        let tol = DARE_TOL.max(20.0 * f64::EPSILON * next.norm());
        p = next;
        if diff < tol {
            let btpb_r = b.transpose() * &p * b + r;
            let chol = nalgebra::Cholesky::new(btpb_r).ok_or(Error::CostNotPositiveDefinite)?;
            let k = -chol.solve(&(b.transpose() * &p * a));
            let residual = dare_residual(a, b, q, r, &p);
            return Ok(DareSolution {
                p,
                k,
                residual,
                iterations: i + 1,
            });
        }
    }
    Err(Error::DareNotConverged {
        iterations: DARE_MAX_ITER,
        last_step: dare_residual(a, b, q, r, &p),
    })
}

/// Solves the DARE for the 12-state error model.
pub fn solve_dare(
    model: &LinearModel,
    q: &StateMatrix,
    r: &Matrix6<f64>,
) -> Result<RiccatiSolution> {
    let sol = solve_dare_dyn(
        &DMatrix::from_iterator(12, 12, model.a.iter().cloned()),
        &DMatrix::from_iterator(12, 6, model.b.iter().cloned()),
        &DMatrix::from_iterator(12, 12, q.iter().cloned()),
        &DMatrix::from_iterator(6, 6, r.iter().cloned()),
    )?;
    Ok(RiccatiSolution {
        p: StateMatrix::from_iterator(sol.p.iter().cloned()),
        k: GainMatrix::from_iterator(sol.k.iter().cloned()),
        residual: sol.residual,
        iterations: sol.iterations,
    })
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Spectral radius of the closed loop `a + b k`.
pub fn closed_loop_spectral_radius(model: &LinearModel, k: &GainMatrix) -> f64 {
    let closed = model.a + model.b * k;
    spectral_radius(&DMatrix::from_iterator(12, 12, closed.iter().cloned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_dynamics::linearize;
    use crate::test_fixtures::{reference_params_fixture, reference_twist_fixture};
    use nalgebra::dmatrix;

    #[test]
    fn dare_collapses_when_a_is_zero() {
        let a = DMatrix::zeros(3, 3);
        let b = DMatrix::identity(3, 2);
        let q = DMatrix::identity(3, 3);
        let r = DMatrix::identity(2, 2);
        let sol = solve_dare_dyn(&a, &b, &q, &r).unwrap();
        assert!((sol.p - q).norm() < 1e-14);
        assert!(sol.k.norm() < 1e-14);
    }

    #[test]
    fn dare_scalar_closed_form() {
        // a=2, b=1, q=r=1: P^2 - 4P - 1 = 0, P = 2 + sqrt(5); the feedback
        // magnitude is 2P/(P+1) and the closed loop 2 - 2P/(P+1) is stable
        let a = dmatrix![2.0];
        let b = dmatrix![1.0];
        let q = dmatrix![1.0];
        let r = dmatrix![1.0];
        let sol = solve_dare_dyn(&a, &b, &q, &r).unwrap();
        let expected_p = 2.0 + 5.0_f64.sqrt();
        assert!(
            (sol.p[(0, 0)] - expected_p).abs() < 1e-12,
            "P = {:.15}",
            sol.p[(0, 0)]
        );
        let expected_gain = 2.0 * expected_p / (expected_p + 1.0);
        assert!((sol.k[(0, 0)] + expected_gain).abs() < 1e-11);
        let closed = a[(0, 0)] + b[(0, 0)] * sol.k[(0, 0)];
        assert!((closed - 0.38196601125010515).abs() < 1e-11);
        assert!(closed.abs() < 1.0);
    }

    #[test]
    fn dare_reference_model_residual_and_stability() {
        let model = linearize(&reference_twist_fixture(), &reference_params_fixture(), 0.01);
        let sol = solve_dare(&model, &StateMatrix::identity(), &Matrix6::identity()).unwrap();
        assert!(sol.residual < 1e-9, "residual {:.3e}", sol.residual);
        let rho = closed_loop_spectral_radius(&model, &sol.k);
        assert!(rho < 1.0, "spectral radius {rho:.6}");
        let sym = (sol.p - sol.p.transpose()).norm();
        assert!(sym < 1e-10);
        let min_eig = sol
            .p
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig >= -1e-10);
    }

    #[test]
    fn dare_rejects_indefinite_r() {
        let a = dmatrix![1.0];
        let b = dmatrix![1.0];
        let q = dmatrix![1.0];
        let r = dmatrix![-1.0];
        assert!(matches!(
            solve_dare_dyn(&a, &b, &q, &r),
            Err(Error::CostNotPositiveDefinite)
        ));
    }

    #[test]
    fn value_iteration_is_monotone_from_q() {
        let model = linearize(&reference_twist_fixture(), &reference_params_fixture(), 0.01);
        let a = DMatrix::from_iterator(12, 12, model.a.iter().cloned());
        let b = DMatrix::from_iterator(12, 6, model.b.iter().cloned());
        let q = DMatrix::identity(12, 12);
        let r = DMatrix::identity(6, 6);
        let mut p = q.clone();
        for _ in 0..50 {
            let next = riccati_step(&a, &b, &q, &r, &p).unwrap();
            let min_eig = (&next - &p)
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-10, "iterate decreased: {min_eig:.3e}");
            p = next;
        }
    }
}
