//! Dataset assembly, ridge-regularized least squares for the discrete error
//! model, and recovery of mass/inertia from the identified input matrix.
//!
//! The input matrix has the structure `[0; J_b^{-1}] dt`, so its lower block
//! isolates the generalized inertia cleanly; the state matrix mixes the
//! parameters with the reference twist and is only used as a cross-check.

use std::io::{BufRead, Write};

use nalgebra::{Const, Dyn, Matrix3, OMatrix, SMatrix};

use crate::error::{Error, Result};
use crate::error_dynamics::linearize;
use crate::rigid_body::InertialParams;
use crate::se3::Twist;
use crate::{InputMatrix, InputVector, StateMatrix, StateVector};

type StateRows = OMatrix<f64, Dyn, Const<12>>;
type InputRows = OMatrix<f64, Dyn, Const<6>>;
type Regressors = OMatrix<f64, Dyn, Const<18>>;

/// Row-aligned identification dataset: predecessor states, perturbed inputs,
/// successor states.
#[derive(Clone, Debug, PartialEq)]
pub struct IdDataset {
    x_minus: StateRows,
    u: InputRows,
    x_plus: StateRows,
}

impl IdDataset {
    pub fn new(x_minus: StateRows, u: InputRows, x_plus: StateRows) -> Result<Self> {
        let n = x_minus.nrows();
        if n == 0 || u.nrows() != n || x_plus.nrows() != n {
            return Err(Error::DatasetShape {
                states: x_minus.nrows().max(x_plus.nrows()) + 1,
                inputs: u.nrows(),
            });
        }
        Ok(IdDataset { x_minus, u, x_plus })
    }

    pub fn len(&self) -> usize {
        self.x_minus.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_minus(&self) -> &StateRows {
        &self.x_minus
    }

    pub fn inputs(&self) -> &InputRows {
        &self.u
    }

    pub fn x_plus(&self) -> &StateRows {
        &self.x_plus
    }

    /// Stacked regressor matrix `[X_- U]`.
    fn regressors(&self) -> Regressors {
        OMatrix::from_fn_generic(Dyn(self.len()), Const::<18>, |i, j| {
            if j < 12 {
                self.x_minus[(i, j)]
            } else {
                self.u[(i, j - 12)]
            }
        })
    }

    /// Writes the dataset as CSV with header `x0..x11,u0..u5,xp0..xp11`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..12)
            .map(|i| format!("x{i}"))
            .chain((0..6).map(|i| format!("u{i}")))
            .chain((0..12).map(|i| format!("xp{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut fields = Vec::with_capacity(30);
            for j in 0..12 {
                fields.push(format!("{}", self.x_minus[(i, j)]));
            }
            for j in 0..6 {
                fields.push(format!("{}", self.u[(i, j)]));
            }
            for j in 0..12 {
                fields.push(format!("{}", self.x_plus[(i, j)]));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Parses a dataset previously written by [`IdDataset::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Csv("missing header".into()))??;
        if header.split(',').count() != 30 {
            return Err(Error::Csv(format!(
                "expected 30 columns, found {}",
                header.split(',').count()
            )));
        }
        let mut values: Vec<f64> = Vec::new();
        let mut rows = 0;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 30 {
                return Err(Error::Csv(format!(
                    "row {} has {} fields, expected 30",
                    lineno + 2,
                    fields.len()
                )));
            }
            for f in fields {
                values.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Csv(format!("row {}: {e}", lineno + 2)))?,
                );
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(Error::Csv("no data rows".into()));
        }
        let x_minus = OMatrix::from_fn_generic(Dyn(rows), Const::<12>, |i, j| values[30 * i + j]);
        let u = OMatrix::from_fn_generic(Dyn(rows), Const::<6>, |i, j| values[30 * i + 12 + j]);
        let x_plus =
            OMatrix::from_fn_generic(Dyn(rows), Const::<12>, |i, j| values[30 * i + 18 + j]);
        IdDataset::new(x_minus, u, x_plus)
    }
}

/// Builds the dataset from a rollout of `N + 1` states and `N` inputs.
pub fn assemble_dataset(states: &[StateVector], inputs: &[InputVector]) -> Result<IdDataset> {
    if states.len() != inputs.len() + 1 || inputs.is_empty() {
        return Err(Error::DatasetShape {
            states: states.len(),
            inputs: inputs.len(),
        });
    }
    let n = inputs.len();
    let x_minus = OMatrix::from_fn_generic(Dyn(n), Const::<12>, |i, j| states[i][j]);
    let u = OMatrix::from_fn_generic(Dyn(n), Const::<6>, |i, j| inputs[i][j]);
    let x_plus = OMatrix::from_fn_generic(Dyn(n), Const::<12>, |i, j| states[i + 1][j]);
    IdDataset::new(x_minus, u, x_plus)
}

/// Least-squares estimate of the discrete pair with its ridge weight.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentifiedModel {
    pub a_hat: StateMatrix,
    pub b_hat: InputMatrix,
    pub lambda: f64,
}

/// Solves the regularized normal equations
/// `([X U]'[X U] + lambda I) [A'; B'] = [X U]' X_+`.
pub fn fit_linear_model(d: &IdDataset, lambda: f64) -> Result<IdentifiedModel> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ridge weight must be nonnegative, got {lambda}"
        )));
    }
    let z = d.regressors();
    let gram = z.tr_mul(&z) + SMatrix::<f64, 18, 18>::identity() * lambda;
    let rhs = z.tr_mul(d.x_plus());
    let chol = nalgebra::Cholesky::new(gram).ok_or(Error::SingularRegression)?;
    let theta = chol.solve(&rhs);
    Ok(IdentifiedModel {
        a_hat: theta.fixed_view::<12, 12>(0, 0).transpose(),
        b_hat: theta.fixed_view::<6, 12>(12, 0).transpose(),
        lambda,
    })
}

/// Numerical rank and Gram condition number of the regressors.
#[derive(Clone, Copy, Debug)]
pub struct ExcitationReport {
    pub rank: usize,
    pub gram_condition: f64,
}

/// Rank/conditioning diagnostics used to detect insufficient excitation.
pub fn excitation_report(d: &IdDataset) -> ExcitationReport {
    let z = d.regressors();
    let svals = z.svd(false, false).singular_values;
    let n = svals.len();
    let smax = svals[0];
    let tol = smax * (d.len().max(18) as f64) * f64::EPSILON;
    let rank = svals.iter().filter(|&&s| s > tol).count();
    let smin = if n < 18 { 0.0 } else { svals[n - 1] };
    let gram_condition = if smin > 0.0 && smax > 0.0 {
        (smax / smin).powi(2)
    } else {
        f64::INFINITY
    };
    ExcitationReport {
        rank,
        gram_condition,
    }
}

/// Reconstructed parameters plus flags for the SPD/positivity projections.
#[derive(Clone, Copy, Debug)]
pub struct ReconstructedParams {
    pub params: InertialParams,
    pub inertia_clamped: bool,
    pub mass_clamped: bool,
}

const RECONSTRUCT_FLOOR: f64 = 1e-6;

/// Recovers mass and inertia from the lower block of the identified input
/// matrix: `J = (B_lower / dt)^{-1}`, mass from the trace of the lower-right
/// block, inertia from the symmetrized upper-left block with eigenvalues
/// clamped to stay positive definite.
pub fn reconstruct_params(m: &IdentifiedModel, dt: f64) -> Result<ReconstructedParams> {
    if dt <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "timestep must be positive, got {dt}"
        )));
    }
    let b_lower = m.b_hat.fixed_view::<6, 6>(6, 0).into_owned() / dt;
    let j = b_lower.try_inverse().ok_or(Error::SingularInputBlock)?;

    let mass_raw = (j[(3, 3)] + j[(4, 4)] + j[(5, 5)]) / 3.0;
    let mass_clamped = mass_raw < RECONSTRUCT_FLOOR;
    let mass = if mass_clamped {
        RECONSTRUCT_FLOOR
    } else {
        mass_raw
    };

    let upper = j.fixed_view::<3, 3>(0, 0).into_owned();
    let sym = (upper + upper.transpose()) / 2.0;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let inertia_clamped = eig.eigenvalues.iter().any(|&e| e < RECONSTRUCT_FLOOR);
    let inertia = if inertia_clamped {
        let clamped = eig.eigenvalues.map(|e| e.max(RECONSTRUCT_FLOOR));
        let rebuilt =
            eig.eigenvectors * Matrix3::from_diagonal(&clamped) * eig.eigenvectors.transpose();
        (rebuilt + rebuilt.transpose()) / 2.0
    } else {
        sym
    };

    Ok(ReconstructedParams {
        params: InertialParams::new(mass, inertia)?,
        inertia_clamped,
        mass_clamped,
    })
}

/// Frobenius-norm inertia error and absolute mass error.
pub fn reconstruction_errors(est: &InertialParams, truth: &InertialParams) -> (f64, f64) {
    (
        (est.inertia() - truth.inertia()).norm(),
        (est.mass() - truth.mass()).abs(),
    )
}

/// Optional cross-check: how far the identified state matrix is from the one
/// implied by the reconstructed parameters at the same reference twist.
pub fn model_consistency_error(
    m: &IdentifiedModel,
    zeta_d: &Twist,
    params: &InertialParams,
    dt: f64,
) -> f64 {
    (m.a_hat - linearize(zeta_d, params, dt).a).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqr::spectral_radius;
    use crate::rigid_body::generalized_inertia;
    use crate::test_fixtures::{reference_params_fixture, reference_twist_fixture};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rollout(
        a: &StateMatrix,
        b: &InputMatrix,
        steps: usize,
        seed: u64,
    ) -> (Vec<StateVector>, Vec<InputVector>) {
        // O(1) initial state keeps every regressor direction well excited,
        // so the 1e-9 ridge bias stays negligible
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = StateVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let mut states = vec![x];
        let mut inputs = Vec::new();
        for _ in 0..steps {
            let u = InputVector::from_fn(|_, _| rng.random_range(-2.0..2.0));
            x = a * x + b * u;
            states.push(x);
            inputs.push(u);
        }
        (states, inputs)
    }

    #[test]
    fn assemble_shapes() {
        let states = vec![StateVector::zeros(), StateVector::repeat(1.0)];
        let inputs = vec![InputVector::repeat(0.5)];
        let d = assemble_dataset(&states, &inputs).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.x_minus().row(0).iter().sum::<f64>(), 0.0);
        assert_eq!(d.x_plus().row(0).iter().sum::<f64>(), 12.0);

        let states5: Vec<StateVector> = (0..5).map(|i| StateVector::repeat(i as f64)).collect();
        let inputs4: Vec<InputVector> = (0..4).map(|i| InputVector::repeat(i as f64)).collect();
        assert_eq!(assemble_dataset(&states5, &inputs4).unwrap().len(), 4);

        assert!(matches!(
            assemble_dataset(&states5, &inputs4[..2]),
            Err(Error::DatasetShape { .. })
        ));
    }

    #[test]
    fn assemble_rows_satisfy_known_model() {
        let model = linearize(&reference_twist_fixture(), &reference_params_fixture(), 0.01);
        let (states, inputs) = random_rollout(&model.a, &model.b, 40, 31);
        let d = assemble_dataset(&states, &inputs).unwrap();
        for i in 0..d.len() {
            let xm = d.x_minus().row(i).transpose();
            let u = d.inputs().row(i).transpose();
            let xp = d.x_plus().row(i).transpose();
            assert!((model.a * xm + model.b * u - xp).norm() < 1e-14);
        }
    }

    /// Independent rows satisfying `x+ = A x + B u` exactly; isotropic
    /// regressors keep the Gram matrix well conditioned.
    fn synthetic_rows(a: &StateMatrix, b: &InputMatrix, n: usize, seed: u64) -> IdDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xm = Vec::with_capacity(n);
        let mut us = Vec::with_capacity(n);
        let mut xp = Vec::with_capacity(n);
        for _ in 0..n {
            let x = StateVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let u = InputVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
            xm.push(x);
            us.push(u);
            xp.push(a * x + b * u);
        }
        IdDataset::new(
            OMatrix::from_fn_generic(Dyn(n), Const::<12>, |i, j| xm[i][j]),
            OMatrix::from_fn_generic(Dyn(n), Const::<6>, |i, j| us[i][j]),
            OMatrix::from_fn_generic(Dyn(n), Const::<12>, |i, j| xp[i][j]),
        )
        .unwrap()
    }

    #[test]
    fn fit_recovers_exact_model_from_noiseless_data() {
        let model = linearize(&reference_twist_fixture(), &reference_params_fixture(), 0.01);
        let d = synthetic_rows(&model.a, &model.b, 80, 32);
        let fitted = fit_linear_model(&d, 1e-9).unwrap();
        let err = (fitted.a_hat - model.a).norm() + (fitted.b_hat - model.b).norm();
        assert!(err < 1e-7, "recovery error {err:.3e}");
    }

    #[test]
    fn fit_shrinks_to_zero_under_huge_ridge() {
        let model = linearize(&reference_twist_fixture(), &reference_params_fixture(), 0.01);
        let (states, inputs) = random_rollout(&model.a, &model.b, 100, 33);
        let d = assemble_dataset(&states, &inputs).unwrap();
        let fitted = fit_linear_model(&d, 1e9).unwrap();
        assert!(fitted.a_hat.norm() + fitted.b_hat.norm() < 1e-3);
    }

    #[test]
    fn fit_duplicated_rows_with_doubled_ridge_is_invariant() {
        let model = linearize(&reference_twist_fixture(), &reference_params_fixture(), 0.01);
        let d = synthetic_rows(&model.a, &model.b, 50, 34);

        let n = d.len();
        let stack =
            |m: &StateRows| OMatrix::from_fn_generic(Dyn(2 * n), Const::<12>, |i, j| m[(i % n, j)]);
        let doubled = IdDataset::new(
            stack(d.x_minus()),
            OMatrix::from_fn_generic(Dyn(2 * n), Const::<6>, |i, j| d.inputs()[(i % n, j)]),
            stack(d.x_plus()),
        )
        .unwrap();

        let single = fit_linear_model(&d, 1e-4).unwrap();
        let double = fit_linear_model(&doubled, 2e-4).unwrap();
        let diff = (single.a_hat - double.a_hat).norm() + (single.b_hat - double.b_hat).norm();
        assert!(diff < 1e-10, "difference {diff:.3e}");
    }

    #[test]
    fn fit_singular_at_zero_ridge() {
        // all-zero data has a rank-0 Gram matrix
        let states = vec![StateVector::zeros(); 20];
        let inputs = vec![InputVector::zeros(); 19];
        let d = assemble_dataset(&states, &inputs).unwrap();
        assert!(matches!(
            fit_linear_model(&d, 0.0),
            Err(Error::SingularRegression)
        ));
    }

    #[test]
    fn exact_recovery_on_random_stable_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for trial in 0..5 {
            let raw = StateMatrix::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let rho = spectral_radius(&DMatrix::from_iterator(12, 12, raw.iter().cloned()));
            let a = raw * (0.9 / rho);
            let b = InputMatrix::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let (states, inputs) = random_rollout(&a, &b, 120, 100 + trial);
            let d = assemble_dataset(&states, &inputs).unwrap();
            assert_eq!(excitation_report(&d).rank, 18);
            let fitted = fit_linear_model(&d, 1e-9).unwrap();
            let err = (fitted.a_hat - a).norm() + (fitted.b_hat - b).norm();
            assert!(err < 1e-7, "trial {trial} recovery error {err:.3e}");
        }
    }

    #[test]
    fn reconstruct_reference_parameters_exactly() {
        let p = reference_params_fixture();
        let model = linearize(&reference_twist_fixture(), &p, 0.01);
        let ident = IdentifiedModel {
            a_hat: model.a,
            b_hat: model.b,
            lambda: 0.0,
        };
        let rec = reconstruct_params(&ident, 0.01).unwrap();
        assert!(!rec.inertia_clamped);
        assert!(!rec.mass_clamped);
        let (e_ib, e_m) = reconstruction_errors(&rec.params, &p);
        assert!(e_ib < 1e-10, "inertia error {e_ib:.3e}");
        assert!(e_m < 1e-10, "mass error {e_m:.3e}");
    }

    #[test]
    fn reconstruct_identity_inertia() {
        let p = InertialParams::new(1.0, Matrix3::identity()).unwrap();
        let model = linearize(&Twist::zero(), &p, 0.01);
        let ident = IdentifiedModel {
            a_hat: model.a,
            b_hat: model.b,
            lambda: 0.0,
        };
        let rec = reconstruct_params(&ident, 0.01).unwrap();
        assert!((rec.params.mass() - 1.0).abs() < 1e-12);
        assert!((rec.params.inertia() - Matrix3::identity()).norm() < 1e-12);
    }

    #[test]
    fn reconstruct_projects_noisy_input_block_to_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let p = reference_params_fixture();
        let model = linearize(&reference_twist_fixture(), &p, 0.01);
        for _ in 0..50 {
            let noise = InputMatrix::from_fn(|_, _| rng.random_range(-0.02..0.02));
            let ident = IdentifiedModel {
                a_hat: model.a,
                b_hat: model.b + noise * 0.01,
                lambda: 0.0,
            };
            let rec = reconstruct_params(&ident, 0.01).unwrap();
            let inertia = rec.params.inertia();
            assert_eq!(*inertia, inertia.transpose());
            assert!(inertia.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
        }
    }

    #[test]
    fn reconstruct_roundtrip_is_identity_on_generalized_inertia() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let f = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let p = InertialParams::new(
                rng.random_range(0.2..5.0),
                f * f.transpose() + Matrix3::identity() * 0.1,
            )
            .unwrap();
            let dt = 0.01;
            let mut b_hat = InputMatrix::zeros();
            b_hat
                .fixed_view_mut::<6, 6>(6, 0)
                .copy_from(&(generalized_inertia(&p).inverse() * dt));
            let ident = IdentifiedModel {
                a_hat: StateMatrix::zeros(),
                b_hat,
                lambda: 0.0,
            };
            let rec = reconstruct_params(&ident, dt).unwrap();
            let (e_ib, e_m) = reconstruction_errors(&rec.params, &p);
            assert!(e_ib < 1e-10 && e_m < 1e-10);
        }
    }

    #[test]
    fn reconstruct_rejects_singular_block() {
        let ident = IdentifiedModel {
            a_hat: StateMatrix::zeros(),
            b_hat: InputMatrix::zeros(),
            lambda: 0.0,
        };
        assert!(matches!(
            reconstruct_params(&ident, 0.01),
            Err(Error::SingularInputBlock)
        ));
    }

    #[test]
    fn reconstruct_flags_clamped_mass() {
        // negative trace in the lower-right block forces the mass floor
        let p = reference_params_fixture();
        let dt = 0.01;
        let mut j = generalized_inertia(&p).matrix().clone_owned();
        j.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(Matrix3::identity() * -2.0));
        let mut b_hat = InputMatrix::zeros();
        b_hat
            .fixed_view_mut::<6, 6>(6, 0)
            .copy_from(&(j.try_inverse().unwrap() * dt));
        let ident = IdentifiedModel {
            a_hat: StateMatrix::zeros(),
            b_hat,
            lambda: 0.0,
        };
        let rec = reconstruct_params(&ident, dt).unwrap();
        assert!(rec.mass_clamped);
        assert!(rec.params.mass() > 0.0);
    }

    #[test]
    fn reconstruction_error_values() {
        let p = reference_params_fixture();
        assert_eq!(reconstruction_errors(&p, &p), (0.0, 0.0));
        let shifted =
            InertialParams::new(p.mass(), p.inertia() + Matrix3::identity() * 0.1).unwrap();
        let (e_ib, _) = reconstruction_errors(&shifted, &p);
        assert!((e_ib - 0.1 * 3.0_f64.sqrt()).abs() < 1e-15);
        let heavier = InertialParams::new(2.5, *p.inertia()).unwrap();
        let (_, e_m) = reconstruction_errors(&heavier, &p);
        assert!((e_m - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip() {
        let model = linearize(&reference_twist_fixture(), &reference_params_fixture(), 0.01);
        let (states, inputs) = random_rollout(&model.a, &model.b, 10, 38);
        let d = assemble_dataset(&states, &inputs).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let parsed = IdDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed, d);
    }

    #[test]
    fn consistency_metric_separates_right_from_wrong_parameters() {
        let p = reference_params_fixture();
        let zd = reference_twist_fixture();
        let model = linearize(&zd, &p, 0.01);
        let ident = IdentifiedModel {
            a_hat: model.a,
            b_hat: model.b,
            lambda: 0.0,
        };
        assert!(model_consistency_error(&ident, &zd, &p, 0.01) < 1e-14);
        // the state matrix depends on the inertia (mass cancels out of it)
        let wrong =
            InertialParams::new(p.mass(), p.inertia() + Matrix3::identity() * 0.5).unwrap();
        assert!(model_consistency_error(&ident, &zd, &wrong, 0.01) > 1e-4);
    }

    #[test]
    fn excitation_report_detects_rank_deficiency() {
        // inputs exactly proportional to a fixed state direction span < 18 dims
        let x = StateVector::repeat(1.0);
        let states = vec![x; 25];
        let inputs = vec![InputVector::repeat(0.5); 24];
        let d = assemble_dataset(&states, &inputs).unwrap();
        let report = excitation_report(&d);
        assert!(report.rank < 18);
        assert!(report.gram_condition.is_infinite());
    }
}
