//! Monte Carlo protocol: sweep dataset sizes over randomly drawn nominal
//! parameters, aggregate reconstruction errors and identification runtime,
//! and emit figure-ready CSVs.

use std::io::Write;

use rayon::prelude::*;

use crate::adaptive::{evaluate_tracking, run_algorithm1, AdaptiveConfig};
use crate::rigid_body::{perturb_params, InertialParams, PerturbationConfig};
use crate::sysid::reconstruction_errors;

/// One completed (trial, N) cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub trial: usize,
    pub e_ib: f64,
    pub e_m: f64,
    pub id_time_s: f64,
    pub e_p: f64,
    pub e_r: f64,
    pub e_w: f64,
    pub e_v: f64,
}

/// A cell that failed, with the reason; the sweep never aborts on one cell.
#[derive(Clone, Debug)]
pub struct SweepFailure {
    pub n: usize,
    pub trial: usize,
    pub reason: String,
}

/// All rows and failures of a sweep, ordered by (trial, N).
#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

impl SweepResult {
    pub fn cell_count(&self) -> usize {
        self.rows.len() + self.failures.len()
    }
}

/// Sweep parameters.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n_trials: usize,
    pub n_grid: Vec<usize>,
    pub adaptive: AdaptiveConfig,
    pub true_params: InertialParams,
    pub perturbation: PerturbationConfig,
    /// Tracking-evaluation horizon in steps.
    pub horizon_steps: usize,
    pub base_seed: u64,
    /// Worker threads; 0 uses all cores, 1 forces sequential execution.
    pub jobs: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent per-cell seed: `base XOR hash(a, b)`.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    base ^ splitmix64(splitmix64(a).wrapping_add(b))
}

/// Tag that separates the per-trial perturbation stream from cell seeds
/// (no dataset size ever equals it).
const PERTURB_TAG: u64 = u64::MAX;

fn run_cell(
    cfg: &SweepConfig,
    nominal: &InertialParams,
    trial: usize,
    n: usize,
) -> Result<SweepRow, String> {
    let mut acfg = cfg.adaptive.clone();
    acfg.n_samples = n;
    acfg.seed = derive_seed(cfg.base_seed, trial as u64, n as u64);
    let result = run_algorithm1(&cfg.true_params, nominal, &acfg).map_err(|e| e.to_string())?;
    let (e_ib, e_m) = reconstruction_errors(&result.params, &cfg.true_params);
    let metrics = evaluate_tracking(
        &result.params,
        &cfg.true_params,
        cfg.horizon_steps,
        &acfg.initial_state,
        &acfg,
    )
    .map_err(|e| e.to_string())?;
    Ok(SweepRow {
        n,
        trial,
        e_ib,
        e_m,
        id_time_s: result.id_time_s,
        e_p: metrics.e_p,
        e_r: metrics.e_r,
        e_w: metrics.e_w,
        e_v: metrics.e_v,
    })
}

/// Runs every (trial, N) cell. One nominal-parameter draw per trial; each
/// cell gets its own derived seed, so results do not depend on scheduling.
/// Timing columns aside, two sweeps with the same base seed are identical.
pub fn monte_carlo_sweep(cfg: &SweepConfig) -> SweepResult {
    let nominals: Vec<InertialParams> = (0..cfg.n_trials)
        .map(|trial| {
            perturb_params(
                &cfg.true_params,
                &cfg.perturbation,
                derive_seed(cfg.base_seed, trial as u64, PERTURB_TAG),
            )
        })
        .collect();

    let cells: Vec<(usize, usize)> = (0..cfg.n_trials)
        .flat_map(|trial| cfg.n_grid.iter().map(move |&n| (trial, n)))
        .collect();

    let execute = |&(trial, n): &(usize, usize)| run_cell(cfg, &nominals[trial], trial, n);

    let outcomes: Vec<Result<SweepRow, String>> = if cfg.jobs == 1 {
        cells.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| cells.par_iter().map(execute).collect())
    };

    let mut result = SweepResult::default();
    for (&(trial, n), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(row) => result.rows.push(row),
            Err(reason) => result.failures.push(SweepFailure { n, trial, reason }),
        }
    }
    result
}

/// Per-N sample statistics of the error and timing columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateRow {
    pub n: usize,
    pub mean_e_ib: f64,
    pub std_e_ib: f64,
    pub mean_e_m: f64,
    pub std_e_m: f64,
    pub mean_time_s: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Groups rows by N and computes mean/standard deviation per column.
pub fn aggregate(sr: &SweepResult) -> Vec<AggregateRow> {
    let mut ns: Vec<usize> = sr.rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.iter()
        .map(|&n| {
            let e_ib: Vec<f64> = sr
                .rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.e_ib)
                .collect();
            let e_m: Vec<f64> = sr.rows.iter().filter(|r| r.n == n).map(|r| r.e_m).collect();
            let time: Vec<f64> = sr
                .rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.id_time_s)
                .collect();
            let (mean_e_ib, std_e_ib) = mean_std(&e_ib);
            let (mean_e_m, std_e_m) = mean_std(&e_m);
            let (mean_time_s, _) = mean_std(&time);
            AggregateRow {
                n,
                mean_e_ib,
                std_e_ib,
                mean_e_m,
                std_e_m,
                mean_time_s,
            }
        })
        .collect()
}

/// 17-significant-digit float formatting for the CSV outputs.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `sweep.csv`: one row per completed (trial, N) cell.
pub fn write_sweep_csv<W: Write>(sr: &SweepResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "N,trial,e_Ib,e_m,id_time_s,e_p,e_R,e_w,e_v")?;
    for r in &sr.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.trial,
            fmt17(r.e_ib),
            fmt17(r.e_m),
            fmt17(r.id_time_s),
            fmt17(r.e_p),
            fmt17(r.e_r),
            fmt17(r.e_w),
            fmt17(r.e_v)
        )?;
    }
    Ok(())
}

/// Writes `aggregate.csv`: per-N means and standard deviations.
pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "N,mean_e_Ib,std_e_Ib,mean_e_m,std_e_m,mean_time_s")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.n,
            fmt17(r.mean_e_ib),
            fmt17(r.std_e_ib),
            fmt17(r.mean_e_m),
            fmt17(r.std_e_m),
            fmt17(r.mean_time_s)
        )?;
    }
    Ok(())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // average rank over ties
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Ordinary least-squares line fit; returns (slope, intercept, r_squared).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    (slope, intercept, r2)
}
