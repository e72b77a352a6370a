//! Command-line harness: single tracking simulations, adaptive
//! identification runs, and Monte Carlo sweeps over dataset sizes.
//!
//! Exit codes: 0 success, 2 configuration error, 3 diverged rollout,
//! 4 sweep with more than 10% failed cells.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use liectrl::adaptive::{run_algorithm1, tracking_rollout, RunSummary};
use liectrl::experiments::{aggregate, monte_carlo_sweep, write_aggregate_csv, write_sweep_csv};
use liectrl::rigid_body::perturb_params;
use liectrl::sysid::reconstruction_errors;
use liectrl::Error;

use config::RunConfig;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_PARTIAL_SWEEP: u8 = 4;

#[derive(Parser)]
#[command(
    name = "liectrl",
    version,
    about = "Rigid-body tracking control experiments on SE(3)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out tracking under the nominal (perturbed) parameters
    Simulate(RunArgs),
    /// Identify parameters from closed-loop data, then compare the nominal
    /// and reconstructed controllers
    Adapt(RunArgs),
    /// Monte Carlo sweep of the identification over dataset sizes
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; built-in defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps, 0 = all cores (overrides the config)
    #[arg(long)]
    jobs: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn from_core(err: Error) -> Self {
        let code = match err {
            Error::Divergence { .. } => EXIT_DIVERGENCE,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }

    fn io(err: std::io::Error) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Adapt(args) => cmd_adapt(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Loads the config, applies CLI overrides, and prepares the output
/// directory with the effective config echoed into it.
fn prepare(args: &RunArgs) -> Result<(RunConfig, PathBuf), Failure> {
    let mut cfg = RunConfig::load(args.config.as_deref()).map_err(Failure::config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    let out_dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&out_dir).map_err(Failure::io)?;
    fs::write(out_dir.join("config.toml"), cfg.to_toml()).map_err(Failure::io)?;
    Ok((cfg, out_dir))
}

fn cmd_simulate(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, out_dir) = prepare(args)?;
    let truth = cfg.true_params().map_err(Failure::config)?;
    let nominal = perturb_params(&truth, &cfg.perturbation_config(), cfg.perturb_seed());
    let acfg = cfg.adaptive_config();

    let run = tracking_rollout(
        &nominal,
        &truth,
        cfg.horizon_steps(),
        &cfg.initial_state(),
        &acfg,
    )
    .map_err(Failure::from_core)?;

    output::write_trajectory_csv(&out_dir.join("trajectory.csv"), &run).map_err(Failure::io)?;
    output::write_metrics_json(&out_dir.join("metrics.json"), &run.metrics).map_err(Failure::io)?;
    println!(
        "simulate: e_p={:.4} e_R={:.4} e_w={:.4} e_v={:.4} -> {}",
        run.metrics.e_p,
        run.metrics.e_r,
        run.metrics.e_w,
        run.metrics.e_v,
        out_dir.display()
    );
    Ok(())
}

fn cmd_adapt(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, out_dir) = prepare(args)?;
    let truth = cfg.true_params().map_err(Failure::config)?;
    let nominal = perturb_params(&truth, &cfg.perturbation_config(), cfg.perturb_seed());
    let acfg = cfg.adaptive_config();

    let result = run_algorithm1(&truth, &nominal, &acfg).map_err(Failure::from_core)?;
    let horizon = cfg.horizon_steps();
    let x0 = cfg.initial_state();
    let nominal_run =
        tracking_rollout(&nominal, &truth, horizon, &x0, &acfg).map_err(Failure::from_core)?;
    let adapted_run = tracking_rollout(&result.params, &truth, horizon, &x0, &acfg)
        .map_err(Failure::from_core)?;

    let (e_ib, e_m) = reconstruction_errors(&result.params, &truth);
    let summary = RunSummary {
        seed: cfg.seed,
        n_samples: acfg.n_samples,
        lambda: acfg.lambda,
        noise_std: cfg.adaptive.noise_std,
        e_ib,
        e_m,
        gram_condition: result.gram_condition,
        inertia_clamped: result.inertia_clamped,
        mass_clamped: result.mass_clamped,
        nominal: nominal_run.metrics,
        adapted: adapted_run.metrics,
        id_time_s: result.id_time_s,
        collect_time_s: result.collect_time_s,
    };

    let dataset_file = fs::File::create(out_dir.join("dataset.csv")).map_err(Failure::io)?;
    result
        .dataset
        .write_csv(std::io::BufWriter::new(dataset_file))
        .map_err(Failure::io)?;
    output::write_trajectory_csv(&out_dir.join("trajectory_nominal.csv"), &nominal_run)
        .map_err(Failure::io)?;
    output::write_trajectory_csv(&out_dir.join("trajectory_adapted.csv"), &adapted_run)
        .map_err(Failure::io)?;
    output::write_json(&out_dir.join("summary.json"), &summary).map_err(Failure::io)?;
    println!(
        "adapt: e_Ib={:.4e} e_m={:.4e} | nominal e_p={:.4} -> adapted e_p={:.4} | {}",
        e_ib,
        e_m,
        summary.nominal.e_p,
        summary.adapted.e_p,
        out_dir.display()
    );
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, out_dir) = prepare(args)?;
    let sweep_cfg = cfg.sweep_config().map_err(Failure::config)?;
    let result = monte_carlo_sweep(&sweep_cfg);
    for f in &result.failures {
        eprintln!("cell (trial {}, N {}) failed: {}", f.trial, f.n, f.reason);
    }

    write_csv_file(&out_dir.join("sweep.csv"), |w| write_sweep_csv(&result, w))?;
    let agg = aggregate(&result);
    write_csv_file(&out_dir.join("aggregate.csv"), |w| {
        write_aggregate_csv(&agg, w)
    })?;

    let total = result.cell_count();
    println!(
        "sweep: {}/{} cells ok -> {}",
        result.rows.len(),
        total,
        out_dir.display()
    );
    if result.rows.len() * 10 < total * 9 {
        return Err(Failure {
            code: EXIT_PARTIAL_SWEEP,
            message: format!("{} of {} sweep cells failed", result.failures.len(), total),
        });
    }
    Ok(())
}

fn write_csv_file<F>(path: &Path, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
{
    let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(Failure::io)?);
    write(&mut w).map_err(Failure::io)?;
    use std::io::Write;
    w.flush().map_err(Failure::io)
}
