//! TOML run configuration. Every field has a default carrying the reference
//! scenario, so a zero-config invocation reproduces it.

use std::path::Path;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use liectrl::adaptive::{AdaptiveConfig, PlantMode};
use liectrl::experiments::{derive_seed, SweepConfig};
use liectrl::rigid_body::{BodyState, InertialParams, PerturbationConfig, ReferenceInputMode};
use liectrl::se3::{Pose, RotationMatrix, Twist};
use liectrl::StateMatrix;

/// Tag separating the nominal-parameter draw from the noise streams.
const PERTURB_TAG: u64 = u64::MAX;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; every random stream is derived from it.
    pub seed: u64,
    /// Worker threads for sweeps; 0 uses all cores, 1 forces sequential.
    pub jobs: usize,
    /// Output directory.
    pub out_dir: String,
    pub reference: ReferenceSection,
    pub plant: PlantSection,
    pub perturbation: PerturbationSection,
    pub adaptive: AdaptiveSection,
    pub simulation: SimulationSection,
    pub sweep: SweepSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSection {
    pub omega_d: [f64; 3],
    pub vel_d: [f64; 3],
    pub input_mode: InputMode,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    /// Cancel the full momentum coupling (constant twist is an equilibrium).
    Exact,
    /// Force-only Coriolis cancellation.
    #[serde(rename = "paper")]
    ForceOnly,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub mass: f64,
    pub inertia: [[f64; 3]; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSection {
    pub inertia_entry_range: f64,
    pub inertia_scale: f64,
    pub mass_fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveSection {
    pub n_samples: usize,
    pub noise_std: [f64; 6],
    pub lambda: f64,
    pub dt: f64,
    pub q_diag: [f64; 12],
    pub r_diag: [f64; 6],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon_s: f64,
    pub initial_position: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub n_trials: usize,
    pub n_grid: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 0,
            out_dir: "out".into(),
            reference: ReferenceSection::default(),
            plant: PlantSection::default(),
            perturbation: PerturbationSection::default(),
            adaptive: AdaptiveSection::default(),
            simulation: SimulationSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            omega_d: [0.0, 0.0, 1.0],
            vel_d: [2.0, 0.0, 0.2],
            input_mode: InputMode::Exact,
        }
    }
}

impl Default for PlantSection {
    fn default() -> Self {
        PlantSection {
            mass: 2.0,
            inertia: [[1.0, 0.2, 0.1], [0.2, 1.0, 0.2], [0.1, 0.2, 1.0]],
        }
    }
}

impl Default for PerturbationSection {
    fn default() -> Self {
        let d = PerturbationConfig::default();
        PerturbationSection {
            inertia_entry_range: d.inertia_entry_range,
            inertia_scale: d.inertia_scale,
            mass_fraction: d.mass_fraction,
        }
    }
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        let mut q_diag = [10.0; 12];
        q_diag[..6].fill(400.0);
        AdaptiveSection {
            n_samples: 1500,
            noise_std: [0.03; 6],
            lambda: 1e-6,
            dt: 0.01,
            q_diag,
            r_diag: [1.0; 6],
        }
    }
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            horizon_s: 10.0,
            initial_position: [0.4, 0.0, 0.0],
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            n_trials: 50,
            n_grid: vec![200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000],
        }
    }
}

impl RunConfig {
    /// Loads and validates a config file; `None` yields pure defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let cfg: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.true_params().map(|_| ())?;
        if !self.adaptive.dt.is_finite() || self.adaptive.dt <= 0.0 {
            return Err(format!(
                "adaptive.dt must be positive, got {}",
                self.adaptive.dt
            ));
        }
        if self.adaptive.n_samples < 18 {
            return Err(format!(
                "adaptive.n_samples must be at least 18, got {}",
                self.adaptive.n_samples
            ));
        }
        if self.adaptive.noise_std.iter().any(|&s| s < 0.0) {
            return Err("adaptive.noise_std entries must be nonnegative".into());
        }
        if self.adaptive.lambda < 0.0 {
            return Err(format!(
                "adaptive.lambda must be nonnegative, got {}",
                self.adaptive.lambda
            ));
        }
        if self.simulation.horizon_s < 0.0 {
            return Err(format!(
                "simulation.horizon_s must be nonnegative, got {}",
                self.simulation.horizon_s
            ));
        }
        if self.sweep.n_trials == 0 {
            return Err("sweep.n_trials must be at least 1".into());
        }
        if let Some(&bad) = self.sweep.n_grid.iter().find(|&&n| n < 18) {
            return Err(format!(
                "sweep.n_grid entries must be at least 18, got {bad}"
            ));
        }
        if self.perturbation.inertia_entry_range < 0.0
            || self.perturbation.inertia_scale < 0.0
            || self.perturbation.mass_fraction < 0.0
        {
            return Err("perturbation magnitudes must be nonnegative".into());
        }
        Ok(())
    }

    pub fn true_params(&self) -> Result<InertialParams, String> {
        let m = self.plant.inertia;
        #[rustfmt::skip]
        let inertia = Matrix3::new(
            m[0][0], m[0][1], m[0][2],
            m[1][0], m[1][1], m[1][2],
            m[2][0], m[2][1], m[2][2],
        );
        InertialParams::new(self.plant.mass, inertia).map_err(|e| format!("plant parameters: {e}"))
    }

    pub fn perturbation_config(&self) -> PerturbationConfig {
        PerturbationConfig {
            inertia_entry_range: self.perturbation.inertia_entry_range,
            inertia_scale: self.perturbation.inertia_scale,
            mass_fraction: self.perturbation.mass_fraction,
        }
    }

    pub fn reference_twist(&self) -> Twist {
        Twist::new(
            Vector3::from_row_slice(&self.reference.omega_d),
            Vector3::from_row_slice(&self.reference.vel_d),
        )
    }

    pub fn initial_state(&self) -> BodyState {
        BodyState::new(
            Pose::new(
                RotationMatrix::identity(),
                Vector3::from_row_slice(&self.simulation.initial_position),
            ),
            Twist::zero(),
        )
    }

    pub fn horizon_steps(&self) -> usize {
        (self.simulation.horizon_s / self.adaptive.dt).round() as usize
    }

    /// Seed for the nominal-parameter draw.
    pub fn perturb_seed(&self) -> u64 {
        derive_seed(self.seed, 0, PERTURB_TAG)
    }

    /// Seed for the exploration-noise stream of a single adaptive run; uses
    /// the same derivation a sweep applies to its (trial 0, N) cell.
    pub fn run_seed(&self) -> u64 {
        derive_seed(self.seed, 0, self.adaptive.n_samples as u64)
    }

    pub fn adaptive_config(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            n_samples: self.adaptive.n_samples,
            noise_std: Vector6::from_row_slice(&self.adaptive.noise_std),
            lambda: self.adaptive.lambda,
            dt: self.adaptive.dt,
            q: StateMatrix::from_diagonal(&nalgebra::SVector::<f64, 12>::from_row_slice(
                &self.adaptive.q_diag,
            )),
            r: Matrix6::from_diagonal(&Vector6::from_row_slice(&self.adaptive.r_diag)),
            seed: self.run_seed(),
            zeta_d: self.reference_twist(),
            input_mode: match self.reference.input_mode {
                InputMode::Exact => ReferenceInputMode::Exact,
                InputMode::ForceOnly => ReferenceInputMode::ForceOnly,
            },
            plant: PlantMode::Nonlinear,
            initial_state: self.initial_state(),
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, String> {
        Ok(SweepConfig {
            n_trials: self.sweep.n_trials,
            n_grid: self.sweep.n_grid.clone(),
            adaptive: self.adaptive_config(),
            true_params: self.true_params()?,
            perturbation: self.perturbation_config(),
            horizon_steps: self.horizon_steps(),
            base_seed: self.seed,
            jobs: self.jobs,
        })
    }

    /// Serializes the effective configuration for the output directory.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_roundtrip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let parsed: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(parsed.to_toml(), text);
        assert_eq!(parsed.seed, cfg.seed);
        assert_eq!(parsed.sweep.n_grid, cfg.sweep.n_grid);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("sed = 3").unwrap_err();
        assert!(err.to_string().contains("sed"));
    }

    #[test]
    fn semantic_validation() {
        let mut cfg = RunConfig::default();
        cfg.plant.mass = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.sweep.n_grid = vec![200, 5];
        assert!(cfg.validate().unwrap_err().contains("n_grid"));
    }

    #[test]
    fn horizon_steps_rounding() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.horizon_steps(), 1000);
        let mut zero = RunConfig::default();
        zero.simulation.horizon_s = 0.0;
        assert_eq!(zero.horizon_steps(), 0);
    }
}
