//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classical::{EmissionMode, EnsembleParams};
use crate::error::{Error, Result};
use crate::pulse_train::{PulseShape, PulseShapeParams, DEFAULT_ON_THRESHOLD, MIN_STEPS_PER_PULSE};
use crate::quantum::{JumpTiming, QuantumParams, DEFAULT_N_MAX};
use crate::units::{kbar_from_period_us, ns_to_scaled};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PhaseSweep,
    RatioSweep,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Classical,
    Quantum,
    #[default]
    Both,
}

impl EngineChoice {
    pub fn classical(self) -> bool {
        matches!(self, EngineChoice::Classical | EngineChoice::Both)
    }

    pub fn quantum(self) -> bool {
        matches!(self, EngineChoice::Quantum | EngineChoice::Both)
    }
}

/// Pulse shape in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseConfig {
    Square {
        width_ns: f64,
    },
    Erf {
        rise_ns: f64,
        fall_ns: f64,
        fwhm_ns: f64,
        #[serde(default = "default_on_threshold")]
        on_threshold: f64,
    },
}

fn default_on_threshold() -> f64 {
    DEFAULT_ON_THRESHOLD
}

impl Default for PulseConfig {
    /// The measured shape of the nominal 480 ns pulse.
    fn default() -> Self {
        PulseConfig::Erf {
            rise_ns: 104.0,
            fall_ns: 121.0,
            fwhm_ns: 396.0,
            on_threshold: DEFAULT_ON_THRESHOLD,
        }
    }
}

impl PulseConfig {
    pub fn to_shape(&self, period_us: f64) -> Result<PulseShape<f64>> {
        let scaled = |ns| ns_to_scaled(ns, period_us);
        match *self {
            PulseConfig::Square { width_ns } => PulseShape::square(scaled(width_ns)),
            PulseConfig::Erf {
                rise_ns,
                fall_ns,
                fwhm_ns,
                on_threshold,
            } => Ok(PulseShape::Erf(PulseShapeParams::new(
                scaled(rise_ns),
                scaled(fall_ns),
                scaled(fwhm_ns),
                on_threshold,
            )?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Period of train 1, µs.
    pub period_us: f64,
    /// Overrides the value derived from `period_us`.
    pub kbar: Option<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub n_total: usize,
    /// `r = T₂/T₁` for phase sweeps and single runs.
    pub ratio: f64,
    /// Puts every kick in train 1 and leaves train 2 dark.
    pub single_train: bool,
    pub pulse: PulseConfig,
    pub eta: f64,
    pub temperature_uk: f64,
    pub cloud_sigma_mm: f64,
    pub beam_sigma_mm: f64,
    pub sublevel_factors: Vec<f64>,
    pub emission_mode: EmissionMode,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            period_us: 30.0,
            kbar: None,
            kappa1: 10.1,
            kappa2: 10.1,
            n_total: 30,
            ratio: 1.0,
            single_train: false,
            pulse: PulseConfig::default(),
            eta: 0.028,
            temperature_uk: 5.0,
            cloud_sigma_mm: 0.5,
            beam_sigma_mm: 0.72,
            sublevel_factors: vec![1.0],
            emission_mode: EmissionMode::default(),
        }
    }
}

impl PhysicsConfig {
    pub fn kbar(&self) -> f64 {
        self.kbar.unwrap_or_else(|| kbar_from_period_us(self.period_us))
    }

    pub fn shape(&self) -> Result<PulseShape<f64>> {
        self.pulse.to_shape(self.period_us)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub classical_trajectories: usize,
    pub quantum_trajectories: usize,
    pub n_max: usize,
    pub jump_timing: JumpTiming,
    pub min_steps_per_pulse: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            classical_trajectories: 10_000,
            quantum_trajectories: 1000,
            n_max: DEFAULT_N_MAX,
            jump_timing: JumpTiming::default(),
            min_steps_per_pulse: MIN_STEPS_PER_PULSE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub bin_width: f64,
    /// Half-width of the zero-velocity window, two-photon recoils.
    pub epsilon: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin_width: crate::analysis::DEFAULT_BIN_WIDTH,
            epsilon: crate::analysis::DEFAULT_ZERO_VELOCITY_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSweepConfig {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for PhaseSweepConfig {
    fn default() -> Self {
        Self {
            start_deg: 0.0,
            stop_deg: 360.0,
            step_deg: 5.0,
        }
    }
}

impl PhaseSweepConfig {
    /// Grid values `start, start + step, …` up to and including `stop`.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start_deg + self.step_deg * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioSweepConfig {
    /// `r′ = T₁/T₂` values, in output order.
    pub r_prime: Vec<f64>,
    pub psi_prime_deg: f64,
}

impl Default for RatioSweepConfig {
    fn default() -> Self {
        Self {
            r_prime: (0..=40).map(|i| 0.6 + 0.02 * i as f64).collect(),
            psi_prime_deg: 52.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleConfig {
    pub psi0_deg: f64,
}

impl Default for SingleConfig {
    fn default() -> Self {
        Self { psi0_deg: 180.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub engine: EngineChoice,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub physics: PhysicsConfig,
    pub ensemble: EnsembleConfig,
    pub analysis: AnalysisConfig,
    pub phase_sweep: PhaseSweepConfig,
    pub ratio_sweep: RatioSweepConfig,
    pub single: SingleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Single,
            engine: EngineChoice::default(),
            seed: 1,
            workers: 0,
            output_dir: PathBuf::from("output"),
            physics: PhysicsConfig::default(),
            ensemble: EnsembleConfig::default(),
            analysis: AnalysisConfig::default(),
            phase_sweep: PhaseSweepConfig::default(),
            ratio_sweep: RatioSweepConfig::default(),
            single: SingleConfig::default(),
        }
    }
}

fn check(ok: bool, name: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::param(name, reason()))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        check(p.period_us > 0.0, "physics.period_us", || format!("must be positive, got {}", p.period_us))?;
        check(p.kbar() > 0.0, "physics.kbar", || format!("must be positive, got {}", p.kbar()))?;
        check(p.kappa1 >= 0.0, "physics.kappa1", || format!("must be non-negative, got {}", p.kappa1))?;
        check(p.kappa2 >= 0.0, "physics.kappa2", || format!("must be non-negative, got {}", p.kappa2))?;
        check(p.n_total >= 1, "physics.n_total", || "must be at least 1".into())?;
        check(p.ratio > 0.0 && p.ratio.is_finite(), "physics.ratio", || format!("must be positive, got {}", p.ratio))?;
        p.shape()?;
        self.ensemble_params(0).validate()?;

        let e = &self.ensemble;
        if self.engine.classical() {
            check(e.classical_trajectories >= 1, "ensemble.classical_trajectories", || "must be at least 1".into())?;
        }
        if self.engine.quantum() {
            check(e.quantum_trajectories >= 1, "ensemble.quantum_trajectories", || "must be at least 1".into())?;
            check(
                e.n_max >= crate::quantum::MIN_N_MAX && e.n_max.is_power_of_two(),
                "ensemble.n_max",
                || format!("must be a power of two ≥ {}, got {}", crate::quantum::MIN_N_MAX, e.n_max),
            )?;
        }
        check(e.min_steps_per_pulse >= 1, "ensemble.min_steps_per_pulse", || "must be at least 1".into())?;
        let a = &self.analysis;
        check(a.bin_width > 0.0, "analysis.bin_width", || format!("must be positive, got {}", a.bin_width))?;
        check(a.epsilon > 0.0, "analysis.epsilon", || format!("must be positive, got {}", a.epsilon))?;

        match self.mode {
            Mode::PhaseSweep => {
                let s = &self.phase_sweep;
                let in_range = |x: f64| (0.0..=360.0).contains(&x);
                check(in_range(s.start_deg), "phase_sweep.start_deg", || format!("must lie in [0, 360], got {}", s.start_deg))?;
                check(in_range(s.stop_deg), "phase_sweep.stop_deg", || format!("must lie in [0, 360], got {}", s.stop_deg))?;
                check(s.stop_deg >= s.start_deg, "phase_sweep.stop_deg", || "must not be below start_deg".into())?;
                check(s.step_deg > 0.0, "phase_sweep.step_deg", || format!("must be positive, got {}", s.step_deg))?;
            }
            Mode::RatioSweep => {
                let s = &self.ratio_sweep;
                for &r in &s.r_prime {
                    check(r > 0.0 && r.is_finite(), "ratio_sweep.r_prime", || format!("values must be positive, got {r}"))?;
                }
                check(s.psi_prime_deg.is_finite(), "ratio_sweep.psi_prime_deg", || "must be finite".into())?;
            }
            Mode::Single => {
                let s = self.single.psi0_deg;
                check((0.0..=360.0).contains(&s), "single.psi0_deg", || format!("must lie in [0, 360], got {s}"))?;
            }
        }
        Ok(())
    }

    /// Ensemble parameters for one sweep point.
    pub fn ensemble_params(&self, stream_point: u64) -> EnsembleParams<f64> {
        let p = &self.physics;
        EnsembleParams {
            temperature_uk: p.temperature_uk,
            cloud_sigma_mm: p.cloud_sigma_mm,
            beam_sigma_mm: p.beam_sigma_mm,
            eta_per_pulse: p.eta,
            sublevel_factors: p.sublevel_factors.clone(),
            kbar: p.kbar(),
            rng_seed: self.seed,
            stream_point,
            emission_mode: p.emission_mode,
        }
    }

    pub fn quantum_params(&self) -> QuantumParams {
        QuantumParams {
            n_max: self.ensemble.n_max,
            jump_timing: self.ensemble.jump_timing,
        }
    }
}
