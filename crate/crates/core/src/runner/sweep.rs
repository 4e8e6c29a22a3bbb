//! Phase and ratio sweeps over both engines.

use serde::{Deserialize, Serialize};

use super::config::{Mode, RunConfig};
use crate::analysis::{classify_lineshape, energy_of_samples, zero_velocity_fraction, Lineshape, MomentumDistribution};
use crate::classical::run_classical_ensemble;
use crate::error::{Error, Result};
use crate::pulse_train::{build_train_spec, resolve_timeline_with_steps, single_train_spec, ResolvedTimeline, TwoFreqTrainSpec};
use crate::quantum::run_mcwf_ensemble_binned;
use crate::rng::point_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Classical,
    Quantum,
}

impl Engine {
    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Classical => "classical",
            Engine::Quantum => "quantum",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Engine::Classical),
            "quantum" => Ok(Engine::Quantum),
            other => Err(Error::Analysis(format!("unknown engine `{other}`"))),
        }
    }
}

/// Physical coordinates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// ψ₀ in degrees for phase sweeps, r′ for ratio sweeps.
    pub sweep_value: f64,
    pub ratio: f64,
    /// Wrapped into `[0°, 360°)`.
    pub psi0_deg: f64,
}

impl SweepPoint {
    pub fn alpha0(&self) -> f64 {
        self.psi0_deg / 360.0
    }

    pub fn new(sweep_value: f64, ratio: f64, psi0_deg: f64) -> Self {
        let wrapped = psi0_deg.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs.
        let wrapped = if wrapped >= 360.0 { 0.0 } else { wrapped };
        Self {
            sweep_value,
            ratio,
            psi0_deg: wrapped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub ratio: f64,
    pub psi0_deg: f64,
    pub engine: Engine,
    pub energy: f64,
    pub energy_stderr: f64,
    pub zero_velocity_fraction: f64,
    pub lineshape: Lineshape,
    /// Relative path of the distribution CSV once written.
    pub distribution: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: RunConfig,
    pub rows: Vec<SweepRow>,
    /// One per row.
    pub distributions: Vec<MomentumDistribution<f64>>,
}

impl SweepResult {
    pub fn row(&self, sweep_value: f64, engine: Engine) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.engine == engine)
    }
}

pub fn train_spec(config: &RunConfig, point: &SweepPoint) -> Result<TwoFreqTrainSpec<f64>> {
    let p = &config.physics;
    let shape = p.shape()?;
    if p.single_train {
        single_train_spec(p.n_total, p.kappa1, shape)
    } else {
        build_train_spec(point.ratio, point.alpha0(), p.n_total, p.kappa1, p.kappa2, shape)
    }
}

pub fn timeline(config: &RunConfig, point: &SweepPoint) -> Result<ResolvedTimeline<f64>> {
    Ok(resolve_timeline_with_steps(&train_spec(config, point)?, config.ensemble.min_steps_per_pulse))
}

fn distribution_name(index: usize, engine: Engine) -> String {
    format!("distributions/point{index:04}_{}.csv", engine.as_str())
}

/// Runs the configured engines at one point, in the order classical, quantum.
pub fn run_point(config: &RunConfig, point: &SweepPoint, index: usize) -> Result<Vec<(SweepRow, MomentumDistribution<f64>)>> {
    let timeline = timeline(config, point)?;
    let params = config.ensemble_params(point_key(point.ratio, point.alpha0()));
    let bin_width = config.analysis.bin_width;
    let mut out = Vec::new();
    let mut push = |engine: Engine, energy: (f64, f64), dist: MomentumDistribution<f64>| -> Result<()> {
        let lineshape = classify_lineshape(&dist).map(|r| r.class).unwrap_or(Lineshape::Undetermined);
        let row = SweepRow {
            sweep_value: point.sweep_value,
            ratio: point.ratio,
            psi0_deg: point.psi0_deg,
            engine,
            energy: energy.0,
            energy_stderr: energy.1,
            zero_velocity_fraction: zero_velocity_fraction(&dist, config.analysis.epsilon)?,
            lineshape,
            distribution: distribution_name(index, engine),
        };
        out.push((row, dist));
        Ok(())
    };
    if config.engine.classical() {
        let samples = run_classical_ensemble(&timeline, &params, config.ensemble.classical_trajectories)?;
        let e = energy_of_samples(&samples.momenta)?;
        push(Engine::Classical, (e.mean, e.stderr), MomentumDistribution::from_samples(&samples.momenta, bin_width)?)?;
    }
    if config.engine.quantum() {
        let q = run_mcwf_ensemble_binned(
            &timeline,
            &params,
            &config.quantum_params(),
            config.ensemble.quantum_trajectories,
            bin_width,
        )?;
        push(Engine::Quantum, (q.energy.mean, q.energy.stderr), q.distribution)?;
    }
    Ok(out)
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Runs the given points on a pool of `config.workers` threads.
pub fn run_points(config: &RunConfig, points: &[SweepPoint]) -> Result<SweepResult> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    let mut rows = Vec::new();
    let mut distributions = Vec::new();
    for (index, point) in points.iter().enumerate() {
        for (row, dist) in pool.install(|| run_point(config, point, index))? {
            rows.push(row);
            distributions.push(dist);
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        rows,
        distributions,
    })
}

fn require_mode(config: &RunConfig, mode: Mode) -> Result<()> {
    if config.mode == mode {
        Ok(())
    } else {
        Err(Error::param("mode", format!("expected {mode:?}, config says {:?}", config.mode)))
    }
}

pub fn phase_points(config: &RunConfig) -> Vec<SweepPoint> {
    config
        .phase_sweep
        .values()
        .into_iter()
        .map(|psi| SweepPoint::new(psi, config.physics.ratio, psi))
        .collect()
}

/// `r = 1/r′` and `ψ₀ = ψ′₀·r`.
pub fn ratio_points(config: &RunConfig) -> Vec<SweepPoint> {
    let psi_prime = config.ratio_sweep.psi_prime_deg;
    config
        .ratio_sweep
        .r_prime
        .iter()
        .map(|&r_prime| {
            let ratio = 1.0 / r_prime;
            SweepPoint::new(r_prime, ratio, psi_prime * ratio)
        })
        .collect()
}

pub fn run_phase_sweep(config: &RunConfig) -> Result<SweepResult> {
    require_mode(config, Mode::PhaseSweep)?;
    run_points(config, &phase_points(config))
}

pub fn run_ratio_sweep(config: &RunConfig) -> Result<SweepResult> {
    require_mode(config, Mode::RatioSweep)?;
    run_points(config, &ratio_points(config))
}

pub fn run_single(config: &RunConfig) -> Result<SweepResult> {
    require_mode(config, Mode::Single)?;
    let psi = config.single.psi0_deg;
    run_points(config, &[SweepPoint::new(psi, config.physics.ratio, psi)])
}

/// Dispatches on `config.mode`.
pub fn run(config: &RunConfig) -> Result<SweepResult> {
    match config.mode {
        Mode::PhaseSweep => run_phase_sweep(config),
        Mode::RatioSweep => run_ratio_sweep(config),
        Mode::Single => run_single(config),
    }
}
