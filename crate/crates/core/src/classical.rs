//! Classical Monte Carlo ensemble: exact pendulum flow inside each grid cell,
//! free rotation between pulses, and random recoils from spontaneous emission.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::pendulum_step;
use crate::error::{Error, Result};
use crate::pulse_train::{ResolvedTimeline, ResultantPulse};
use crate::rng::{StreamKey, StreamTag};
use crate::scalar::{wrap_phase, Real};
use crate::units::thermal_spread_recoils;

/// One trajectory in scaled phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState<T> {
    pub phi: T,
    pub rho: T,
    /// Local kick strength relative to the beam centre.
    pub kick_factor: T,
}

/// How emission events are counted when pulses overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionMode {
    /// One draw with probability η per resultant pulse.
    #[default]
    PerResultantPulse,
    /// One draw per constituent pulse merged into the resultant pulse.
    PerConstituentPulse,
}

/// Physical parameters of an ensemble shared by both engines.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams<T> {
    pub temperature_uk: T,
    /// Gaussian σ of the cloud's transverse position, mm.
    pub cloud_sigma_mm: T,
    /// Gaussian σ of the beam intensity profile, mm.
    pub beam_sigma_mm: T,
    /// Emission probability per pulse of area `max(κ₁, κ₂)`.
    pub eta_per_pulse: T,
    /// Kick-strength multipliers drawn with equal probability.
    pub sublevel_factors: Vec<T>,
    pub kbar: T,
    pub rng_seed: u64,
    /// Identifies the sweep point; see [`crate::rng::point_key`].
    pub stream_point: u64,
    pub emission_mode: EmissionMode,
}

impl<T: Real> EnsembleParams<T> {
    /// Point cloud at zero temperature with no emission and unit sublevel factor.
    pub fn ideal(kbar: T) -> Self {
        Self {
            temperature_uk: T::zero(),
            cloud_sigma_mm: T::zero(),
            beam_sigma_mm: T::lit(0.72),
            eta_per_pulse: T::zero(),
            sublevel_factors: vec![T::one()],
            kbar,
            rng_seed: 0,
            stream_point: 0,
            emission_mode: EmissionMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = |name: &str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and non-negative, got {v}")))
            }
        };
        non_negative("temperature_uk", self.temperature_uk)?;
        non_negative("cloud_sigma_mm", self.cloud_sigma_mm)?;
        if !(self.beam_sigma_mm > T::zero()) {
            return Err(Error::param("beam_sigma_mm", format!("must be positive, got {}", self.beam_sigma_mm)));
        }
        if !(self.eta_per_pulse >= T::zero() && self.eta_per_pulse < T::one()) {
            return Err(Error::param("eta_per_pulse", format!("must lie in [0, 1), got {}", self.eta_per_pulse)));
        }
        if self.sublevel_factors.is_empty() || self.sublevel_factors.iter().any(|f| !(*f >= T::zero() && f.is_finite())) {
            return Err(Error::param("sublevel_factors", "must be a non-empty list of non-negative numbers"));
        }
        if !(self.kbar > T::zero()) {
            return Err(Error::param("kbar", format!("must be positive, got {}", self.kbar)));
        }
        Ok(())
    }

    pub(crate) fn stream(&self) -> StreamKey {
        StreamKey::new(self.rng_seed, self.stream_point)
    }
}

/// Final momenta in two-photon recoils (`ρ/k̄`), in trajectory order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSamples<T> {
    pub momenta: Vec<T>,
}

impl<T> MomentumSamples<T> {
    pub fn count(&self) -> usize {
        self.momenta.len()
    }
}

#[inline]
fn uniform<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.random::<f64>())
}

#[inline]
fn normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(StandardNormal.sample(rng))
}

/// Beam intensity at a transverse cloud position times a random sublevel factor.
pub(crate) fn sample_kick_factor<T: Real>(params: &EnsembleParams<T>, rng: &mut ChaCha8Rng) -> T {
    let x = normal::<T>(rng) * params.cloud_sigma_mm;
    let s = params.beam_sigma_mm;
    let beam = (-(x * x) / (T::lit(2.0) * s * s)).exp();
    let choice = rng.random_range(0..params.sublevel_factors.len());
    beam * params.sublevel_factors[choice]
}

/// Initial momentum `ρ = k̄ n` with thermal `n`.
pub(crate) fn sample_thermal_momentum<T: Real>(params: &EnsembleParams<T>, rng: &mut ChaCha8Rng) -> T {
    let spread = T::lit(thermal_spread_recoils(params.temperature_uk.to_f64_lossy()));
    params.kbar * spread * normal::<T>(rng)
}

pub fn sample_initial_classical<T: Real>(params: &EnsembleParams<T>, rng: &mut ChaCha8Rng) -> ClassicalState<T> {
    let phi = uniform::<T>(rng) * T::TAU() - T::PI();
    let phi = if phi >= T::PI() { -T::PI() } else { phi };
    let rho = sample_thermal_momentum(params, rng);
    let kick_factor = sample_kick_factor(params, rng);
    ClassicalState { phi, rho, kick_factor }
}

pub fn free_evolve<T: Real>(state: ClassicalState<T>, dtau: T) -> ClassicalState<T> {
    ClassicalState {
        phi: wrap_phase(state.phi + dtau * state.rho),
        ..state
    }
}

/// With probability `eta`, adds a recoil uniform in `[−k̄/2, k̄/2)`.
pub fn maybe_spontaneous_emission<T: Real>(state: ClassicalState<T>, eta: T, kbar: T, rng: &mut ChaCha8Rng) -> ClassicalState<T> {
    if eta <= T::zero() || uniform::<T>(rng) >= eta {
        return state;
    }
    let recoil = (uniform::<T>(rng) - T::lit(0.5)) * kbar;
    ClassicalState {
        rho: state.rho + recoil,
        ..state
    }
}

#[inline]
fn cell<T: Real>(state: ClassicalState<T>, rate: T, dtau: T) -> ClassicalState<T> {
    let (phi, rho) = pendulum_step(state.phi, state.rho, state.kick_factor * rate, dtau);
    ClassicalState { phi, rho, ..state }
}

/// Runs one resultant pulse cell by cell, with the emission check at its temporal midpoint.
pub fn evolve_pulse<T: Real>(
    mut state: ClassicalState<T>,
    pulse: &ResultantPulse<T>,
    rng: &mut ChaCha8Rng,
    params: &EnsembleParams<T>,
) -> ClassicalState<T> {
    let n = pulse.n_steps();
    let half = n / 2;
    for &rate in &pulse.rates[..half] {
        state = cell(state, rate, pulse.step);
    }
    // An odd count puts the midpoint inside a cell; the flow is exact, so split it there.
    let middle = if n % 2 == 1 { Some(pulse.rates[half]) } else { None };
    let half_step = pulse.step * T::lit(0.5);
    if let Some(rate) = middle {
        state = cell(state, rate, half_step);
    }
    let draws = match params.emission_mode {
        EmissionMode::PerResultantPulse => 1,
        EmissionMode::PerConstituentPulse => pulse.constituents.len().max(1),
    };
    for _ in 0..draws {
        state = maybe_spontaneous_emission(state, params.eta_per_pulse, params.kbar, rng);
    }
    if let Some(rate) = middle {
        state = cell(state, rate, half_step);
    }
    for &rate in &pulse.rates[half + n % 2..] {
        state = cell(state, rate, pulse.step);
    }
    state
}

/// Propagates one trajectory through every pulse; returns the final state.
pub fn run_classical_trajectory<T: Real>(
    timeline: &ResolvedTimeline<T>,
    params: &EnsembleParams<T>,
    rng: &mut ChaCha8Rng,
) -> ClassicalState<T> {
    let mut state = sample_initial_classical(params, rng);
    let mut clock: Option<T> = None;
    for pulse in &timeline.pulses {
        if let Some(end) = clock {
            state = free_evolve(state, pulse.start - end);
        }
        state = evolve_pulse(state, pulse, rng, params);
        clock = Some(pulse.end());
    }
    state
}

/// Runs `n_traj` independent trajectories on the current rayon pool.
/// Results are in trajectory order, so they do not depend on the worker count.
pub fn run_classical_ensemble<T: Real>(
    timeline: &ResolvedTimeline<T>,
    params: &EnsembleParams<T>,
    n_traj: usize,
) -> Result<MomentumSamples<T>> {
    if n_traj == 0 {
        return Err(Error::param("n_traj", "must be at least 1"));
    }
    params.validate()?;
    let stream = params.stream();
    let momenta = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.trajectory(StreamTag::Classical, i as u64);
            run_classical_trajectory(timeline, params, &mut rng).rho / params.kbar
        })
        .collect();
    Ok(MomentumSamples { momenta })
}
