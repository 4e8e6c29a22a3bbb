//! Monte Carlo wavefunction engine on a momentum ladder `ρ_n = n k̄ + q`.
//!
//! Each grid cell of a pulse is a Strang step: half free phase, kick and
//! decay on the position grid, half free phase. Spontaneous emission is a
//! non-Hermitian decay followed by a jump when the norm falls below a random
//! threshold.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::analysis::{mean_with_error, Estimate, Histogram, MomentumDistribution, DEFAULT_BIN_WIDTH};
use crate::classical::{sample_kick_factor, sample_thermal_momentum, EnsembleParams};
use crate::error::{Error, Result};
use crate::pulse_train::{ResolvedTimeline, ResultantPulse};
use crate::rng::StreamTag;
use crate::scalar::Real;

pub const DEFAULT_N_MAX: usize = 1024;
pub const MIN_N_MAX: usize = 32;
/// Largest tolerated occupation of the two outermost ladder states.
pub const EDGE_OCCUPATION_LIMIT: f64 = 1e-8;
/// Trajectories per reduction chunk; fixed so sums do not depend on scheduling.
const CHUNK: usize = 32;

/// Amplitudes `c_n` for `n ∈ [−n_max, n_max)`; index `j` holds `n = j − n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction<T> {
    pub amplitudes: Vec<Complex<T>>,
    pub n_max: usize,
    /// Quasimomentum in `[−k̄/2, k̄/2)`.
    pub q: T,
    pub kbar: T,
}

impl<T: Real> Wavefunction<T> {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Ladder index `n` of storage slot `j`.
    #[inline]
    pub fn ladder(&self, j: usize) -> i64 {
        j as i64 - self.n_max as i64
    }

    /// Scaled momentum `n k̄ + q` of slot `j`.
    #[inline]
    pub fn momentum(&self, j: usize) -> T {
        T::lit(self.ladder(j) as f64) * self.kbar + self.q
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    /// `⟨ρ⟩` of the normalized state.
    pub fn mean_momentum(&self) -> T {
        let weighted = self
            .amplitudes
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (j, c)| acc + c.norm_sqr() * self.momentum(j));
        weighted / self.norm_sqr()
    }

    /// `⟨(ρ/k̄)²⟩/2` of the normalized state.
    pub fn energy_recoils(&self) -> T {
        let second = self.amplitudes.iter().enumerate().fold(T::zero(), |acc, (j, c)| {
            let n = self.momentum(j) / self.kbar;
            acc + c.norm_sqr() * n * n
        });
        second / self.norm_sqr() * T::lit(0.5)
    }

    /// Relative occupation of the outermost state at each end.
    pub fn edge_occupation(&self) -> T {
        let last = self.amplitudes.len() - 1;
        (self.amplitudes[0].norm_sqr() + self.amplitudes[last].norm_sqr()) / self.norm_sqr()
    }

    pub fn normalize(&mut self) {
        let scale = T::one() / self.norm_sqr().sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c = *c * scale);
    }
}

/// Starts in the ladder state nearest to `initial_momentum`.
pub fn init_wavefunction<T: Real>(n_max: usize, initial_momentum: T, kbar: T) -> Result<Wavefunction<T>> {
    if n_max < MIN_N_MAX || !n_max.is_power_of_two() {
        return Err(Error::param("n_max", format!("must be a power of two ≥ {MIN_N_MAX}, got {n_max}")));
    }
    if !(kbar > T::zero()) {
        return Err(Error::param("kbar", format!("must be positive, got {kbar}")));
    }
    let n0 = (initial_momentum / kbar + T::lit(0.5)).floor();
    let limit = T::from_usize_lossy(n_max / 2);
    if !(n0.abs() < limit) {
        return Err(Error::param(
            "initial_momentum",
            format!("{initial_momentum} is outside the central half of the ladder (n_max = {n_max})"),
        ));
    }
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 2 * n_max];
    let n0_int = n0.to_i64().expect("bounded by n_max");
    amplitudes[(n0_int + n_max as i64) as usize] = Complex::new(T::one(), T::zero());
    Ok(Wavefunction {
        amplitudes,
        n_max,
        q: initial_momentum - n0 * kbar,
        kbar,
    })
}

/// Diagonal factors `exp(−i ρ_n² dτ / 2k̄)`.
fn free_factors<T: Real>(psi: &Wavefunction<T>, dtau: T) -> Vec<Complex<T>> {
    let scale = dtau / (T::lit(2.0) * psi.kbar);
    (0..psi.len())
        .map(|j| {
            let p = psi.momentum(j);
            Complex::from_polar(T::one(), -p * p * scale)
        })
        .collect()
}

fn apply_diagonal<T: Real>(psi: &mut Wavefunction<T>, factors: &[Complex<T>]) {
    psi.amplitudes.iter_mut().zip(factors).for_each(|(c, f)| *c = *c * *f);
}

/// Free rotation between pulses.
pub fn free_propagate<T: Real>(psi: &mut Wavefunction<T>, dtau: T) {
    if dtau == T::zero() {
        return;
    }
    let factors = free_factors(psi, dtau);
    apply_diagonal(psi, &factors);
}

/// Per-worker FFT plans and scratch for one ladder size.
pub struct SplitStep<T: Real> {
    n_max: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    /// `cos φ_j` on the position grid `φ_j = 2πj/L`.
    cosines: Vec<T>,
}

impl<T: Real> SplitStep<T> {
    pub fn new(n_max: usize) -> Self {
        let len = 2 * n_max;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let cosines = (0..len)
            .map(|j| (T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(len)).cos())
            .collect();
        Self {
            n_max,
            forward,
            inverse,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
            cosines,
        }
    }

    /// Multiplies the position-space wavefunction by
    /// `exp(−i·phase_rate·dτ·cos φ/k̄ − decay_rate·dτ·(1 + cos φ)/2)`.
    ///
    /// On the grid `φ_j = 2πj/L` the `(−1)^j` factors from the ladder offset
    /// cancel between the two transforms, so plain FFTs suffice.
    fn potential(&mut self, psi: &mut Wavefunction<T>, phase_rate: T, decay_rate: T, dtau: T) {
        debug_assert_eq!(psi.n_max, self.n_max);
        self.inverse.process_with_scratch(&mut psi.amplitudes, &mut self.scratch);
        let len = T::from_usize_lossy(psi.len());
        let phase = -phase_rate * dtau / psi.kbar;
        let decay = -decay_rate * dtau * T::lit(0.5);
        for (c, &cos) in psi.amplitudes.iter_mut().zip(&self.cosines) {
            let magnitude = (decay * (T::one() + cos)).exp() / len;
            *c = *c * Complex::from_polar(magnitude, phase * cos);
        }
        self.forward.process_with_scratch(&mut psi.amplitudes, &mut self.scratch);
    }

    /// One Strang step of a pulse cell with rate `k_rate` and decay `k_rate·eta_rate`.
    pub fn kick_step(&mut self, psi: &mut Wavefunction<T>, k_rate: T, eta_rate: T, dtau: T) {
        let half = free_factors(psi, dtau * T::lit(0.5));
        self.cell(psi, &half, k_rate, k_rate * eta_rate, dtau);
    }

    fn cell(&mut self, psi: &mut Wavefunction<T>, half: &[Complex<T>], phase_rate: T, decay_rate: T, dtau: T) {
        apply_diagonal(psi, half);
        if phase_rate != T::zero() || decay_rate != T::zero() {
            self.potential(psi, phase_rate, decay_rate, dtau);
        }
        apply_diagonal(psi, half);
    }
}

/// Single Strang step with a throwaway workspace.
pub fn kick_step<T: Real>(psi: &mut Wavefunction<T>, k_rate: T, eta_rate: T, dtau: T) {
    SplitStep::new(psi.n_max).kick_step(psi, k_rate, eta_rate, dtau);
}

/// When the norm is compared against the jump threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpTiming {
    /// Once, at the end of each resultant pulse.
    #[default]
    PulseEnd,
    /// After every grid cell.
    WithinPulse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord<T> {
    pub pulse_index: usize,
    pub pre_jump_norm: T,
    pub recoil: T,
}

/// Shifts the momentum of every component by `recoil`, keeping `q` in `[−k̄/2, k̄/2)`
/// by moving amplitudes along the ladder.
pub fn apply_recoil<T: Real>(psi: &mut Wavefunction<T>, recoil: T) {
    let q = psi.q + recoil;
    let shift = (q / psi.kbar + T::lit(0.5)).floor();
    psi.q = q - shift * psi.kbar;
    let shift = shift.to_i64().unwrap_or(0);
    let len = psi.len() as i64;
    if shift == 0 {
        return;
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut shifted = vec![zero; psi.len()];
    for (j, &c) in psi.amplitudes.iter().enumerate() {
        let target = j as i64 + shift;
        if (0..len).contains(&target) {
            shifted[target as usize] = c;
        }
    }
    psi.amplitudes = shifted;
}

/// Jumps if `‖ψ‖² < threshold`: recoil uniform in `[−k̄/2, k̄/2)`, renormalize,
/// and draw a fresh threshold.
pub fn mcwf_check_jump<T: Real>(
    psi: &mut Wavefunction<T>,
    threshold: &mut T,
    pulse_index: usize,
    rng: &mut ChaCha8Rng,
) -> Option<JumpRecord<T>> {
    let norm = psi.norm_sqr();
    if norm >= *threshold {
        return None;
    }
    let recoil = (T::lit(rng.random::<f64>()) - T::lit(0.5)) * psi.kbar;
    apply_recoil(psi, recoil);
    psi.normalize();
    *threshold = T::lit(rng.random::<f64>());
    Some(JumpRecord {
        pulse_index,
        pre_jump_norm: norm,
        recoil,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantumParams {
    pub n_max: usize,
    pub jump_timing: JumpTiming,
}

impl Default for QuantumParams {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            jump_timing: JumpTiming::default(),
        }
    }
}

/// Decay rate per unit pulse area giving jump probability `η` for a pulse of
/// area `reference_area` acting on a momentum eigenstate.
pub fn eta_rate<T: Real>(eta: T, reference_area: T) -> T {
    if eta <= T::zero() || reference_area <= T::zero() {
        return T::zero();
    }
    -(T::one() - eta).ln() / reference_area
}

/// Runs one resultant pulse. The kick uses `kick_factor·k`; the decay uses `k`
/// alone, matching the classical engine where η does not depend on the local intensity.
#[allow(clippy::too_many_arguments)]
pub fn evolve_pulse_quantum<T: Real>(
    psi: &mut Wavefunction<T>,
    pulse: &ResultantPulse<T>,
    kick_factor: T,
    eta_rate: T,
    workspace: &mut SplitStep<T>,
    timing: JumpTiming,
    threshold: &mut T,
    pulse_index: usize,
    rng: &mut ChaCha8Rng,
    jumps: &mut Vec<JumpRecord<T>>,
) {
    let mut half = free_factors(psi, pulse.step * T::lit(0.5));
    let mut q = psi.q;
    for &rate in &pulse.rates {
        // A jump inside the pulse moves q, which changes the free phases.
        if psi.q != q {
            half = free_factors(psi, pulse.step * T::lit(0.5));
            q = psi.q;
        }
        workspace.cell(psi, &half, kick_factor * rate, rate * eta_rate, pulse.step);
        if timing == JumpTiming::WithinPulse {
            jumps.extend(mcwf_check_jump(psi, threshold, pulse_index, rng));
        }
    }
    if timing == JumpTiming::PulseEnd {
        jumps.extend(mcwf_check_jump(psi, threshold, pulse_index, rng));
    }
}

/// Final state of one trajectory.
#[derive(Debug, Clone)]
pub struct QuantumTrajectory<T> {
    pub psi: Wavefunction<T>,
    pub jumps: Vec<JumpRecord<T>>,
}

pub fn run_mcwf_trajectory<T: Real>(
    timeline: &ResolvedTimeline<T>,
    params: &EnsembleParams<T>,
    quantum: &QuantumParams,
    index: usize,
    workspace: &mut SplitStep<T>,
) -> Result<QuantumTrajectory<T>> {
    let mut rng = params.stream().trajectory(StreamTag::Quantum, index as u64);
    let p0 = sample_thermal_momentum(params, &mut rng);
    let kick_factor = sample_kick_factor(params, &mut rng);
    let mut psi = init_wavefunction(quantum.n_max, p0, params.kbar)?;
    let mut threshold = T::lit(rng.random::<f64>());
    let rate = eta_rate(params.eta_per_pulse, timeline.reference_area);
    let mut jumps = Vec::new();
    let mut clock: Option<T> = None;
    let limit = T::lit(EDGE_OCCUPATION_LIMIT);
    for (i, pulse) in timeline.pulses.iter().enumerate() {
        if let Some(end) = clock {
            free_propagate(&mut psi, pulse.start - end);
        }
        evolve_pulse_quantum(
            &mut psi,
            pulse,
            kick_factor,
            rate,
            workspace,
            quantum.jump_timing,
            &mut threshold,
            i,
            &mut rng,
            &mut jumps,
        );
        let edge = psi.edge_occupation();
        if !(edge < limit) {
            return Err(Error::GridOverflow {
                trajectory: index,
                occupation: edge.to_f64_lossy(),
            });
        }
        clock = Some(pulse.end());
    }
    Ok(QuantumTrajectory { psi, jumps })
}

/// Incoherent average over trajectories.
#[derive(Debug, Clone)]
pub struct QuantumEnsemble<T> {
    pub distribution: MomentumDistribution<T>,
    /// Mean over trajectories of each trajectory's exact `⟨n²⟩/2`.
    pub energy: Estimate<T>,
    pub trajectories: usize,
    pub jumps: usize,
}

struct ChunkResult<T> {
    histogram: Histogram<T>,
    energies: Vec<T>,
    jumps: usize,
}

pub fn run_mcwf_ensemble<T: Real>(
    timeline: &ResolvedTimeline<T>,
    params: &EnsembleParams<T>,
    quantum: &QuantumParams,
    n_traj: usize,
) -> Result<QuantumEnsemble<T>> {
    run_mcwf_ensemble_binned(timeline, params, quantum, n_traj, T::lit(DEFAULT_BIN_WIDTH))
}

pub fn run_mcwf_ensemble_binned<T: Real>(
    timeline: &ResolvedTimeline<T>,
    params: &EnsembleParams<T>,
    quantum: &QuantumParams,
    n_traj: usize,
    bin_width: T,
) -> Result<QuantumEnsemble<T>> {
    if n_traj == 0 {
        return Err(Error::param("n_traj", "must be at least 1"));
    }
    params.validate()?;
    let extent = T::from_usize_lossy(quantum.n_max + 1);
    let empty = Histogram::covering(extent, bin_width)?;
    let chunks: Vec<Result<ChunkResult<T>>> = (0..n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map_init(
            || SplitStep::new(quantum.n_max),
            |workspace, chunk| {
                let mut result = ChunkResult {
                    histogram: empty.clone(),
                    energies: Vec::with_capacity(CHUNK),
                    jumps: 0,
                };
                for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(n_traj) {
                    let trajectory = run_mcwf_trajectory(timeline, params, quantum, index, workspace)?;
                    let psi = &trajectory.psi;
                    let norm = psi.norm_sqr();
                    for (j, c) in psi.amplitudes.iter().enumerate() {
                        let weight = c.norm_sqr() / norm;
                        if weight > T::zero() {
                            result.histogram.add(psi.momentum(j) / psi.kbar, weight);
                        }
                    }
                    result.energies.push(psi.energy_recoils());
                    result.jumps += trajectory.jumps.len();
                }
                Ok(result)
            },
        )
        .collect();

    let mut histogram = empty;
    let mut energies = Vec::with_capacity(n_traj);
    let mut jumps = 0;
    for chunk in chunks {
        let chunk = chunk?;
        histogram.merge(&chunk.histogram);
        energies.extend(chunk.energies);
        jumps += chunk.jumps;
    }
    Ok(QuantumEnsemble {
        distribution: histogram.into_distribution()?.trimmed(),
        energy: mean_with_error(energies)?,
        trajectories: n_traj,
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::run_classical_ensemble;
    use crate::analysis::energy_of_samples;
    use crate::pulse_train::{resolve_timeline, single_train_spec, PulseShape, PulseShapeParams};
    use rand::SeedableRng;

    const KBAR: f64 = 3.116;

    fn square_timeline(kappa: f64, n: usize) -> ResolvedTimeline<f64> {
        resolve_timeline(&single_train_spec(n, kappa, PulseShape::square(0.016).unwrap()).unwrap())
    }

    fn run_pulses(psi: &mut Wavefunction<f64>, timeline: &ResolvedTimeline<f64>, eta: f64) {
        let mut ws = SplitStep::new(psi.n_max);
        let rate = eta_rate(eta, timeline.reference_area);
        let mut clock = None;
        for p in &timeline.pulses {
            if let Some(end) = clock {
                free_propagate(psi, p.start - end);
            }
            for &k in &p.rates {
                ws.kick_step(psi, k, rate, p.step);
            }
            clock = Some(p.end());
        }
    }

    #[test]
    fn initial_state() {
        let psi = init_wavefunction(64, 0.0, KBAR).unwrap();
        assert_eq!(psi.amplitudes[64], Complex::new(1.0, 0.0));
        assert_eq!(psi.q, 0.0);
        assert_eq!(psi.norm_sqr(), 1.0);
        let psi = init_wavefunction(64, 0.6 * KBAR, KBAR).unwrap();
        assert_eq!(psi.amplitudes[65].re, 1.0);
        assert!((psi.q + 0.4 * KBAR).abs() < 1e-12);
        assert!(init_wavefunction(64, 40.0 * KBAR, KBAR).is_err());
        assert!(init_wavefunction(100, 0.0, KBAR).is_err());
        assert!(init_wavefunction(16, 0.0, KBAR).is_err());
    }

    #[test]
    fn free_propagation_is_diagonal() {
        let mut psi = init_wavefunction(64, 0.3, KBAR).unwrap();
        run_pulses(&mut psi, &square_timeline(2.0, 2), 0.0);
        let before = psi.clone();
        free_propagate(&mut psi, 0.0);
        assert_eq!(psi, before);
        free_propagate(&mut psi, 0.731);
        for (a, b) in psi.amplitudes.iter().zip(&before.amplitudes) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        assert!((psi.energy_recoils() - before.energy_recoils()).abs() < 1e-12);
    }

    #[test]
    fn talbot_time_is_identity() {
        let mut psi = init_wavefunction(64, 0.0, KBAR).unwrap();
        run_pulses(&mut psi, &square_timeline(3.0, 1), 0.0);
        let before = psi.clone();
        free_propagate(&mut psi, 4.0 * std::f64::consts::PI / KBAR);
        for (a, b) in psi.amplitudes.iter().zip(&before.amplitudes) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_kick_is_free_flight() {
        let mut a = init_wavefunction(64, 1.0, KBAR).unwrap();
        run_pulses(&mut a, &square_timeline(1.0, 1), 0.0);
        let mut b = a.clone();
        kick_step(&mut a, 0.0, 0.0, 0.013);
        free_propagate(&mut b, 0.013);
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn unitary_without_decay() {
        let mut psi = init_wavefunction(256, 0.0, KBAR).unwrap();
        let timeline = square_timeline(10.1, 100);
        let mut ws = SplitStep::new(psi.n_max);
        let mut clock = None;
        for p in &timeline.pulses {
            if let Some(end) = clock {
                free_propagate(&mut psi, p.start - end);
            }
            let before = psi.norm_sqr();
            for &k in &p.rates {
                ws.kick_step(&mut psi, k, 0.0, p.step);
            }
            assert!((psi.norm_sqr().sqrt() - before.sqrt()).abs() < 1e-10);
            clock = Some(p.end());
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decay_over_one_pulse_matches_eta() {
        for eta in [0.028f64, 0.1] {
            let mut psi = init_wavefunction(64, 0.0, KBAR).unwrap();
            run_pulses(&mut psi, &square_timeline(10.1, 1), eta);
            let norm = psi.norm_sqr();
            assert!(((1.0 - norm) - eta).abs() < 0.1 * eta, "eta {eta}: norm² {norm}");
        }
    }

    #[test]
    fn recoil_shifts_mean_momentum_exactly() {
        let mut psi = init_wavefunction(128, 0.4, KBAR).unwrap();
        run_pulses(&mut psi, &square_timeline(4.0, 3), 0.0);
        for u in [0.7 * KBAR, -0.49 * KBAR, 0.2f64, 2.9] {
            let before = psi.mean_momentum();
            apply_recoil(&mut psi, u);
            assert!(psi.q >= -KBAR / 2.0 && psi.q < KBAR / 2.0);
            assert!((psi.mean_momentum() - before - u).abs() < 1e-10);
        }
    }

    #[test]
    fn jump_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut psi = init_wavefunction(64, 0.0, KBAR).unwrap();
        let mut threshold = 0.3;
        assert!(mcwf_check_jump(&mut psi, &mut threshold, 0, &mut rng).is_none());
        psi.amplitudes.iter_mut().for_each(|c| *c = *c * 0.5);
        let record = mcwf_check_jump(&mut psi, &mut threshold, 4, &mut rng).unwrap();
        assert_eq!(record.pulse_index, 4);
        assert!((record.pre_jump_norm - 0.25).abs() < 1e-15);
        assert!(record.recoil >= -KBAR / 2.0 && record.recoil < KBAR / 2.0);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((psi.mean_momentum() - record.recoil).abs() < 1e-12);
        assert!((0.0..1.0).contains(&threshold));
    }

    #[test]
    fn no_jumps_without_emission() {
        let timeline = square_timeline(10.1, 30);
        let mut params = EnsembleParams::ideal(KBAR);
        params.temperature_uk = 5.0;
        let quantum = QuantumParams { n_max: 256, ..Default::default() };
        let out = run_mcwf_ensemble(&timeline, &params, &quantum, 40).unwrap();
        assert_eq!(out.jumps, 0);
        params.eta_per_pulse = 0.05;
        let out = run_mcwf_ensemble(&timeline, &params, &quantum, 40).unwrap();
        assert!(out.jumps > 20, "{}", out.jumps);
    }

    #[test]
    fn grid_overflow_names_trajectory() {
        let timeline = square_timeline(40.0, 30);
        let params = EnsembleParams::ideal(KBAR);
        let quantum = QuantumParams { n_max: 32, ..Default::default() };
        match run_mcwf_ensemble(&timeline, &params, &quantum, 3) {
            Err(Error::GridOverflow { trajectory, .. }) => assert_eq!(trajectory, 0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn unkicked_ensemble_keeps_thermal_distribution() {
        let timeline = square_timeline(0.0, 5);
        let mut params = EnsembleParams::ideal(KBAR);
        params.temperature_uk = 5.0;
        let quantum = QuantumParams { n_max: 64, ..Default::default() };
        let out = run_mcwf_ensemble(&timeline, &params, &quantum, 2000).unwrap();
        // Momenta are only moved onto the ladder-plus-q grid, i.e. not at all.
        assert!((out.energy.mean - 3.15).abs() < 4.0 * out.energy.stderr + 0.05, "{:?}", out.energy);
    }

    #[test]
    fn deterministic_across_pools() {
        let timeline = square_timeline(5.0, 8);
        let mut params = EnsembleParams::ideal(KBAR);
        params.temperature_uk = 5.0;
        params.eta_per_pulse = 0.1;
        params.cloud_sigma_mm = 0.5;
        let quantum = QuantumParams { n_max: 64, ..Default::default() };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_mcwf_ensemble(&timeline, &params, &quantum, 100).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.distribution, b.distribution);
        assert_eq!(a.energy.mean.to_bits(), b.energy.mean.to_bits());
    }

    #[test]
    fn classical_limit_at_small_kbar() {
        let kbar = 0.2f64;
        let shape = PulseShape::Erf(PulseShapeParams::measured(30.0));
        let timeline = resolve_timeline(&single_train_spec(5, 1.5, shape).unwrap());
        let params = EnsembleParams::ideal(kbar);
        let classical = run_classical_ensemble(&timeline, &params, 200_000).unwrap();
        let e_classical = energy_of_samples(&classical.momenta).unwrap();
        let quantum = QuantumParams { n_max: 256, ..Default::default() };
        let e_quantum = run_mcwf_ensemble(&timeline, &params, &quantum, 1).unwrap().energy.mean;
        let ratio = e_quantum / e_classical.mean;
        assert!((ratio - 1.0).abs() < 0.05, "quantum {e_quantum} classical {e_classical:?}");
    }

    #[test]
    fn runs_in_single_precision() {
        let spec = single_train_spec(5, 3.0f32, PulseShape::square(0.016f32).unwrap()).unwrap();
        let timeline = resolve_timeline(&spec);
        let params = EnsembleParams::ideal(3.116f32);
        let quantum = QuantumParams { n_max: 64, ..Default::default() };
        let out = run_mcwf_ensemble(&timeline, &params, &quantum, 4).unwrap();
        assert!(out.energy.mean > 0.5 && out.energy.mean.is_finite());
    }
}
