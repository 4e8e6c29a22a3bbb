#![allow(dead_code)]

use kicked_rotor::pulse_train::{resolve_timeline, single_train_spec, PulseShape, ResolvedTimeline};
use kicked_rotor::quantum::{eta_rate, free_propagate, init_wavefunction, SplitStep, Wavefunction};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KBAR: f64 = 3.116;

/// `cos φ` in the truncated momentum basis: ½ on both off-diagonals.
pub fn cosine_matrix(len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |i, j| if i.abs_diff(j) == 1 { 0.5 } else { 0.0 })
}

fn momenta(psi: &Wavefunction<f64>) -> Vec<f64> {
    (0..psi.len()).map(|j| psi.momentum(j)).collect()
}

fn free_diagonal(p: &[f64], kbar: f64, dtau: f64) -> DVector<Complex64> {
    DVector::from_iterator(p.len(), p.iter().map(|&p| Complex64::from_polar(1.0, -p * p * dtau / (2.0 * kbar))))
}

/// Dense propagation of the same Strang product the engine uses, built from an
/// eigendecomposition of the cosine matrix instead of FFTs.
pub struct DenseOracle {
    vectors: DMatrix<Complex64>,
    values: Vec<f64>,
}

impl DenseOracle {
    pub fn new(len: usize) -> Self {
        let eig = SymmetricEigen::new(cosine_matrix(len));
        Self {
            vectors: eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// `exp(−i·a·C/k̄ − (b/2)(I + C))`.
    pub fn kick(&self, a: f64, b: f64, kbar: f64) -> DMatrix<Complex64> {
        let diag = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| (Complex64::new(-b / 2.0 * (1.0 + l), -a * l / kbar)).exp()),
        );
        &self.vectors * DMatrix::from_diagonal(&diag) * self.vectors.adjoint()
    }

    pub fn propagate(&self, psi: &Wavefunction<f64>, timeline: &ResolvedTimeline<f64>, eta: f64) -> DVector<Complex64> {
        let p = momenta(psi);
        let rate = eta_rate(eta, timeline.reference_area);
        let mut state = DVector::from_iterator(psi.len(), psi.amplitudes.iter().copied());
        let mut clock: Option<f64> = None;
        for pulse in &timeline.pulses {
            if let Some(end) = clock {
                state.component_mul_assign(&free_diagonal(&p, psi.kbar, pulse.start - end));
            }
            let half = free_diagonal(&p, psi.kbar, pulse.step / 2.0);
            for &k in &pulse.rates {
                state.component_mul_assign(&half);
                state = self.kick(k * pulse.step, k * rate * pulse.step, psi.kbar) * state;
                state.component_mul_assign(&half);
            }
            clock = Some(pulse.end());
        }
        state
    }
}

pub fn split_step(psi: &mut Wavefunction<f64>, timeline: &ResolvedTimeline<f64>, eta: f64) {
    let mut workspace = SplitStep::new(psi.n_max);
    let rate = eta_rate(eta, timeline.reference_area);
    let mut clock: Option<f64> = None;
    for pulse in &timeline.pulses {
        if let Some(end) = clock {
            free_propagate(psi, pulse.start - end);
        }
        for &k in &pulse.rates {
            workspace.kick_step(psi, k, rate, pulse.step);
        }
        clock = Some(pulse.end());
    }
}

/// Three square kicks of random strength in `[1, 5]`, with a random start momentum.
pub fn random_kicks(seed: u64) -> (Wavefunction<f64>, ResolvedTimeline<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = rng.random_range(1.0..5.0);
    let timeline = resolve_timeline(&single_train_spec(3, kappa, PulseShape::square(0.016).unwrap()).unwrap());
    let p0 = rng.random_range(-2.0..2.0) * KBAR;
    (init_wavefunction(128, p0, KBAR).unwrap(), timeline)
}

/// Largest vector-norm distance between the FFT engine and the dense oracle
/// over `trials` random three-kick runs at `n_max = 128`.
pub fn worst_oracle_error(trials: u64, eta: f64) -> f64 {
    let oracle = DenseOracle::new(256);
    (0..trials)
        .map(|seed| {
            let (mut psi, timeline) = random_kicks(seed);
            let expected = oracle.propagate(&psi, &timeline, eta);
            split_step(&mut psi, &timeline, eta);
            let got = DVector::from_iterator(psi.len(), psi.amplitudes.iter().copied());
            (got - expected).norm()
        })
        .fold(0.0, f64::max)
}
