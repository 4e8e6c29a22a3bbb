//! Two-frequency kicked rotor: classical and quantum ensembles driven by two
//! interleaved trains of finite-width pulses.
//!
//! Time is scaled by the period of the first train and momentum so that
//! `[φ, ρ] = i k̄`. Reported momenta are in two-photon recoils (`ρ/k̄`) and
//! energies are `⟨(ρ/k̄)²⟩/2`.
//!
//! The physics modules are generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix `f64`, which is what the runner uses.

pub mod analysis;
pub mod classical;
pub mod elliptic;
pub mod error;
pub mod pulse_train;
pub mod quantum;
pub mod rng;
pub mod runner;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};

pub type PulseShape = pulse_train::PulseShape<f64>;
pub type PulseShapeParams = pulse_train::PulseShapeParams<f64>;
pub type TwoFreqTrainSpec = pulse_train::TwoFreqTrainSpec<f64>;
pub type ResolvedTimeline = pulse_train::ResolvedTimeline<f64>;
pub type ResultantPulse = pulse_train::ResultantPulse<f64>;
pub type ClassicalState = classical::ClassicalState<f64>;
pub type EnsembleParams = classical::EnsembleParams<f64>;
pub type MomentumSamples = classical::MomentumSamples<f64>;
pub type Wavefunction = quantum::Wavefunction<f64>;
pub type JumpRecord = quantum::JumpRecord<f64>;
pub type QuantumEnsemble = quantum::QuantumEnsemble<f64>;
pub type MomentumDistribution = analysis::MomentumDistribution<f64>;
pub type LineshapeReport = analysis::LineshapeReport<f64>;
