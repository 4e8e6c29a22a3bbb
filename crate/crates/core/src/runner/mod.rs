//! Configuration, sweeps and output files.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{EngineChoice, Mode, RunConfig};
pub use output::{emit_outputs, read_config_snapshot, read_sweep_csv, CONFIG_JSON, PLOT_SCRIPT, SUMMARY_JSON, SWEEP_CSV};
pub use sweep::{run, run_phase_sweep, run_ratio_sweep, run_single, Engine, SweepPoint, SweepResult, SweepRow};
