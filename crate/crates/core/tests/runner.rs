use std::process::Command;

use kicked_rotor::analysis::UNITS_HEADER;
use kicked_rotor::runner::{
    emit_outputs, read_config_snapshot, read_sweep_csv, run, Engine, EngineChoice, Mode, RunConfig, CONFIG_JSON, SWEEP_CSV,
};
use kicked_rotor::MomentumDistribution;

fn small(mode: Mode) -> RunConfig {
    let mut config = RunConfig {
        mode,
        workers: 2,
        ..RunConfig::default()
    };
    config.ensemble.classical_trajectories = 200;
    config.ensemble.quantum_trajectories = 8;
    config.ensemble.n_max = 128;
    config.physics.n_total = 6;
    config
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kicked-rotor"))
}

#[test]
fn empty_sweep_writes_only_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(Mode::RatioSweep);
    config.ratio_sweep.r_prime.clear();
    let result = run(&config).unwrap();
    assert!(result.rows.is_empty());
    let written = emit_outputs(&result, dir.path()).unwrap();
    assert_eq!(written, vec![dir.path().join(CONFIG_JSON)]);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert_eq!(read_config_snapshot(&written[0]).unwrap(), config);
}

#[test]
fn two_point_sweep_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(Mode::PhaseSweep);
    config.phase_sweep.start_deg = 0.0;
    config.phase_sweep.stop_deg = 180.0;
    config.phase_sweep.step_deg = 180.0;
    let result = run(&config).unwrap();
    assert_eq!(result.rows.len(), 4);
    emit_outputs(&result, dir.path()).unwrap();

    let csv = std::fs::read_to_string(dir.path().join(SWEEP_CSV)).unwrap();
    assert!(csv.starts_with(UNITS_HEADER));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);

    let rows = read_sweep_csv(&dir.path().join(SWEEP_CSV)).unwrap();
    assert_eq!(rows, result.rows);
    for (row, dist) in rows.iter().zip(&result.distributions) {
        let back = MomentumDistribution::from_csv(&std::fs::read_to_string(dir.path().join(&row.distribution)).unwrap()).unwrap();
        // Reading back renormalises, which can move the last ulp.
        assert_eq!(back.len(), dist.len());
        for (a, b) in back.masses().iter().zip(dist.masses()) {
            assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
        }
    }
    assert!(result.row(180.0, Engine::Quantum).is_some());
}

#[test]
fn classical_only_emits_one_row_per_point() {
    let mut config = small(Mode::Single);
    config.engine = EngineChoice::Classical;
    let result = run(&config).unwrap();
    assert_eq!(result.rows.len(), 1);
    assert_eq!(result.rows[0].engine, Engine::Classical);
    assert_eq!(result.rows[0].psi0_deg, 180.0);
}

#[test]
fn cli_default_config_parses_back() {
    let out = bin().arg("default-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), RunConfig::default());
}

#[test]
fn cli_single_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, small(Mode::Single).to_toml_string()).unwrap();
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["single", "--seed", "7", "--engine", "classical", "--config"])
        .arg(&config_path)
        .arg("--output")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let rows = read_sweep_csv(&out_dir.join(SWEEP_CSV)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(read_config_snapshot(&out_dir.join(CONFIG_JSON)).unwrap().seed, 7);
}

#[test]
fn cli_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["single", "--eta", "1.5", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

#[test]
fn cli_timeline_writes_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let out = bin().args(["timeline", "--psi0", "90", "--output"]).arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 100);
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let config = RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 10);
}
