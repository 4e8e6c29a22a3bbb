//! Files written for a sweep: table, distributions, config snapshot, summary and plot script.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Mode, RunConfig};
use super::sweep::{SweepResult, SweepRow};
use crate::analysis::UNITS_HEADER;
use crate::error::{Error, Result};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const CONFIG_JSON: &str = "config.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const PLOT_SCRIPT: &str = "plot.gp";

const COLUMNS: &str = "sweep_value,ratio,psi0_deg,engine,energy,energy_stderr,zero_velocity_fraction,lineshape,distribution";

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn sweep_axis(mode: Mode) -> &'static str {
    match mode {
        Mode::RatioSweep => "r_prime",
        Mode::PhaseSweep | Mode::Single => "psi0_deg",
    }
}

/// Rows as CSV. Floats use the shortest representation that reads back exactly.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = format!(
        "{UNITS_HEADER}\n# sweep_value={} seed={} epsilon={}\n{COLUMNS}\n",
        sweep_axis(result.config.mode),
        result.config.seed,
        result.config.analysis.epsilon
    );
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.sweep_value,
            r.ratio,
            r.psi0_deg,
            r.engine.as_str(),
            r.energy,
            r.energy_stderr,
            r.zero_velocity_fraction,
            r.lineshape,
            r.distribution
        );
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (number, line) in text.lines().enumerate() {
        if line.starts_with('#') || line == COLUMNS || line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Analysis(format!("sweep CSV line {}: {what}", number + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad("expected 9 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        rows.push(SweepRow {
            sweep_value: num(f[0])?,
            ratio: num(f[1])?,
            psi0_deg: num(f[2])?,
            engine: f[3].parse()?,
            energy: num(f[4])?,
            energy_stderr: num(f[5])?,
            zero_velocity_fraction: num(f[6])?,
            lineshape: f[7].parse()?,
            distribution: f[8].to_string(),
        });
    }
    Ok(rows)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sweep_csv(&text)
}

/// Gnuplot script drawing the sweep with one series per engine: energy with
/// error bars for phase sweeps, zero-velocity fraction for ratio sweeps.
pub fn plot_script(result: &SweepResult) -> String {
    let (xlabel, ylabel, y, style) = match result.config.mode {
        Mode::RatioSweep => ("r'", "zero-velocity fraction", "$7 : NaN)", "linespoints"),
        _ => ("{/Symbol y}_0 (degrees)", "energy (two-photon recoils)", "$5 : NaN):6", "yerrorlines"),
    };
    let mut engines: Vec<&str> = result.rows.iter().map(|r| r.engine.as_str()).collect();
    engines.sort_unstable();
    engines.dedup();
    let series: Vec<String> = engines
        .iter()
        .map(|e| format!("'{SWEEP_CSV}' using 1:(strcol(4) eq '{e}' ? {y} with {style} title '{e}'"))
        .collect();
    format!(
        "set datafile separator ','\nset datafile commentschars '#'\nset xlabel \"{xlabel}\"\nset ylabel \"{ylabel}\"\nset terminal pngcairo size 900,600\nset output 'sweep.png'\nplot {}\n",
        series.join(", \\\n     ")
    )
}

#[derive(Serialize)]
struct Summary<'a> {
    mode: Mode,
    seed: u64,
    epsilon: f64,
    rows: &'a [SweepRow],
}

/// Writes every artefact under `dir` and returns the paths written, config first.
pub fn emit_outputs(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Vec::new();

    let config_path = dir.join(CONFIG_JSON);
    let config = serde_json::to_string_pretty(&result.config).map_err(|e| Error::Config(e.to_string()))?;
    write(&config_path, &config)?;
    manifest.push(config_path);
    if result.rows.is_empty() {
        return Ok(manifest);
    }

    let csv_path = dir.join(SWEEP_CSV);
    write(&csv_path, &sweep_csv(result))?;
    manifest.push(csv_path);

    for (row, dist) in result.rows.iter().zip(&result.distributions) {
        let path = dir.join(&row.distribution);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        dist.write_csv(&path)?;
        manifest.push(path);
    }

    let summary = Summary {
        mode: result.config.mode,
        seed: result.config.seed,
        epsilon: result.config.analysis.epsilon,
        rows: &result.rows,
    };
    let summary_path = dir.join(SUMMARY_JSON);
    write(&summary_path, &serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?)?;
    manifest.push(summary_path);

    let plot_path = dir.join(PLOT_SCRIPT);
    write(&plot_path, &plot_script(result))?;
    manifest.push(plot_path);
    Ok(manifest)
}

/// Restores a config snapshot written by [`emit_outputs`].
pub fn read_config_snapshot(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
