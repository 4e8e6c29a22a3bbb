use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kicked_rotor::runner::{emit_outputs, sweep, EngineChoice, Mode, RunConfig, SweepPoint};
use kicked_rotor::Result;

/// Two-frequency kicked rotor simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy against the initial phase offset ψ₀.
    PhaseSweep(RunArgs),
    /// Zero-velocity fraction against r′ = T₁/T₂ at fixed ψ′₀.
    RatioSweep(RunArgs),
    /// One point at `single.psi0_deg`.
    Single(RunArgs),
    /// Writes the resolved pulse envelope k(τ) for one ψ₀ as CSV.
    Timeline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        psi0: f64,
        #[arg(long, default_value = "timeline.csv")]
        output: PathBuf,
    },
    /// Prints the full default configuration as TOML.
    DefaultConfig,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    engine: Option<EngineChoice>,
    #[arg(long)]
    classical_trajectories: Option<usize>,
    #[arg(long)]
    quantum_trajectories: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        Some(path) => RunConfig::from_file(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(mode: Mode, args: RunArgs) -> Result<()> {
    let mut config = load(args.config.as_ref())?;
    config.mode = mode;
    if let Some(v) = args.output {
        config.output_dir = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.workers {
        config.workers = v;
    }
    if let Some(v) = args.engine {
        config.engine = v;
    }
    if let Some(v) = args.classical_trajectories {
        config.ensemble.classical_trajectories = v;
    }
    if let Some(v) = args.quantum_trajectories {
        config.ensemble.quantum_trajectories = v;
    }
    if let Some(v) = args.n_max {
        config.ensemble.n_max = v;
    }
    if let Some(v) = args.kappa {
        config.physics.kappa1 = v;
        config.physics.kappa2 = v;
    }
    if let Some(v) = args.eta {
        config.physics.eta = v;
    }
    config.validate()?;
    let result = kicked_rotor::runner::run(&config)?;
    for row in &result.rows {
        println!(
            "{:>10} {:<9} E = {:.3} ± {:.3}  zero-velocity = {:.4}  {}",
            row.sweep_value,
            row.engine.as_str(),
            row.energy,
            row.energy_stderr,
            row.zero_velocity_fraction,
            row.lineshape
        );
    }
    let manifest = emit_outputs(&result, &config.output_dir)?;
    println!("wrote {} files to {}", manifest.len(), config.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::PhaseSweep(args) => run(Mode::PhaseSweep, args),
        Command::RatioSweep(args) => run(Mode::RatioSweep, args),
        Command::Single(args) => run(Mode::Single, args),
        Command::Timeline { config, psi0, output } => load(config.as_ref()).and_then(|config| {
            let point = SweepPoint::new(psi0, config.physics.ratio, psi0);
            sweep::timeline(&config, &point)?.write_csv(&output)
        }),
        Command::DefaultConfig => {
            print!("{}", RunConfig::default().to_toml_string());
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
