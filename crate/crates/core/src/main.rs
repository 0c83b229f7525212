use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use workfluct::config::{OutputFormat, Overrides, ScenarioConfig};
use workfluct::experiment::{run, run_all, write_run, Command};
use workfluct::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Two-point-measurement work statistics of a driven two-level system"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Scenario file (TOML). The bundled default is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed, overrides `[sampling] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Fixed propagation step count, overrides `[scenario] n_steps`.
    #[arg(long, global = true)]
    steps: Option<usize>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Mean and variance of exp(-beta W) across the duration grid
    SweepTau,
    /// Bare versus counter-diabatic variance
    StaCompare,
    /// Joint probabilities, with readout noise and correction if configured
    JointProbs,
    /// Jarzynski estimator bias and RMSE versus sample count
    Estimator,
    /// Adiabatic parameter per duration
    Gamma,
    /// Counter-diabatic field waveforms
    CdWaveform,
    /// Every subcommand above
    All,
    /// Print the bundled default config
    DefaultConfig,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::Empty(_)
        | Error::DimensionMismatch { .. }
        | Error::SingularModel { .. } => 2,
        Error::Contract(_) | Error::NotHermitian { .. } | Error::InconsistentData { .. } => 3,
        Error::TimeOutOfRange { .. } | Error::Io(_) => 1,
    }
}

fn execute(cli: &Cli) -> workfluct::Result<()> {
    if let Cmd::DefaultConfig = cli.command {
        print!("{}", workfluct::config::BUNDLED);
        return Ok(());
    }
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::bundled(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        n_steps: cli.steps,
        out_dir: cli.out.clone(),
        format: cli.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }),
    })?;
    let runs = match cli.command {
        Cmd::SweepTau => vec![run(Command::SweepTau, &cfg)?],
        Cmd::StaCompare => vec![run(Command::StaCompare, &cfg)?],
        Cmd::JointProbs => vec![run(Command::JointProbs, &cfg)?],
        Cmd::Estimator => vec![run(Command::Estimator, &cfg)?],
        Cmd::Gamma => vec![run(Command::Gamma, &cfg)?],
        Cmd::CdWaveform => vec![run(Command::CdWaveform, &cfg)?],
        Cmd::All => run_all(&cfg)?,
        Cmd::DefaultConfig => unreachable!(),
    };
    for r in &runs {
        for path in write_run(r, &cfg)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
