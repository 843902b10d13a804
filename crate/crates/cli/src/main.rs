use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semilab_cli::{evolve, probe, verify, CliError, ScenarioConfig};

/// Reproducible scenarios for the shift and diffusion semigroups.
#[derive(Debug, Parser)]
#[command(name = "semilab", version)]
struct Cli {
    /// Scenario file (flat `key = value`); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the perturbed evolution and write time series.
    Evolve,
    /// Run the invariant suite and write a pass/fail table.
    Verify,
    /// Run one probe: domain, cs-gap, kraus-witness or zero-correction.
    Probe { name: String },
}

fn load(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Evolve => {
            for path in evolve::run_evolve(&cfg)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Verify => {
            let (report, _) = verify::run_verify(&cfg)?;
            print!("{}", report.summary());
            if !report.passed() {
                return Err(CliError::Numeric(format!("{} verify checks failed", report.count(verify::Status::Fail))));
            }
        }
        Command::Probe { name } => {
            let (report, paths) = probe::run_probe(&cfg, name)?;
            println!("{}: {} ({})", report.probe, report.verdict, report.inputs);
            for path in paths {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semilab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
