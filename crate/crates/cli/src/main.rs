//! `bubbletower`: run an analysis described by a config file and write a
//! JSON report plus CSV tables.
//!
//! Exit status: 0 when the analysis passes, 1 when it fails, 2 on input errors.

mod cache;
mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use cache::Cache;
use config::{LoadedConfig, Overrides};
use error::CliError;
use report::{emit, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Parse the candidate and check admissibility.
    Check,
    /// Critical points with Morse indices and Laplacian signs.
    Critical,
    /// Critical points at infinity, μ(K), index count and non-existence candidates.
    Cpi,
    /// Spread validation, class partition and σ.
    Spread,
    /// Class and comparison certificates for a spread.
    Certify,
    /// Chain-complex homology, the deformation scheme and the heart certificate.
    Homology,
    /// Shadow-flow trajectory and invariant monitors.
    Flow,
    /// Bubble energy sweeps and expansion sign fits.
    BubbleEnergy,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Critical => "critical",
            Command::Cpi => "cpi",
            Command::Spread => "spread",
            Command::Certify => "certify",
            Command::Homology => "homology",
            Command::Flow => "flow",
            Command::BubbleEnergy => "bubble-energy",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bubbletower",
    version,
    about = "Prescribed scalar curvature analyses on round spheres"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[run] out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature level; overrides `[run] quad_level`.
    #[arg(long = "quad-level")]
    quad_level: Option<usize>,
    /// Ignore and do not populate the cache.
    #[arg(long = "no-cache")]
    no_cache: bool,
}

fn run(command: Command, cfg: &LoadedConfig, cache: &Cache) -> Result<Outcome, CliError> {
    match command {
        Command::Check => commands::check(cfg),
        Command::Critical => commands::critical(cfg),
        Command::Cpi => commands::cpi(cfg),
        Command::Spread => commands::spread(cfg),
        Command::Certify => commands::certify(cfg),
        Command::Homology => commands::homology(cfg),
        Command::Flow => commands::flow(cfg),
        Command::BubbleEnergy => commands::bubble_energy_cmd(cfg, cache),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        quad_level: cli.quad_level,
    };
    let cfg = match LoadedConfig::load(&cli.config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cache = Cache::new(&cfg, !cli.no_cache);
    let name = cli.command.name();
    let (outcome, error) = match run(cli.command, &cfg, &cache) {
        Ok(o) => (o, None),
        Err(e @ CliError::Input(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
        Err(e) => (
            Outcome::new(false, vec![e.to_string()], serde_json::Value::Null),
            Some(e.to_string()),
        ),
    };
    let path = match emit(name, &cfg, &outcome, error.as_deref()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    println!("{} {name}", if outcome.pass { "PASS" } else { "FAIL" });
    for line in &outcome.summary {
        println!("  {line}");
    }
    println!("  report: {}", path.display());
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
