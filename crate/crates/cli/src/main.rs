//! Command-line front end: relaxation runs, Otto-cycle reports, phase
//! diagrams, figure datasets, collisional ensembles and the single-reservoir
//! work-extraction protocol. Exit codes: 0 success, 2 config error,
//! 3 numerical failure (truncation/regime).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use sqtherm_cli::commands::{self, ReportFormat};
use sqtherm_cli::errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "sqtherm",
    about = "Thermodynamics of a bosonic mode in a squeezed thermal reservoir",
    version
)]
struct Cli {
    /// Worker threads for parallel sweeps and ensembles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; built-in defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// RNG seed override (collisional runs).
    #[arg(long)]
    seed: Option<u64>,

    /// Report serialization for cycle and single-reservoir summaries.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Relax an initial state in the reservoir on both dynamical backends.
    Relax(RunArgs),
    /// Analyze one Otto-cycle parameter point (closed forms + state check).
    Cycle(RunArgs),
    /// Sweep (omega2, r) and classify the operational regions.
    PhaseDiagram(RunArgs),
    /// Emit the standard figure datasets (fig2/fig3/fig4 CSV).
    Figures(RunArgs),
    /// Run the repeated-interaction reservoir model and its Lindblad limit.
    Collide(RunArgs),
    /// Two-stroke work extraction from a single squeezed reservoir.
    SingleReservoir(RunArgs),
}

/// Loads a config file (strict: unknown keys fail with a field path) or falls
/// back to the command's defaults.
fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let body = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            let de = &mut serde_json::Deserializer::from_str(&body);
            serde_path_to_error::deserialize(de).map_err(|e| {
                CliError::Config(format!("{} at {}", e.inner(), e.path()))
            })
        }
    }
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Relax(args) => commands::cmd_relax(&load_config(&args.config)?, &args.out),
        Command::Cycle(args) => {
            commands::cmd_cycle(&load_config(&args.config)?, &args.out, args.format.into())
        }
        Command::PhaseDiagram(args) => {
            commands::cmd_phase_diagram(&load_config(&args.config)?, &args.out)
        }
        Command::Figures(args) => commands::cmd_figures(&load_config(&args.config)?, &args.out),
        Command::Collide(args) => {
            commands::cmd_collide(&load_config(&args.config)?, &args.out, args.seed)
        }
        Command::SingleReservoir(args) => {
            commands::cmd_single_reservoir(&load_config(&args.config)?, &args.out, args.format.into())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
