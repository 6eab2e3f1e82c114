use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vortexlab::commands::{self, EXIT_FAILURE};
use vortexlab::config::{RunConfig, DEFAULT_SEED};
use vortexlab::verify::Level;

#[derive(Parser)]
#[command(
    name = "vortexlab",
    version,
    about = "Regularized vortex filament dynamics and stretching-bound diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a closed filament and write snapshot and diagnostics CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the stretching bound on a particle field and write a JSON report.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
    /// Write the particle field of the configured curve.
    Field {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `<directory>/<prefix>_field.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Worker threads for the pair sums (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write `verify_report.json` and `sandbox.csv` here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig, i32> {
    RunConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_FAILURE
    })
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Simulate { config } => {
            load(&config).map_or_else(|c| c, |cfg| commands::simulate(&cfg))
        }
        Command::Diagnose { config, field } => {
            load(&config).map_or_else(|c| c, |cfg| commands::diagnose(&cfg, &field))
        }
        Command::Field { config, out } => {
            load(&config).map_or_else(|c| c, |cfg| commands::export_field(&cfg, out.as_deref()))
        }
        Command::Verify {
            level,
            seed,
            threads,
            output,
        } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("error: cannot configure {n} threads: {e}");
                    return EXIT_FAILURE;
                }
            }
            commands::verify(level, seed, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_FAILURE as u8
            } else {
                0
            });
        }
    };
    ExitCode::from(run(cli) as u8)
}
