use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kmsbound::{emit_report, load_scenario, parse_grid, run_scenario, sweep, validate, CliError, Format, SweepParam};

#[derive(Parser)]
#[command(name = "kmsbound", version, about = "Check KMS, boundedness and passivity conditions on finite systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check listed in a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        seed: Option<u64>,
        /// Include full witness vectors instead of digests only.
        #[arg(long)]
        full_witness: bool,
    },
    /// Re-run a scenario over a grid of one parameter and write CSV.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// `a:b:count` or a comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a scenario without running checks.
    Validate { scenario: PathBuf },
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            format,
            seed,
            full_witness,
        } => {
            let s = load_scenario(&scenario)?;
            let result = run_scenario(&s, seed)?;
            write_out(out.as_deref(), &emit_report(&result, format, full_witness))?;
            Ok(result.exit_code())
        }
        Command::Sweep {
            scenario,
            param,
            grid,
            out,
            seed,
        } => {
            let s = load_scenario(&scenario)?;
            let csv = sweep(&s, param, &parse_grid(&grid)?, seed)?;
            write_out(out.as_deref(), &csv)?;
            Ok(0)
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            validate(&s)?;
            println!("{}: ok", scenario.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
