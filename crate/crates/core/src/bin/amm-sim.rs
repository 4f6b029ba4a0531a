use std::path::PathBuf;
use std::process::ExitCode;

use amm_core::cli::{run, Command};
use clap::error::ErrorKind;
use clap::Parser;

/// Batch runner for the AMM liquidity-freeze game.
#[derive(Debug, Parser)]
#[command(name = "amm-sim", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Scenario file.
    #[arg(long)]
    config: PathBuf,

    /// Destination CSV file.
    #[arg(long)]
    out: PathBuf,

    /// Add brute-force oracle columns where the subcommand supports them.
    #[arg(long)]
    oracle: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(args.command, &args.config, &args.out, args.oracle) {
        Ok(notes) => {
            for note in notes {
                println!("{note}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("amm-sim: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
