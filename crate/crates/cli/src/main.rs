use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ffsheets_cli::{run, Command};

/// T- and S-matrices on the physical and unphysical sheets of the
/// Friedrichs-Faddeev model, and resonance searches.
#[derive(Debug, Parser)]
#[command(name = "ffsheets", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args.command, &args.config, &args.out, args.jobs) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(failure) => {
            if let Some(report) = failure.report {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            }
            eprintln!("ffsheets: {}", failure.error);
            ExitCode::from(failure.error.exit_code() as u8)
        }
    }
}
