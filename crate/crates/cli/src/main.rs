use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use optrec_cli::{run, Command, RunOptions};

/// Optimal recovery runs from a JSON problem configuration.
///
/// Exit codes: 0 success, 1 I/O, config or failed verification, 2 violated precondition.
#[derive(Debug, Parser)]
#[command(name = "optrec", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Measurement file per class block, in order.
    #[arg(long)]
    data: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = RunOptions {
        config: args.config,
        out: args.out,
        grid: args.grid,
        seed: args.seed,
        trials: args.trials,
        data: args.data,
    };
    match run(args.command, &opts) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("optrec: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
