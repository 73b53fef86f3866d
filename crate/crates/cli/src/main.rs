use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use specrange_cli::{run, Mode, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Scan,
    Trace,
    Envelope,
    Oracle,
    Pseudo,
}

/// Numerical range enclosures of operator functions.
///
/// Exit status: 0 success, 2 config error, 3 numerical failure flags
/// (see report.txt), 1 other I/O errors.
#[derive(Debug, Parser)]
#[command(name = "specrange", version)]
struct Args {
    command: Command,
    /// JSON run configuration.
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for scans.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mode = match args.command {
        Command::Scan => Mode::Scan,
        Command::Trace => Mode::Trace,
        Command::Envelope => Mode::Envelope,
        Command::Oracle => Mode::Oracle,
        Command::Pseudo => Mode::Pseudo,
    };
    let opts = RunOptions {
        out: args.out,
        threads: args.threads,
        seed: args.seed,
    };
    match run(mode, &args.config, &opts) {
        Ok(code) => {
            if code != 0 {
                eprintln!(
                    "specrange: numerical failure flags present, see {}",
                    opts.out.join("report.txt").display()
                );
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("specrange: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
