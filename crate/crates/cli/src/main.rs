use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use musielak_cli::{describe_file, run, RunOptions, Status};

#[derive(Parser)]
#[command(name = "musielak", version, about = "Musielak-Orlicz norms, conjugates, structural conditions and Poincaré checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a configuration and write the reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: one per core).
        #[arg(long)]
        threads: Option<usize>,
        /// Relative tolerance of the norm and conjugate solvers.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Jitter seed for condition-checker sample points; 0 keeps the lattice.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the resolved domain, Φ-functions and constants without running.
    Describe {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Describe { config } => match describe_file(&config) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, out, threads, tolerance, seed } => {
            if let Some(t) = tolerance {
                if !(t > 0.0 && t.is_finite()) {
                    eprintln!("error: --tolerance must be a positive number");
                    return ExitCode::from(2);
                }
            }
            if threads == Some(0) {
                eprintln!("error: --threads must be at least 1");
                return ExitCode::from(2);
            }
            match run(&config, &out, threads, &RunOptions { tolerance, seed }) {
                Ok(summary) => {
                    for o in &summary.outcomes {
                        match &o.error {
                            Some(e) => eprintln!("error: {e}"),
                            None => println!("{}: {}", o.name, status_label(o.status)),
                        }
                    }
                    ExitCode::from(summary.exit_code())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}

fn status_label(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Inconclusive => "inconclusive",
        Status::Info => "done",
        Status::Error => "error",
    }
}
