use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curvlab::{catalog, run_with_threads, Config, Error};

#[derive(Parser)]
#[command(name = "curvlab", about = "Verify conformal curvature identities numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a configuration file and write a JSON report.
    Run {
        config: PathBuf,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Report path, overriding [output] path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the pointwise sample points, overriding [tasks] seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the registered tasks.
    ListTasks,
    /// Print the version.
    Version,
}

/// Writes to standard output, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(config: PathBuf, threads: usize, out: Option<PathBuf>, seed: Option<u64>) -> Result<bool, Error> {
    let cfg = Config::from_path(&config)?;
    let report = run_with_threads(&cfg, seed, threads)?;
    emit(&report.summary());
    if let Some(path) = out.or_else(|| cfg.output.clone()) {
        std::fs::write(&path, report.to_json()).map_err(|source| Error::Write { path: path.clone(), source })?;
        emit(&format!("report written to {}\n", path.display()));
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            threads,
            out,
            seed,
        } => match run(config, threads, out, seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::ListTasks => {
            emit(&catalog::listing());
            ExitCode::SUCCESS
        }
        Command::Version => {
            emit(&format!("curvlab {}\n", curvlab::VERSION));
            ExitCode::SUCCESS
        }
    }
}
