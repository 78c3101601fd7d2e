//! Thin CLI over the library: `simulate`, `verify`, and `sweep`.
//!
//! Exit codes: 0 success, 2 configuration/validation failure, 3 solver
//! failure. `POISEUILLE_LC_THREADS` caps the worker count.

use clap::{Args, Parser, Subcommand};
use poiseuille_lc::runner::{self, CheckLevel, Mode};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "poiseuille_lc",
    about = "Solver suite for 1-D Poiseuille flow of a nematic liquid crystal"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Solver pipeline to use.
    #[arg(long, default_value = "coupled")]
    mode: Mode,
    /// Amount of cross-checking to perform.
    #[arg(long, default_value = "fast")]
    check_level: CheckLevel,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the artifact directory.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory for fields.csv, energy.csv, summary.json, plots/.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a cross product of parameter overrides and write index.csv.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory; each run gets its own subdirectory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run() -> Result<bool, poiseuille_lc::SolverError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { common, out } => {
            let config = runner::load_config(&common.config)?;
            let summary = runner::simulate(&config, &out, common.mode, common.check_level)?;
            println!(
                "wrote {} ({} windows, pass = {})",
                out.display(),
                summary.windows.len(),
                summary.pass
            );
            Ok(true)
        }
        Command::Verify { common } => {
            let config = runner::load_config(&common.config)?;
            let results = runner::verify(&config, common.check_level)?;
            let mut all = true;
            for r in &results {
                println!(
                    "{:<24} {}  {}",
                    r.name,
                    if r.pass { "pass" } else { "FAIL" },
                    r.detail
                );
                all &= r.pass;
            }
            Ok(all)
        }
        Command::Sweep { common, out } => {
            let config = runner::load_sweep_config(&common.config)?;
            runner::sweep(&config, &out, common.mode, common.check_level)?;
            println!("wrote {}", out.join("index.csv").display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = runner::thread_cap() {
        // Cap the shared pool used by the solver internals as well.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
