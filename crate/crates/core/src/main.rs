use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pointer_cell_sim::harness::{execute_with_workers, Command, Experiment, HarnessError, RunOptions};

#[derive(Parser)]
#[command(name = "pointer-cell-sim", version, about = "Pointer statistics of a microsystem read out by a finite apparatus")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Evolve one configuration and write report.txt.
    Run(Common),
    /// Pointer error over the [sweep] chain lengths: sweep.csv and sweep_fit.txt.
    Sweep(Common),
    /// Empirical and analytic magnetization rates: ldp.csv and ldp_summary.txt.
    Ldp(Common),
    /// Decay-rate stability under the [perturbation] edit: perturb.csv and perturb_report.txt.
    Perturb(Common),
    /// Random-instance property suite: verify_report.txt.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Cross-check against the dense backend.
    #[arg(long)]
    oracle: bool,
}

fn main() -> ExitCode {
    faer::set_global_parallelism(faer::Par::Seq);
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::Run(a) => (Command::Run, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Ldp(a) => (Command::Ldp, a),
        Sub::Perturb(a) => (Command::Perturb, a),
        Sub::Verify(a) => (Command::Verify, a),
    };
    let result = Experiment::load(&args.config).and_then(|exp| {
        let out = execute_with_workers(cmd, &exp, RunOptions { oracle: args.oracle }, args.workers)?;
        fs::create_dir_all(&args.out).map_err(|e| HarnessError::Io(format!("{}: {e}", args.out.display())))?;
        for (name, contents) in &out.files {
            let path = args.out.join(name);
            fs::write(&path, contents).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(out.suite_failure)
    });
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            eprintln!("property suite failed: {msg}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
