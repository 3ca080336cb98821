use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hpe_admm::verification::{run_suite, SuiteConfig, SuiteName};
use hpe_admm_harness::{run, sweep, HarnessError, RunConfig, RunOutput, SweepArgs};

/// Proximal ADMM runs with per-iteration certificates of the HPE rate bounds.
#[derive(Debug, Parser)]
#[command(name = "hpe-admm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every θ of a TOML config and write CSV files plus summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a named verification suite and print its report.
    Verify {
        /// hpe_conditions, rate_bounds, lemma_identities, bregman_axioms or enlargement.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the suite's iteration budget.
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Run a built-in problem over a list of θ values.
    Sweep {
        /// random_quadratic, lasso or scalar_toy.
        #[arg(long)]
        problem: String,
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
        /// standard, proximal or linearized.
        #[arg(long, default_value = "standard")]
        variant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        res_tol: Option<f64>,
    },
}

fn report(out: &RunOutput) -> ExitCode {
    for c in &out.cells {
        println!(
            "theta={} iterations={} certified={} csv={}",
            c.theta.get(),
            c.iterations,
            c.certified,
            c.csv_path.display()
        );
    }
    println!("summary={}", out.summary_path.display());
    if out.certified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Solve { config } => Ok(report(&run(&RunConfig::load(&config)?)?)),
        Command::Verify { suite, seed, max_iter } => {
            let name: SuiteName = suite.parse().map_err(|e: hpe_admm::Error| HarnessError::Config(e.to_string()))?;
            let report = run_suite(name, SuiteConfig { seed, max_iter })?;
            print!("{}", report.render());
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sweep {
            problem,
            theta,
            beta,
            max_iter,
            out,
            variant,
            seed,
            res_tol,
        } => Ok(report(&sweep(&SweepArgs {
            problem,
            thetas: theta,
            beta,
            max_iter,
            out,
            variant,
            seed,
            res_tol,
        })?)),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
