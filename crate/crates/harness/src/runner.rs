use std::path::PathBuf;

use hpe_admm::generators::{generate, prox_params, Instance};
use hpe_admm::verification::{run_cell, solve_reference, CellSpec, ReferenceSolution, Tolerances};

use crate::config::{ProblemConfig, RunConfig, VariantConfig};
use crate::error::{io_err, HarnessError, Result};
use crate::output::{csv_file_name, csv_rows, write_csv, write_summary, CellSummary};

/// Maps `f` over `items` on up to `available_parallelism` scoped threads,
/// preserving input order.
pub fn parallel_map<I, O, F>(items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync,
{
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len()).max(1);
    let chunk = items.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<O>>()))
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().map_err(|_| HarnessError::WorkerPanic)?);
        }
        Ok(out)
    })
}

#[derive(Debug)]
pub struct RunOutput {
    pub cells: Vec<CellSummary>,
    pub summary_path: PathBuf,
}

impl RunOutput {
    pub fn certified(&self) -> bool {
        self.cells.iter().all(|c| c.certified)
    }
}

fn run_one(
    config: &RunConfig,
    instance: &Instance<f64>,
    reference: &ReferenceSolution<f64>,
    theta: f64,
) -> Result<CellSummary> {
    let spec = CellSpec {
        variant: config.variant.variant(),
        beta: config.beta,
        theta,
        max_iter: config.max_iter,
        res_tol: config.res_tol,
        seed: config.seed,
    };
    let cell = run_cell(instance, reference, &spec, Tolerances::default())?;
    let path = config.out_dir.join(csv_file_name(theta));
    write_csv(&path, &csv_rows(&cell))?;
    Ok(CellSummary::from_cell(&instance.kind.label(), &cell, path))
}

/// Runs every θ of `config` concurrently, writing one CSV per θ and then
/// `summary.json` in `theta_list` order.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let instance = generate::<f64>(&config.problem.kind())?;
    let variant = config.variant.variant();
    for &theta in &config.theta_list {
        prox_params(&instance.problem, &variant, config.beta, theta, config.seed)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let reference = solve_reference(&instance)?;
    let cells = parallel_map(&config.theta_list, |&theta| run_one(config, &instance, &reference, theta))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let summary_path = config.out_dir.join("summary.json");
    write_summary(&summary_path, &cells)?;
    Ok(RunOutput { cells, summary_path })
}

/// Command-line form of a run.
#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub problem: String,
    pub thetas: Vec<f64>,
    pub beta: f64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub variant: String,
    pub seed: u64,
    pub res_tol: Option<f64>,
}

impl SweepArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let config = RunConfig {
            problem: ProblemConfig::named(&self.problem, self.seed)?,
            beta: self.beta,
            theta_list: self.thetas.clone(),
            variant: VariantConfig::named(&self.variant)?,
            max_iter: self.max_iter,
            res_tol: self.res_tol,
            out_dir: self.out.clone(),
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn sweep(args: &SweepArgs) -> Result<RunOutput> {
    run(&args.to_config()?)
}
