use std::fmt::Write as _;
use std::str::FromStr;

use super::cell::{ergodic_point_at, run_cell, CellSpec, CheckRecord, CheckStatus, Tolerances};
use super::solve_reference;
use crate::bregman::{gradient_gap_probe, regularity_probe};
use crate::error::{invalid, Error, Result};
use crate::generators::{generate, prox_params, Instance, ProblemKind, Variant};
use crate::linalg::ProductDims;
use crate::monotone::{enlargement_probe, KktOperator};
use crate::padmm::{golden_ratio, Admm, SlackTrack};

pub const THETA_GRID: [f64; 6] = [0.3, 0.75, 1.0, 1.25, 1.5, 1.618033988749895];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    HpeConditions,
    RateBounds,
    LemmaIdentities,
    BregmanAxioms,
    Enlargement,
}

impl SuiteName {
    pub const ALL: [SuiteName; 5] = [
        SuiteName::HpeConditions,
        SuiteName::RateBounds,
        SuiteName::LemmaIdentities,
        SuiteName::BregmanAxioms,
        SuiteName::Enlargement,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::HpeConditions => "hpe_conditions",
            SuiteName::RateBounds => "rate_bounds",
            SuiteName::LemmaIdentities => "lemma_identities",
            SuiteName::BregmanAxioms => "bregman_axioms",
            SuiteName::Enlargement => "enlargement",
        }
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| invalid("suite", format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides the per-suite iteration budget.
    pub max_iter: Option<usize>,
}

/// Checks of one `(problem, variant, β, θ)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub problem: String,
    pub variant: String,
    pub beta: f64,
    pub theta: f64,
    pub dims: ProductDims,
    pub iterations: usize,
    pub checks: Vec<CheckRecord>,
}

impl CellReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub seed: u64,
    pub cells: Vec<CellReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(CellReport::passed)
    }

    /// Stable plain-text rendering; identical inputs give identical bytes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "suite {} seed {} {}", self.suite.as_str(), self.seed, verdict(self.passed()));
        for c in &self.cells {
            let _ = writeln!(
                out,
                "cell problem={} variant={} beta={:.17e} theta={:.17e} dims=({},{},{}) iterations={} {}",
                c.problem,
                c.variant,
                c.beta,
                c.theta,
                c.dims.s,
                c.dims.y,
                c.dims.x,
                c.iterations,
                verdict(c.passed())
            );
            for chk in &c.checks {
                let _ = writeln!(
                    out,
                    "  {} k={}..{} worst_slack={:.17e} at={} tol={:e} {}",
                    chk.name,
                    chk.k_first,
                    chk.k_last,
                    chk.worst_slack,
                    chk.worst_at,
                    chk.tol,
                    chk.status.as_str()
                );
            }
        }
        out
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn small_problems(seed: u64) -> Vec<ProblemKind> {
    vec![
        ProblemKind::ScalarToy,
        ProblemKind::RandomQuadratic {
            n_s: 10,
            n_y: 10,
            n_x: 8,
            cond: 10.0,
            seed,
        },
        ProblemKind::Lasso {
            m: 10,
            n: 20,
            mu: 0.1,
            seed,
        },
    ]
}

fn variants() -> [Variant; 3] {
    [
        Variant::Standard,
        Variant::Proximal {
            h_scale: 1.0,
            g_scale: 1.0,
        },
        Variant::Linearized { tau: None },
    ]
}

struct Prepared {
    instance: Instance<f64>,
    reference: super::ReferenceSolution<f64>,
}

fn prepare(kind: &ProblemKind) -> Result<Prepared> {
    let instance = generate::<f64>(kind)?;
    let reference = solve_reference(&instance)?;
    Ok(Prepared { instance, reference })
}

fn fail_fast_on_nan(checks: &[CheckRecord]) -> Result<()> {
    match checks.iter().find(|c| c.status != CheckStatus::NotApplicable && c.worst_slack.is_nan()) {
        Some(c) => Err(Error::Consistency(format!("NaN encountered in check {}", c.name))),
        None => Ok(()),
    }
}

fn cell_grid(
    problems: &[ProblemKind],
    variants: &[Variant],
    betas: &[f64],
    thetas: &[f64],
    max_iter: usize,
    seed: u64,
    keep: &dyn Fn(&str) -> bool,
) -> Result<Vec<CellReport>> {
    let mut cells = Vec::new();
    for kind in problems {
        let prep = prepare(kind)?;
        for variant in variants {
            for &beta in betas {
                for &theta in thetas {
                    let spec = CellSpec {
                        variant: *variant,
                        beta,
                        theta,
                        max_iter,
                        res_tol: None,
                        seed,
                    };
                    let cell = run_cell(&prep.instance, &prep.reference, &spec, Tolerances::default())?;
                    let checks: Vec<CheckRecord> = cell.checks().into_iter().filter(|c| keep(&c.name)).collect();
                    fail_fast_on_nan(&checks)?;
                    cells.push(CellReport {
                        problem: kind.label(),
                        variant: variant.name().to_string(),
                        beta,
                        theta,
                        dims: prep.instance.problem.dims(),
                        iterations: cell.run.iterations(),
                        checks,
                    });
                }
            }
        }
    }
    Ok(cells)
}

fn bregman_cells(seed: u64) -> Result<Vec<CellReport>> {
    let kind = ProblemKind::RandomQuadratic {
        n_s: 10,
        n_y: 10,
        n_x: 8,
        cond: 10.0,
        seed,
    };
    let instance = generate::<f64>(&kind)?;
    let mut cells = Vec::new();
    for variant in variants() {
        for beta in [0.5, 2.0] {
            for theta in [1.0, golden_ratio::<f64>()] {
                let params = prox_params(&instance.problem, &variant, beta, theta, seed)?;
                let admm = Admm::new(&instance.problem, params)?;
                let reg = regularity_probe(admm.dgf(), 1.0, 1.0, 1000, seed)?;
                let gaps = gradient_gap_probe(admm.dgf(), 1000, 4, seed)?;
                let tol = 1e-9;
                let reg_check = CheckRecord {
                    name: "regularity".into(),
                    k_first: 0,
                    k_last: 0,
                    worst_slack: -reg.max_violation,
                    worst_at: 0,
                    tol: 0.0,
                    status: if reg.passed() { CheckStatus::Pass } else { CheckStatus::Fail },
                };
                let mut pair = SlackTrack::default();
                pair.push(0, gaps.worst_pair_slack);
                let mut chain = SlackTrack::default();
                chain.push(0, gaps.worst_chain_slack);
                cells.push(CellReport {
                    problem: kind.label(),
                    variant: variant.name().into(),
                    beta,
                    theta,
                    dims: instance.problem.dims(),
                    iterations: 0,
                    checks: vec![
                        reg_check,
                        CheckRecord::from_track("gradient_gap", &pair, 0, 0, tol),
                        CheckRecord::from_track("chain", &chain, 0, 0, tol),
                    ],
                });
            }
        }
    }
    Ok(cells)
}

fn enlargement_cells(seed: u64, max_iter: usize) -> Result<Vec<CellReport>> {
    let problems = small_problems(seed);
    let mut cells = Vec::new();
    for kind in &problems[1..] {
        let prep = prepare(kind)?;
        for theta in [1.0, golden_ratio::<f64>()] {
            let spec = CellSpec {
                variant: Variant::Standard,
                beta: 1.0,
                theta,
                max_iter,
                res_tol: None,
                seed,
            };
            let cell = run_cell(&prep.instance, &prep.reference, &spec, Tolerances::default())?;
            let op = KktOperator::new(&prep.instance.problem);
            let n = cell.run.iterations();
            let anchors: Vec<_> = cell
                .run
                .records
                .iter()
                .step_by((n / 10).max(1))
                .map(|r| r.z_tilde())
                .chain(std::iter::once(prep.reference.z_star.clone()))
                .collect();
            let mut track = SlackTrack::default();
            for k in [1, (n / 10).max(1), n] {
                let (zt, r, eps) = ergodic_point_at(&cell.run, k)?;
                let worst = enlargement_probe(&op, &zt, &r, eps.max(0.0), &anchors, 500, seed ^ k as u64)?;
                let scale = 1.0 + zt.norm() * r.norm() + eps.abs();
                track.push(k, worst / scale);
            }
            cells.push(CellReport {
                problem: kind.label(),
                variant: Variant::Standard.name().into(),
                beta: 1.0,
                theta,
                dims: prep.instance.problem.dims(),
                iterations: n,
                checks: vec![CheckRecord::from_track("ergodic_enlargement", &track, 1, n, 1e-9)],
            });
        }
    }
    Ok(cells)
}

/// Runs a named battery deterministically from `config.seed`.
pub fn run_suite(name: SuiteName, config: SuiteConfig) -> Result<SuiteReport> {
    let seed = config.seed;
    let cells = match name {
        SuiteName::HpeConditions => cell_grid(
            &small_problems(seed),
            &variants(),
            &[0.5, 2.0],
            &THETA_GRID,
            config.max_iter.unwrap_or(100),
            seed,
            &|n| n == "hpe_error_condition",
        )?,
        SuiteName::RateBounds => cell_grid(
            &[ProblemKind::RandomQuadratic {
                n_s: 40,
                n_y: 40,
                n_x: 30,
                cond: 100.0,
                seed,
            }],
            &[Variant::Standard],
            &[1.0],
            &THETA_GRID,
            config.max_iter.unwrap_or(2000),
            seed,
            &|n| n.starts_with("pointwise") || n.starts_with("ergodic") || n == "hpe_ergodic_bounds",
        )?,
        SuiteName::LemmaIdentities => cell_grid(
            &small_problems(seed),
            &variants(),
            &[1.0],
            &THETA_GRID,
            config.max_iter.unwrap_or(300),
            seed,
            &|n| {
                matches!(
                    n,
                    "xtilde_identity"
                        | "feasibility_identity"
                        | "inclusion_s"
                        | "inclusion_y"
                        | "first_step_bound"
                        | "delta_inequality"
                        | "tilde_distance_bound"
                        | "three_point_identity"
                        | "telescoping"
                        | "descent"
                )
            },
        )?,
        SuiteName::BregmanAxioms => bregman_cells(seed)?,
        SuiteName::Enlargement => enlargement_cells(seed, config.max_iter.unwrap_or(200))?,
    };
    Ok(SuiteReport { suite: name, seed, cells })
}
