//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hpe_admm::bregman::DistanceGenerating;
use hpe_admm::generators::{generate, prox_params, scalar_toy, ProblemKind, Variant};
use hpe_admm::linalg::DualValue;
use hpe_admm::padmm::{golden_ratio, m_theta, sigma_theta, Admm, RateConstants, RunOptions};
use hpe_admm::verification::{
    estimate_d0, run_cell, run_suite, solve_reference, CellSpec, CheckRecord, CheckStatus, SuiteConfig, SuiteName, Tolerances,
    THETA_GRID,
};
use hpe_admm_harness::{parallel_map, run, ProblemConfig, RunConfig, VariantConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID_SEED: u64 = 7;
const GRID_ITERS: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let phi = golden_ratio::<f64>();
    let mut fails = Vec::new();
    let s1 = sigma_theta(1.0f64).unwrap();
    if (s1 - 0.5).abs() > 1e-12 {
        fails.push(format!("sigma(1) = {s1}"));
    }
    let sphi = sigma_theta(phi).unwrap();
    if (sphi - 1.0).abs() > 1e-12 {
        fails.push(format!("sigma(phi) = {sphi}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_det = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    for _ in 0..100 {
        // uniform on (0, φ]
        let theta = phi * (1.0 - rng.random::<f64>());
        let sigma = sigma_theta(theta).unwrap();
        let m = m_theta(theta, sigma);
        worst_det = worst_det.max(m.det.abs());
        worst_eig = worst_eig.min(m.min_eigenvalue);
        if !(1.0 / 3.0 - 1e-12..=1.0).contains(&sigma) {
            fails.push(format!("sigma({theta}) = {sigma} outside [1/3, 1]"));
        }
    }
    if worst_det > 1e-10 {
        fails.push(format!("max |det| = {worst_det:e}"));
    }
    if worst_eig < -1e-10 {
        fails.push(format!("min eigenvalue = {worst_eig:e}"));
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(1) {
        fails.push(format!("runtime {elapsed:?}"));
    }
    let detail = format!("max|det|={worst_det:.3e} min_eig={worst_eig:.3e} runtime={elapsed:?}");
    outcome(fails.is_empty(), if fails.is_empty() { detail } else { format!("{detail}; {}", fails.join("; ")) })
}

struct GridCell {
    label: String,
    theta: f64,
    checks: Vec<CheckRecord>,
}

impl GridCell {
    fn check(&self, name: &str) -> &CheckRecord {
        self.checks.iter().find(|c| c.name == name).expect("known check name")
    }
}

fn grid_problems() -> Vec<ProblemKind> {
    vec![
        ProblemKind::ScalarToy,
        ProblemKind::RandomQuadratic {
            n_s: 40,
            n_y: 40,
            n_x: 30,
            cond: 1.0,
            seed: GRID_SEED,
        },
        ProblemKind::RandomQuadratic {
            n_s: 40,
            n_y: 40,
            n_x: 30,
            cond: 100.0,
            seed: GRID_SEED,
        },
        ProblemKind::Lasso {
            m: 20,
            n: 50,
            mu: 0.1,
            seed: GRID_SEED,
        },
    ]
}

fn run_grid() -> Result<(Vec<GridCell>, Duration), String> {
    let start = Instant::now();
    let variants = [
        Variant::Standard,
        Variant::Proximal {
            h_scale: 1.0,
            g_scale: 1.0,
        },
        Variant::Linearized { tau: None },
    ];
    let mut cells = Vec::new();
    for kind in grid_problems() {
        let instance = generate::<f64>(&kind).map_err(|e| e.to_string())?;
        let reference = solve_reference(&instance).map_err(|e| e.to_string())?;
        let mut specs = Vec::new();
        for variant in variants {
            for beta in [0.5, 2.0] {
                for theta in THETA_GRID {
                    specs.push(CellSpec {
                        variant,
                        beta,
                        theta,
                        max_iter: GRID_ITERS,
                        res_tol: None,
                        seed: GRID_SEED,
                    });
                }
            }
        }
        let results = parallel_map(&specs, |spec| {
            run_cell(&instance, &reference, spec, Tolerances::default()).map(|cell| GridCell {
                label: format!("{} {} beta={} theta={}", kind.label(), spec.variant.name(), spec.beta, spec.theta),
                theta: spec.theta,
                checks: cell.checks(),
            })
        })
        .map_err(|e| e.to_string())?;
        for r in results {
            cells.push(r.map_err(|e| e.to_string())?);
        }
    }
    Ok((cells, start.elapsed()))
}

/// Collects the failing `(cell, check)` pairs over `names`.
fn grid_verdict(cells: &[GridCell], names: &[&str], filter: impl Fn(&GridCell) -> bool) -> Outcome {
    let mut failures = Vec::new();
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut n_cells = 0;
    for cell in cells.iter().filter(|c| filter(c)) {
        n_cells += 1;
        for &name in names {
            let c = cell.check(name);
            if c.status == CheckStatus::NotApplicable {
                failures.push(format!("{}: {name} not applicable", cell.label));
                continue;
            }
            let w = worst.entry(name).or_insert(f64::INFINITY);
            *w = w.min(c.worst_slack);
            if c.failed() {
                failures.push(format!("{}: {name} worst_slack={:e} at k={}", cell.label, c.worst_slack, c.worst_at));
            }
        }
    }
    let summary = worst.iter().map(|(n, w)| format!("{n}={w:.2e}")).collect::<Vec<_>>().join(" ");
    let mut detail = format!("{n_cells} cells; worst slacks {summary}");
    if !failures.is_empty() {
        detail.push_str(&format!("; {} failures, first: {}", failures.len(), failures[..failures.len().min(3)].join(" | ")));
    }
    outcome(failures.is_empty(), detail)
}

fn criterion_2(cells: &[GridCell], elapsed: Duration) -> Outcome {
    let mut o = grid_verdict(cells, &["hpe_error_condition"], |_| true);
    o.detail.push_str(&format!("; runtime {elapsed:.1?}"));
    if cells.len() != 4 * 3 * 2 * THETA_GRID.len() {
        o.pass = false;
        o.detail.push_str(&format!("; only {} cells ran", cells.len()));
    }
    if elapsed >= Duration::from_secs(60) {
        o.pass = false;
        o.detail.push_str("; runtime budget of 60 s exceeded");
    }
    o
}

fn criterion_3(cells: &[GridCell]) -> Outcome {
    let phi = golden_ratio::<f64>();
    let mut o = grid_verdict(cells, &["pointwise_bound", "pointwise_inclusion"], |c| c.theta < phi - 1e-12);
    let endpoint_applicable = cells
        .iter()
        .filter(|c| c.theta >= phi - 1e-12)
        .any(|c| c.check("pointwise_bound").status != CheckStatus::NotApplicable);
    if endpoint_applicable {
        o.pass = false;
        o.detail.push_str("; pointwise bound was evaluated at the golden ratio");
    }
    o
}

fn criterion_4(cells: &[GridCell]) -> Outcome {
    grid_verdict(
        cells,
        &["ergodic_residual_bound", "ergodic_eps_bound", "ergodic_eps_nonnegative", "ergodic_inclusion"],
        |_| true,
    )
}

fn criterion_5(cells: &[GridCell]) -> Outcome {
    grid_verdict(cells, &["three_point_identity", "telescoping", "descent"], |_| true)
}

fn criterion_6(cells: &[GridCell]) -> Outcome {
    let mut o = grid_verdict(
        cells,
        &[
            "xtilde_identity",
            "feasibility_identity",
            "inclusion_s",
            "inclusion_y",
            "first_step_bound",
            "delta_inequality",
            "tilde_distance_bound",
        ],
        |_| true,
    );
    match run_suite(
        SuiteName::BregmanAxioms,
        SuiteConfig {
            seed: GRID_SEED,
            max_iter: None,
        },
    ) {
        Ok(report) => {
            o.detail.push_str(&format!("; bregman_axioms {} cells", report.cells.len()));
            if !report.passed() {
                o.pass = false;
                o.detail.push_str(" FAILED");
            }
        }
        Err(e) => {
            o.pass = false;
            o.detail.push_str(&format!("; bregman_axioms error: {e}"));
        }
    }
    o
}

fn criterion_7() -> Outcome {
    let inst = scalar_toy::<f64>().unwrap();
    let admm = Admm::new(&inst.problem, prox_params(&inst.problem, &Variant::Standard, 1.0, 1.0, 0).unwrap()).unwrap();
    let reference = solve_reference(&inst).unwrap();
    let d0 = estimate_d0(admm.dgf(), &inst.z0, &reference.z_star).unwrap();
    let rec = admm.step(1, &inst.z0, &RateConstants::new(1.0, d0).unwrap()).unwrap();
    let r1 = match admm.dgf().dual_norm(&rec.r).unwrap() {
        DualValue::Finite(v) => v,
        DualValue::OutOfDomain => f64::NAN,
    };
    let observed = [
        ("s1", rec.s[0], -0.5),
        ("y1", rec.y[0], 0.25),
        ("x1", rec.x[0], 0.25),
        ("x_tilde1", rec.x_tilde[0], -0.5),
        ("r1_dual_norm", r1, 10f64.sqrt() / 4.0),
        ("d0", d0, 0.5),
    ];
    let bad: Vec<String> = observed
        .iter()
        .filter(|(_, got, want)| !((got - want).abs() <= 1e-12))
        .map(|(n, got, want)| format!("{n}={got} (want {want})"))
        .collect();
    let worst = observed.iter().map(|(_, g, w)| (g - w).abs()).fold(0.0, f64::max);
    outcome(bad.is_empty(), if bad.is_empty() { format!("max deviation {worst:.1e}") } else { bad.join("; ") })
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let kind = ProblemKind::RandomQuadratic {
        n_s: 40,
        n_y: 40,
        n_x: 30,
        cond: 1.0,
        seed: GRID_SEED,
    };
    let inst = generate::<f64>(&kind).unwrap();
    let admm = Admm::new(&inst.problem, prox_params(&inst.problem, &Variant::Standard, 1.0, 1.0, GRID_SEED).unwrap()).unwrap();
    let conv = admm
        .run(
            &inst.z0,
            RateConstants::new(1.0, 1.0).unwrap(),
            RunOptions {
                max_iter: 5000,
                res_tol: Some(1e-6),
            },
        )
        .unwrap();
    let last = conv.records.last().map_or(f64::NAN, |r| r.res_norm);
    if !(last <= 1e-6) {
        pass = false;
    }
    notes.push(format!("residual {last:.2e} after {} iterations", conv.iterations()));

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let outputs: Vec<_> = dirs
        .iter()
        .map(|d| {
            let config = RunConfig {
                problem: ProblemConfig::Lasso {
                    m: 20,
                    n: 50,
                    mu: 0.1,
                    seed: GRID_SEED,
                },
                beta: 1.0,
                theta_list: vec![0.75, 1.0, golden_ratio::<f64>()],
                variant: VariantConfig::Proximal {
                    h_scale: 1.0,
                    g_scale: 1.0,
                },
                max_iter: 300,
                res_tol: None,
                out_dir: d.path().to_path_buf(),
                seed: GRID_SEED,
            };
            run(&config).map(|_| {
                let mut files = BTreeMap::new();
                for entry in std::fs::read_dir(d.path()).unwrap() {
                    let entry = entry.unwrap();
                    files.insert(entry.file_name(), std::fs::read(entry.path()).unwrap());
                }
                files
            })
        })
        .collect();
    match (&outputs[0], &outputs[1]) {
        (Ok(a), Ok(b)) => {
            if a != b || a.len() != 4 {
                pass = false;
                notes.push(format!("run outputs differ ({} vs {} files)", a.len(), b.len()));
            } else {
                notes.push(format!("{} output files byte-identical", a.len()));
            }
        }
        (a, b) => {
            pass = false;
            notes.push(format!("run failed: {:?} {:?}", a.as_ref().err(), b.as_ref().err()));
        }
    }
    let suite = |_: ()| {
        run_suite(
            SuiteName::HpeConditions,
            SuiteConfig {
                seed: GRID_SEED,
                max_iter: Some(50),
            },
        )
        .map(|r| r.render())
    };
    match (suite(()), suite(())) {
        (Ok(a), Ok(b)) if a == b => notes.push("suite report byte-identical".into()),
        _ => {
            pass = false;
            notes.push("suite reports differ".into());
        }
    }
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = vec![(1, "parameter_identities", criterion_1())];
    match run_grid() {
        Ok((cells, elapsed)) => {
            results.push((2, "hpe_certification", criterion_2(&cells, elapsed)));
            results.push((3, "pointwise_bound", criterion_3(&cells)));
            results.push((4, "ergodic_bound", criterion_4(&cells)));
            results.push((5, "engine_identities", criterion_5(&cells)));
            results.push((6, "lemma_batteries", criterion_6(&cells)));
        }
        Err(e) => {
            for (i, name) in [
                (2, "hpe_certification"),
                (3, "pointwise_bound"),
                (4, "ergodic_bound"),
                (5, "engine_identities"),
                (6, "lemma_batteries"),
            ] {
                results.push((i, name, outcome(false, format!("grid failed: {e}"))));
            }
        }
    }
    results.push((7, "hand_trace", criterion_7()));
    results.push((8, "convergence_and_determinism", criterion_8()));
    let mut all = true;
    for (i, name, o) in &results {
        all &= o.pass;
        println!("criterion {i} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
