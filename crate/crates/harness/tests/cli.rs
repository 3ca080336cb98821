use std::path::Path;
use std::process::{Command, Output};

use hpe_admm_harness::{run, ProblemConfig, RunConfig, VariantConfig, CSV_HEADER};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpe-admm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn toy_config(out: &Path, thetas: &str, extra: &str) -> String {
    format!(
        "beta = 1.0\ntheta_list = {thetas}\nmax_iter = 50\nout_dir = {:?}\nseed = 3\n{extra}\n[problem]\nkind = \"scalar_toy\"\n[variant]\nkind = \"standard\"\n",
        out.to_str().unwrap()
    )
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn solve_scalar_toy_certifies_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &toy_config(&out, "[1.0, 1.618033988749895]", ""));
    let o = bin(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_csv(&out.join("iters_theta=1.csv"));
    assert_eq!(header, CSV_HEADER);
    assert_eq!(rows.len(), 50);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (i + 1).to_string());
        assert!(num(&row[1]) >= 0.0 && num(&row[2]) >= 0.0);
        assert!(num(&row[6]) <= num(&row[7]) + 1e-9 * (1.0 + num(&row[6]).abs() + num(&row[7]).abs()));
        assert!(num(&row[1]) <= num(&row[8]));
        assert!(num(&row[2]) <= num(&row[9]));
        assert!(num(&row[3]) + num(&row[4]) <= num(&row[10]));
    }
    let (_, rows) = read_csv(&out.join("iters_theta=1.618033988749895.csv"));
    assert!(rows.iter().all(|r| r[8].is_empty()));

    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let cells = summary.as_array().unwrap();
    assert_eq!(cells.len(), 2);
    let first = &cells[0];
    for key in ["problem", "dims", "beta", "theta", "sigma_theta", "tau_theta", "d0_estimate", "iterations", "certified", "worst_slacks"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(first["sigma_theta"].as_f64(), Some(0.5));
    assert_eq!(first["d0_estimate"].as_f64(), Some(0.5));
    assert_eq!(first["iterations"].as_u64(), Some(50));
    assert_eq!(first["certified"].as_bool(), Some(true));
    assert!(cells[1]["worst_slacks"]["pointwise_bound"].is_null());
    assert!(cells[1]["worst_slacks"]["ergodic_eps_bound"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn theta_outside_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &toy_config(&out, "[1.0, 1.7]", ""));
    let o = bin(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta"));
    assert!(!out.exists());
}

#[test]
fn residual_tolerance_truncates_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &toy_config(&out, "[1.0]", "res_tol = 1e-8"));
    let o = bin(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv(&out.join("iters_theta=1.csv"));
    assert!(rows.len() < 50);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary[0]["iterations"].as_u64(), Some(rows.len() as u64));
}

#[test]
fn linearized_tau_below_threshold_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let body = toy_config(&out, "[1.0]", "").replace("kind = \"standard\"", "kind = \"linearized\"\ntau = 0.5");
    let cfg = write_config(dir.path(), &body);
    let o = bin(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));
}

#[test]
fn missing_config_file_is_an_error() {
    let o = bin(&["solve", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_suite_passes_and_is_deterministic() {
    let a = bin(&["verify", "--suite", "bregman_axioms", "--seed", "5"]);
    let b = bin(&["verify", "--suite", "bregman_axioms", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("suite bregman_axioms seed 5 pass"));
    let o = bin(&["verify", "--suite", "unknown", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_rate_bounds_marks_pointwise_not_applicable_at_golden_ratio() {
    let o = bin(&["verify", "--suite", "rate_bounds", "--seed", "2", "--max-iter", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let endpoint = text
        .split("cell ")
        .find(|c| c.contains("theta=1.61803398874989490e0"))
        .expect("golden-ratio cell present");
    assert!(endpoint.contains("pointwise_bound") && endpoint.contains("not_applicable"));
    assert!(endpoint.contains("ergodic_eps_bound") && !endpoint.contains(" fail"));
}

#[test]
fn sweep_writes_one_csv_per_theta() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = bin(&[
        "sweep", "--problem", "lasso", "--theta", "0.5,1,1.5", "--beta", "1", "--max-iter", "40", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    for t in ["0.5", "1", "1.5"] {
        let (_, rows) = read_csv(&out.join(format!("iters_theta={t}.csv")));
        assert_eq!(rows.len(), 40);
    }
    assert!(out.join("summary.json").exists());
}

#[test]
fn library_run_matches_between_calls() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let bytes: Vec<_> = dirs
        .iter()
        .map(|d| {
            let config = RunConfig {
                problem: ProblemConfig::RandomQuadratic {
                    n_s: 6,
                    n_y: 5,
                    n_x: 4,
                    cond: 10.0,
                    seed: 9,
                },
                beta: 0.5,
                theta_list: vec![0.3, 1.25],
                variant: VariantConfig::Linearized { tau: None },
                max_iter: 60,
                res_tol: None,
                out_dir: d.path().to_path_buf(),
                seed: 9,
            };
            let out = run(&config).unwrap();
            assert!(out.certified());
            (
                std::fs::read(d.path().join("summary.json")).unwrap(),
                std::fs::read(d.path().join("iters_theta=0.3.csv")).unwrap(),
            )
        })
        .collect();
    assert_eq!(bytes[0], bytes[1]);
}
