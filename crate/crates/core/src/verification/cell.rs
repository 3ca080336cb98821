use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{estimate_d0, ReferenceSolution};
use crate::bregman::{random_point, rel_slack, DistanceGenerating};
use crate::error::{Error, Result};
use crate::generators::{prox_params, Instance, Variant};
use crate::linalg::ProductVector;
use crate::padmm::{
    ergodic_certificate, lemma_checks, pointwise_certificate, Admm, AdmmRun, ErgodicCertificate, LemmaReport,
    PointwiseCertificate, RateConstants, RunOptions, SlackTrack,
};
use crate::scalar::Scalar;

/// Number of random probes of the three-point identity per run.
pub const THREE_POINT_PROBES: usize = 100;

/// One `(variant, β, θ)` cell on a fixed instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub variant: Variant,
    pub beta: f64,
    pub theta: f64,
    pub max_iter: usize,
    pub res_tol: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance of inequalities.
    pub inequality: f64,
    /// Tolerance of exact ε-subdifferential membership.
    pub inclusion: f64,
    /// Relative tolerance of algebraic identities.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inequality: 1e-9,
            inclusion: 1e-8,
            identity: 1e-10,
        }
    }
}

/// Identities of the generic HPE engine checked on a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineChecks {
    /// `(dw)_{z_{k−1}}(z) − (dw)_{z_k}(z) = (dw)_{z_{k−1}}(z̃_k) − (dw)_{z_k}(z̃_k) + λ_k⟨r_k, z̃_k − z⟩`.
    pub three_point: SlackTrack,
    /// `Σ λ_i r_i = Q(z₀ − z_k)`.
    pub telescoping: SlackTrack,
    /// `(dw)_{z_k}(z*) + η_k ≤ (dw)_{z_{k−1}}(z*) + η_{k−1}`.
    pub descent: SlackTrack,
}

/// `(z̃^a_k, r^a_k, ε^a_k)` recomputed from the first `k` records.
pub fn ergodic_point_at<T: Scalar>(run: &AdmmRun<T>, k: usize) -> Result<(ProductVector<T>, ProductVector<T>, T)> {
    if k == 0 || k > run.records.len() {
        return Err(Error::EmptyAccumulator);
    }
    let dims = run.z0.dims();
    let mut zt = ProductVector::zeros(dims);
    let mut r = ProductVector::zeros(dims);
    let mut inner = T::zero();
    for rec in &run.records[..k] {
        let z_tilde = rec.z_tilde();
        inner += rec.r.dot(&z_tilde);
        zt.axpy(T::one(), &z_tilde);
        r.axpy(T::one(), &rec.r);
    }
    let inv = T::one() / T::lit(k as f64);
    let zt = zt.scale(inv);
    let r = r.scale(inv);
    let eps = inner * inv - r.dot(&zt);
    Ok((zt, r, eps))
}

pub fn engine_checks<T: Scalar>(run: &AdmmRun<T>, z_star: &ProductVector<T>, seed: u64) -> Result<EngineChecks> {
    let w = &run.dgf;
    let q = w.operator();
    let mut telescoping = SlackTrack::default();
    let mut descent = SlackTrack::default();
    let mut sum_r = ProductVector::zeros(run.z0.dims());
    let mut sum_r_norms = T::zero();
    let mut z_prev = run.z0.clone();
    let mut eta_prev = run.consts.eta0;
    for rec in &run.records {
        let z = rec.z();
        sum_r.axpy(T::one(), &rec.r);
        sum_r_norms += rec.r.norm();
        let target = q.apply(&(&run.z0 - &z))?;
        let defect = (&sum_r - &target).norm();
        telescoping.push(rec.k, -(defect / (T::one() + target.norm() + sum_r_norms)).as_f64());
        let lhs = w.dw_eval(&z, z_star)? + rec.eta;
        let rhs = w.dw_eval(&z_prev, z_star)? + eta_prev;
        descent.push(rec.k, rel_slack(lhs, rhs));
        z_prev = z;
        eta_prev = rec.eta;
    }

    let mut three_point = SlackTrack::default();
    let n = run.records.len();
    if n > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..THREE_POINT_PROBES {
            let k = rng.random_range(1..=n);
            let rec = &run.records[k - 1];
            let zk = rec.z();
            let zkm1 = run.z_at(k - 1);
            let zt = rec.z_tilde();
            let scale = 10f64.powf(rng.random_range(-2.0..1.0)) * (1.0 + zk.norm().as_f64());
            let mut z = zk.clone();
            z.axpy(T::one(), &random_point::<T>(run.z0.dims(), scale, &mut rng));
            let a = w.dw_eval(&zkm1, &z)?;
            let b = w.dw_eval(&zk, &z)?;
            let c = w.dw_eval(&zkm1, &zt)?;
            let d = w.dw_eval(&zk, &zt)?;
            let e = rec.r.dot(&(&zt - &z));
            let defect = ((a - b) - (c - d + e)).abs();
            let mag = T::one() + a.abs() + b.abs() + c.abs() + d.abs() + e.abs();
            three_point.push(k, -(defect / mag).as_f64());
        }
    }
    Ok(EngineChecks {
        three_point,
        telescoping,
        descent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotApplicable => "not_applicable",
        }
    }
}

/// One named check over a range of iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub k_first: usize,
    pub k_last: usize,
    pub worst_slack: f64,
    pub worst_at: usize,
    pub tol: f64,
    pub status: CheckStatus,
}

impl CheckRecord {
    pub fn from_track(name: &str, track: &SlackTrack, k_first: usize, k_last: usize, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            k_first,
            k_last,
            worst_slack: if track.count == 0 { 0.0 } else { track.worst },
            worst_at: track.at,
            tol,
            status: if track.passed(tol) { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    pub fn not_applicable(name: &str, k_first: usize, k_last: usize, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            k_first,
            k_last,
            worst_slack: f64::NAN,
            worst_at: 0,
            tol,
            status: CheckStatus::NotApplicable,
        }
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

/// Everything computed for one cell.
#[derive(Debug, Clone)]
pub struct CellResult<T: Scalar> {
    pub spec: CellSpec,
    pub run: AdmmRun<T>,
    pub d0: T,
    pub pointwise: PointwiseCertificate,
    pub ergodic: ErgodicCertificate,
    pub lemmas: LemmaReport,
    pub engine: EngineChecks,
    pub tolerances: Tolerances,
}

impl<T: Scalar> CellResult<T> {
    pub fn checks(&self) -> Vec<CheckRecord> {
        let n = self.run.iterations();
        let tol = self.tolerances;
        let hpe = {
            let mut t = SlackTrack::default();
            for rec in &self.run.records {
                t.push(rec.k, rel_slack(rec.hpe_lhs, rec.hpe_rhs));
            }
            t
        };
        let mut out = vec![CheckRecord::from_track("hpe_error_condition", &hpe, 1, n, tol.inequality)];
        if self.pointwise.applicable {
            out.push(CheckRecord::from_track("pointwise_bound", &self.pointwise.bound, 1, n, tol.inequality));
        } else {
            out.push(CheckRecord::not_applicable("pointwise_bound", 1, n, tol.inequality));
        }
        out.push(CheckRecord::from_track("pointwise_inclusion", &self.pointwise.inclusion, 1, n, tol.inclusion));
        let e = &self.ergodic;
        out.push(CheckRecord::from_track("ergodic_residual_bound", &e.res_bound, 1, n, tol.inequality));
        out.push(CheckRecord::from_track("ergodic_eps_bound", &e.eps_bound, 1, n, tol.inequality));
        out.push(CheckRecord::from_track("ergodic_eps_nonnegative", &e.eps_nonneg, 1, n, tol.inequality));
        out.push(CheckRecord::from_track("ergodic_inclusion", &e.inclusion, 1, n, tol.inclusion));
        out.push(CheckRecord::from_track("ergodic_eps_consistency", &e.eps_consistency, 1, n, tol.inequality));
        out.push(CheckRecord::from_track("hpe_ergodic_bounds", &e.hpe_bounds, 1, n, tol.inequality));
        let l = &self.lemmas;
        out.push(CheckRecord::from_track("xtilde_identity", &l.xtilde_identity, 1, n, tol.identity));
        out.push(CheckRecord::from_track("feasibility_identity", &l.feasibility_identity, 1, n, tol.identity));
        out.push(CheckRecord::from_track("inclusion_s", &l.inclusion_s, 1, n, tol.inclusion));
        out.push(CheckRecord::from_track("inclusion_y", &l.inclusion_y, 1, n, tol.inclusion));
        out.push(CheckRecord::from_track("first_step_bound", &l.first_step, 1, n.min(1), tol.inequality));
        out.push(CheckRecord::from_track("delta_inequality", &l.delta_inequality, 2.min(n), n, tol.inequality));
        out.push(CheckRecord::from_track("tilde_distance_bound", &l.tilde_distance, 1, n, tol.inequality));
        let g = &self.engine;
        out.push(CheckRecord::from_track("three_point_identity", &g.three_point, 1, n, tol.inequality));
        out.push(CheckRecord::from_track("telescoping", &g.telescoping, 1, n, tol.inequality));
        out.push(CheckRecord::from_track("descent", &g.descent, 1, n, tol.inequality));
        out
    }

    /// True when no check failed; not-applicable checks do not count.
    pub fn certified(&self) -> bool {
        self.checks().iter().all(|c| !c.failed())
    }
}

/// Runs one cell against a precomputed reference solution.
pub fn run_cell<T: Scalar>(
    instance: &Instance<T>,
    reference: &ReferenceSolution<T>,
    spec: &CellSpec,
    tolerances: Tolerances,
) -> Result<CellResult<T>> {
    let problem = &instance.problem;
    let params = prox_params(problem, &spec.variant, spec.beta, spec.theta, spec.seed)?;
    let admm = Admm::new(problem, params)?;
    let d0 = estimate_d0(admm.dgf(), &instance.z0, &reference.z_star)?;
    let consts = RateConstants::new(T::lit(spec.theta), d0)?;
    let run = admm.run(
        &instance.z0,
        consts,
        RunOptions {
            max_iter: spec.max_iter,
            res_tol: spec.res_tol,
        },
    )?;
    let pointwise = pointwise_certificate(&run, problem, tolerances.inclusion)?;
    let ergodic = ergodic_certificate(&run, problem, tolerances.inclusion)?;
    let lemmas = lemma_checks(&run, problem, tolerances.inclusion)?;
    let engine = engine_checks(&run, &reference.z_star, spec.seed)?;
    Ok(CellResult {
        spec: spec.clone(),
        run,
        d0,
        pointwise,
        ergodic,
        lemmas,
        engine,
        tolerances,
    })
}
