//! Per-run checks of the rate bounds, the inclusions and the auxiliary
//! inequalities of the proximal ADMM.

use super::params::golden_ratio;
use super::solver::AdmmRun;
use super::ProblemSpec;
use crate::bregman::{rel_slack, DistanceGenerating};
use crate::error::Result;
use crate::linalg::{DualValue, ProductVector, Vector};
use crate::monotone::KktOperator;
use crate::ne_hpe::{ergodic_bound_at, RateParams};
use crate::scalar::Scalar;

/// Stepsizes within this distance of the golden ratio have `σ_θ = 1`.
const ENDPOINT_GAP: f64 = 1e-12;

/// Worst value of a signed slack series and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackTrack {
    pub worst: f64,
    pub at: usize,
    pub count: usize,
}

impl Default for SlackTrack {
    fn default() -> Self {
        Self {
            worst: f64::INFINITY,
            at: 0,
            count: 0,
        }
    }
}

impl SlackTrack {
    pub fn push(&mut self, k: usize, slack: f64) {
        self.count += 1;
        // a NaN sticks as the worst value
        if self.worst.is_nan() {
            return;
        }
        if slack.is_nan() || slack < self.worst {
            self.worst = slack;
            self.at = k;
        }
    }

    /// Vacuously true when nothing was recorded.
    pub fn passed(&self, tol: f64) -> bool {
        self.count == 0 || self.worst >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseRow {
    pub k: usize,
    /// `min_{i ≤ k} ‖r_i‖*`.
    pub observed: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseCertificate {
    /// False at the golden-ratio stepsize, where `σ_θ = 1`.
    pub applicable: bool,
    pub rows: Vec<PointwiseRow>,
    pub bound: SlackTrack,
    pub inclusion: SlackTrack,
}

impl PointwiseCertificate {
    pub fn passed(&self, tol: f64, inclusion_tol: f64) -> bool {
        (!self.applicable || self.bound.passed(tol)) && self.inclusion.passed(inclusion_tol)
    }
}

/// Bound on `min_{i ≤ k} ‖r_i‖*`: `2√d₀/√k · √((1 + σ + 2τ)/(1 − σ))`.
pub fn pointwise_bound_value(d0: f64, sigma: f64, tau: f64, k: usize) -> f64 {
    2.0 * d0.sqrt() / (k as f64).sqrt() * ((1.0 + sigma + 2.0 * tau) / (1.0 - sigma)).sqrt()
}

/// Checks the best-iterate bound at every `k` and
/// `r_k ∈ (∂g(s_k) − Dᵀx̃_k, ∂f(y_k) − Cᵀx̃_k, C y_k + D s_k − c)` exactly.
pub fn pointwise_certificate<T: Scalar>(
    run: &AdmmRun<T>,
    problem: &ProblemSpec<T>,
    inclusion_tol: f64,
) -> Result<PointwiseCertificate> {
    let theta = run.params.theta().as_f64();
    let applicable = theta < golden_ratio::<f64>() - ENDPOINT_GAP && run.consts.sigma_theta.as_f64() < 1.0;
    let sigma = run.consts.sigma_theta.as_f64();
    let tau = run.consts.tau_theta.as_f64();
    let d0 = run.consts.d0.as_f64();
    let op = KktOperator::new(problem);
    let tol = T::lit(inclusion_tol);
    let mut best = f64::INFINITY;
    let mut rows = Vec::with_capacity(run.records.len());
    let mut bound_track = SlackTrack::default();
    let mut inclusion = SlackTrack::default();
    for rec in &run.records {
        best = best.min(rec.res_norm.as_f64());
        let bound = applicable.then(|| pointwise_bound_value(d0, sigma, tau, rec.k));
        if let Some(b) = bound {
            bound_track.push(rec.k, rel_slack(best, b));
        }
        let check = op.inclusion(&rec.z_tilde(), &rec.r, T::zero(), T::zero(), tol)?;
        inclusion.push(rec.k, check.worst_slack());
        rows.push(PointwiseRow {
            k: rec.k,
            observed: best,
            bound,
        });
    }
    Ok(PointwiseCertificate {
        applicable,
        rows,
        bound: bound_track,
        inclusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicRow {
    pub k: usize,
    /// `‖r^a_k‖* = ‖z₀ − z_k‖_Q / k`.
    pub res_norm: f64,
    /// Transportation-formula enlargements of `g` and `f` at the averages.
    pub eps_s: f64,
    pub eps_y: f64,
    /// The same sums taken with the proximal residual parts only.
    pub eps_prox_s: f64,
    pub eps_prox_y: f64,
    /// `ε^a_k` of the HPE ledger; equals `eps_s + eps_y`.
    pub eps_hpe: f64,
    pub bound_res: f64,
    pub bound_eps: f64,
    /// The generic HPE ergodic bounds with `m = M = 1` and the observed `ρ_k`.
    pub hpe_bound_res: f64,
    pub hpe_bound_eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicCertificate {
    pub rows: Vec<ErgodicRow>,
    pub res_bound: SlackTrack,
    pub eps_bound: SlackTrack,
    /// `eps_s + eps_y` itself, which must be nonnegative.
    pub eps_nonneg: SlackTrack,
    pub inclusion: SlackTrack,
    /// `−|eps_s + eps_y − ε^a_k| / (1 + |ε^a_k|)`.
    pub eps_consistency: SlackTrack,
    pub hpe_bounds: SlackTrack,
}

impl ErgodicCertificate {
    pub fn passed(&self, tol: f64, inclusion_tol: f64) -> bool {
        self.res_bound.passed(tol)
            && self.eps_bound.passed(tol)
            && self.eps_nonneg.passed(tol)
            && self.hpe_bounds.passed(tol)
            && self.inclusion.passed(inclusion_tol)
    }
}

/// `2√(2(1+τ)d₀)/k`.
pub fn ergodic_res_bound_value(d0: f64, tau: f64, k: usize) -> f64 {
    2.0 * (2.0 * (1.0 + tau) * d0).sqrt() / k as f64
}

/// `3(1+τ)[3θ² + 4σ(θ²+θ+1)] d₀ / (θ² k)`.
pub fn ergodic_eps_bound_value(d0: f64, sigma: f64, tau: f64, theta: f64, k: usize) -> f64 {
    let t2 = theta * theta;
    3.0 * (1.0 + tau) * (3.0 * t2 + 4.0 * sigma * (t2 + theta + 1.0)) * d0 / (t2 * k as f64)
}

struct Running<T: Scalar> {
    s: Vector<T>,
    y: Vector<T>,
    x_tilde: Vector<T>,
    u: Vector<T>,
    v: Vector<T>,
    rs: Vector<T>,
    ry: Vector<T>,
    r: ProductVector<T>,
    us: T,
    vy: T,
    rss: T,
    ryy: T,
}

/// Averages of the iterates and the ε-subdifferential certificates at every `k`.
///
/// With `u_i = H(s_{i−1} − s_i) + Dᵀx̃_i ∈ ∂g(s_i)`, the transportation formula gives
/// `ū ∈ ∂_{ε_s} g(s̄)` for `ε_s = (1/k)Σ⟨u_i, s_i − s̄⟩`, and likewise for `f`.
pub fn ergodic_certificate<T: Scalar>(
    run: &AdmmRun<T>,
    problem: &ProblemSpec<T>,
    inclusion_tol: f64,
) -> Result<ErgodicCertificate> {
    let dims = problem.dims();
    let theta = run.params.theta().as_f64();
    let sigma = run.consts.sigma_theta.as_f64();
    let tau = run.consts.tau_theta.as_f64();
    let d0 = run.consts.d0.as_f64();
    let rate = RateParams {
        dw0: d0,
        eta0: run.consts.eta0.as_f64(),
        sigma,
        m: 1.0,
        big_m: 1.0,
        diameter: None,
    };
    let op = KktOperator::new(problem);
    let tol = T::lit(inclusion_tol);
    let mut acc = Running {
        s: Vector::zeros(dims.s),
        y: Vector::zeros(dims.y),
        x_tilde: Vector::zeros(dims.x),
        u: Vector::zeros(dims.s),
        v: Vector::zeros(dims.y),
        rs: Vector::zeros(dims.s),
        ry: Vector::zeros(dims.y),
        r: ProductVector::zeros(dims),
        us: T::zero(),
        vy: T::zero(),
        rss: T::zero(),
        ryy: T::zero(),
    };
    let mut cert = ErgodicCertificate {
        rows: Vec::with_capacity(run.records.len()),
        res_bound: SlackTrack::default(),
        eps_bound: SlackTrack::default(),
        eps_nonneg: SlackTrack::default(),
        inclusion: SlackTrack::default(),
        eps_consistency: SlackTrack::default(),
        hpe_bounds: SlackTrack::default(),
    };
    let mut sum_inner = T::zero();
    let mut rho = T::zero();
    for (idx, rec) in run.records.iter().enumerate() {
        let k = rec.k;
        let u = &rec.r.s + problem.d_mat().tr_mul(&rec.x_tilde);
        let v = &rec.r.y + problem.c_mat().tr_mul(&rec.x_tilde);
        acc.us += u.dot(&rec.s);
        acc.vy += v.dot(&rec.y);
        acc.rss += rec.r.s.dot(&rec.s);
        acc.ryy += rec.r.y.dot(&rec.y);
        acc.s += &rec.s;
        acc.y += &rec.y;
        acc.x_tilde += &rec.x_tilde;
        acc.u += &u;
        acc.v += &v;
        acc.rs += &rec.r.s;
        acc.ry += &rec.r.y;
        acc.r.axpy(T::one(), &rec.r);
        sum_inner += rec.r.dot(&rec.z_tilde());
        let step = &run.hpe.log[idx];
        rho = rho.max(step.dw_prev_tilde);

        let inv = T::one() / T::lit(k as f64);
        let s_bar = &acc.s * inv;
        let y_bar = &acc.y * inv;
        let zt_bar = ProductVector::new(s_bar.clone(), y_bar.clone(), &acc.x_tilde * inv);
        let r_bar = acc.r.scale(inv);
        let eps_s = acc.us * inv - (&acc.u * inv).dot(&s_bar);
        let eps_y = acc.vy * inv - (&acc.v * inv).dot(&y_bar);
        let eps_prox_s = acc.rss * inv - (&acc.rs * inv).dot(&s_bar);
        let eps_prox_y = acc.ryy * inv - (&acc.ry * inv).dot(&y_bar);
        let eps_hpe = sum_inner * inv - r_bar.dot(&zt_bar);
        let res_norm = match run.dgf.grad_gap_dual_norm(&rec.z(), &run.z0)? {
            DualValue::Finite(n) => n.as_f64() / k as f64,
            DualValue::OutOfDomain => f64::INFINITY,
        };
        let bound_res = ergodic_res_bound_value(d0, tau, k);
        let bound_eps = ergodic_eps_bound_value(d0, sigma, tau, theta, k);
        let hpe = ergodic_bound_at(&rate, k as f64, rho.as_f64())?;
        let eps_sum = (eps_s + eps_y).as_f64();

        cert.res_bound.push(k, rel_slack(res_norm, bound_res));
        cert.eps_bound.push(k, rel_slack(eps_sum, bound_eps));
        cert.eps_nonneg.push(k, eps_sum);
        cert.hpe_bounds
            .push(k, rel_slack(res_norm, hpe.r_bound).min(rel_slack(eps_hpe.as_f64(), hpe.eps_bound)));
        let gap = (eps_sum - eps_hpe.as_f64()).abs();
        cert.eps_consistency.push(k, -gap / (1.0 + eps_hpe.as_f64().abs() + acc.us.abs().as_f64() * inv.as_f64()));
        let check = op.inclusion(&zt_bar, &r_bar, eps_s.max(T::zero()), eps_y.max(T::zero()), tol)?;
        cert.inclusion.push(k, check.worst_slack());
        cert.rows.push(ErgodicRow {
            k,
            res_norm,
            eps_s: eps_s.as_f64(),
            eps_y: eps_y.as_f64(),
            eps_prox_s: eps_prox_s.as_f64(),
            eps_prox_y: eps_prox_y.as_f64(),
            eps_hpe: eps_hpe.as_f64(),
            bound_res,
            bound_eps,
            hpe_bound_res: hpe.r_bound,
            hpe_bound_eps: hpe.eps_bound,
        });
    }
    Ok(cert)
}

/// Signed slacks of the per-iteration identities and inequalities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LemmaReport {
    /// `x̃_k − x_{k−1} = βCΔy_k + Δx_k/θ`.
    pub xtilde_identity: SlackTrack,
    /// `(x_k − x_{k−1})/(θβ) + C y_k + D s_k − c = 0`.
    pub feasibility_identity: SlackTrack,
    /// `0 ∈ H(s_k − s_{k−1}) + ∂g(s_k) − Dᵀx̃_k`.
    pub inclusion_s: SlackTrack,
    /// `0 ∈ (G + βCᵀC)(y_k − y_{k−1}) + ∂f(y_k) − Cᵀx̃_k`.
    pub inclusion_y: SlackTrack,
    /// `(1/√θ)(½‖Δy₁‖²_G − (1/√θ)⟨CΔy₁, Δx₁⟩) ≤ τ_θ d₀`.
    pub first_step: SlackTrack,
    /// `(1/θ)⟨CΔy_k, Δx_k⟩ ≥ ((1−θ)/θ)⟨CΔy_k, Δx_{k−1}⟩ + ½‖Δy_k‖²_G − ½‖Δy_{k−1}‖²_G`, `k ≥ 2`.
    pub delta_inequality: SlackTrack,
    /// `(dw)_{z_{k−1}}(z̃_k) ≤ 4(1+τ_θ)(θ²+θ+1)/θ² · d₀`.
    pub tilde_distance: SlackTrack,
    /// Largest relative first-order residual of the two subproblem solves.
    pub max_subproblem_residual: f64,
}

impl LemmaReport {
    pub fn passed(&self, identity_tol: f64, tol: f64, inclusion_tol: f64) -> bool {
        self.xtilde_identity.passed(identity_tol)
            && self.feasibility_identity.passed(identity_tol)
            && self.inclusion_s.passed(inclusion_tol)
            && self.inclusion_y.passed(inclusion_tol)
            && self.first_step.passed(tol)
            && self.delta_inequality.passed(tol)
            && self.tilde_distance.passed(tol)
    }
}

fn identity_slack<T: Scalar>(defect: &Vector<T>, scale: T) -> f64 {
    -(defect.norm() / (T::one() + scale)).as_f64()
}

pub fn lemma_checks<T: Scalar>(run: &AdmmRun<T>, problem: &ProblemSpec<T>, inclusion_tol: f64) -> Result<LemmaReport> {
    let beta = run.params.beta();
    let theta = run.params.theta();
    let g_op = run.params.g();
    let c_mat = problem.c_mat();
    let d0 = run.consts.d0;
    let tau = run.consts.tau_theta;
    let op = KktOperator::new(problem);
    let tol = T::lit(inclusion_tol);
    let half = T::lit(0.5);
    let tilde_rhs = T::lit(4.0) * (T::one() + tau) * (theta * theta + theta + T::one()) / (theta * theta) * d0;
    let mut rep = LemmaReport::default();
    let mut x_prev = run.z0.x.clone();
    let mut prev: Option<(Vector<T>, T)> = None;
    for (idx, rec) in run.records.iter().enumerate() {
        let k = rec.k;
        let c_dy = c_mat * &rec.dy;
        let expected = &c_dy * beta + &rec.dx / theta;
        let lhs = &rec.x_tilde - &x_prev;
        rep.xtilde_identity
            .push(k, identity_slack(&(&lhs - &expected), rec.x_tilde.norm() + x_prev.norm() + expected.norm()));
        let feas = problem.constraint_residual(&rec.s, &rec.y);
        let scaled = &rec.dx / (theta * beta);
        rep.feasibility_identity
            .push(k, identity_slack(&(&scaled + &feas), scaled.norm() + feas.norm() + problem.c().norm()));
        let check = op.inclusion(&rec.z_tilde(), &rec.r, T::zero(), T::zero(), tol)?;
        rep.inclusion_s.push(k, check.s_slack);
        rep.inclusion_y.push(k, check.y_slack);
        let dy_g = g_op.quad_unchecked(&rec.dy);
        let cross = c_dy.dot(&rec.dx);
        match &prev {
            None => {
                let rt = theta.sqrt();
                let lhs = (half * dy_g - cross / rt) / rt;
                rep.first_step.push(k, rel_slack(lhs, tau * d0));
            }
            Some((dx_prev, dy_g_prev)) => {
                let lhs = cross / theta;
                let rhs = (T::one() - theta) / theta * c_dy.dot(dx_prev) + half * dy_g - half * *dy_g_prev;
                rep.delta_inequality.push(k, rel_slack(rhs, lhs));
            }
        }
        rep.tilde_distance.push(k, rel_slack(run.hpe.log[idx].dw_prev_tilde, tilde_rhs));
        rep.max_subproblem_residual = rep
            .max_subproblem_residual
            .max(rec.sub_residual_s.as_f64())
            .max(rec.sub_residual_y.as_f64());
        prev = Some((rec.dx.clone(), dy_g));
        x_prev = rec.x.clone();
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_track_keeps_the_minimum() {
        let mut t = SlackTrack::default();
        assert!(t.passed(0.0));
        t.push(1, 0.5);
        t.push(2, -0.1);
        t.push(3, 0.2);
        assert_eq!((t.worst, t.at, t.count), (-0.1, 2, 3));
        assert!(!t.passed(1e-3));
        t.push(4, f64::NAN);
        assert!(t.worst.is_nan());
        assert!(!t.passed(1.0));
    }

    #[test]
    fn bound_formulas() {
        let b = pointwise_bound_value(0.5, 0.5, 4.0, 1);
        assert!((b - 2.0 * 0.5f64.sqrt() * 19f64.sqrt()).abs() < 1e-14);
        let b4 = pointwise_bound_value(0.5, 0.5, 4.0, 4);
        assert!((b / b4 - 2.0).abs() < 1e-14);
        assert!((ergodic_res_bound_value(0.5, 4.0, 2) - 5f64.sqrt()).abs() < 1e-14);
        let e = ergodic_eps_bound_value(0.5, 0.5, 4.0, 1.0, 1);
        assert!((e - 3.0 * 5.0 * 9.0 * 0.5).abs() < 1e-12);
    }
}
