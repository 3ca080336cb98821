//! Generic non-Euclidean HPE engine.
//!
//! The engine never produces iterates. An oracle (the proximal ADMM, or a
//! test oracle) proposes quadruples `(λ, z̃, z, ε, η)`; the engine checks the
//! relative error condition
//!
//! ```text
//! (dw)_{z_k}(z̃_k) + λ_k ε_k + η_k ≤ σ (dw)_{z_{k−1}}(z̃_k) + η_{k−1}
//! ```
//!
//! keeps the ergodic aggregates, and evaluates the pointwise and ergodic
//! rate bounds. A step that fails the check is still accumulated, but the run
//! is no longer certified.

use crate::bregman::DistanceGenerating;
use crate::error::{invalid, Error, Result};
use crate::linalg::{DualValue, ProductVector};
use crate::scalar::Scalar;

/// Default relative tolerance of the error-condition check.
pub const HPE_TOL: f64 = 1e-9;

/// One candidate step `(λ_k, z̃_k, z_k, ε_k, η_k)`.
#[derive(Debug, Clone)]
pub struct HpeQuadruple<T: Scalar> {
    pub lambda: T,
    pub z_tilde: ProductVector<T>,
    pub z_new: ProductVector<T>,
    pub eps: T,
    pub eta_new: T,
}

impl<T: Scalar> HpeQuadruple<T> {
    pub fn new(lambda: T, z_tilde: ProductVector<T>, z_new: ProductVector<T>, eps: T, eta_new: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(invalid("lambda", "must be positive"));
        }
        if eps < T::zero() {
            return Err(invalid("eps", "must be nonnegative"));
        }
        if eta_new < T::zero() {
            return Err(invalid("eta", "must be nonnegative"));
        }
        Ok(Self {
            lambda,
            z_tilde,
            z_new,
            eps,
            eta_new,
        })
    }
}

/// Both sides of the error condition at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCheck<T> {
    pub pass: bool,
    pub lhs: T,
    pub rhs: T,
}

/// Per-step log entry.
#[derive(Debug, Clone)]
pub struct StepRecord<T: Scalar> {
    pub k: usize,
    pub lambda: T,
    pub r: ProductVector<T>,
    pub r_dual_norm: T,
    pub eps: T,
    pub eta: T,
    pub lhs: T,
    pub rhs: T,
    pub pass: bool,
    /// `(dw)_{z_{k−1}}(z̃_k)`.
    pub dw_prev_tilde: T,
}

/// Running state of one NE-HPE run.
#[derive(Debug, Clone)]
pub struct HpeState<T: Scalar> {
    pub z0: ProductVector<T>,
    pub z_prev: ProductVector<T>,
    pub eta0: T,
    pub eta_prev: T,
    pub k: usize,
    pub lambda_sum: T,
    pub sum_lambda_r: ProductVector<T>,
    pub sum_lambda_ztilde: ProductVector<T>,
    /// `Σ λ_i (ε_i + ⟨r_i, z̃_i⟩)`.
    pub sum_lambda_inner: T,
    /// `max_i (dw)_{z_{i−1}}(z̃_i)`.
    pub rho: T,
    pub certified: bool,
    pub log: Vec<StepRecord<T>>,
}

/// Ergodic triple `(z̃^a_k, r^a_k, ε^a_k)`.
#[derive(Debug, Clone)]
pub struct ErgodicPoint<T: Scalar> {
    pub z_tilde: ProductVector<T>,
    pub r: ProductVector<T>,
    pub eps: T,
    pub lambda_sum: T,
}

impl<T: Scalar> HpeState<T> {
    pub fn new(z0: ProductVector<T>, eta0: T) -> Result<Self> {
        if eta0 < T::zero() {
            return Err(invalid("eta0", "must be nonnegative"));
        }
        let zeros = ProductVector::zeros(z0.dims());
        Ok(Self {
            z_prev: z0.clone(),
            z0,
            eta0,
            eta_prev: eta0,
            k: 0,
            lambda_sum: T::zero(),
            sum_lambda_r: zeros.clone(),
            sum_lambda_ztilde: zeros,
            sum_lambda_inner: T::zero(),
            rho: T::zero(),
            certified: true,
            log: Vec::new(),
        })
    }

    pub fn lambdas(&self) -> Vec<T> {
        self.log.iter().map(|r| r.lambda).collect()
    }

    /// `None` before the first accumulated step.
    pub fn ergodic(&self) -> Option<ErgodicPoint<T>> {
        if self.k == 0 {
            return None;
        }
        let inv = T::one() / self.lambda_sum;
        let z_tilde = self.sum_lambda_ztilde.scale(inv);
        let r = self.sum_lambda_r.scale(inv);
        let eps = self.sum_lambda_inner * inv - r.dot(&z_tilde);
        Some(ErgodicPoint {
            z_tilde,
            r,
            eps,
            lambda_sum: self.lambda_sum,
        })
    }

    /// `‖r^a_k‖*` through the telescoped form `Λ_k r^a_k = ∇w(z_0) − ∇w(z_k)`.
    pub fn ergodic_residual_norm<W: DistanceGenerating<T>>(&self, w: &W) -> Result<DualValue<T>> {
        if self.k == 0 {
            return Err(Error::EmptyAccumulator);
        }
        Ok(match w.grad_gap_dual_norm(&self.z_prev, &self.z0)? {
            DualValue::Finite(v) => DualValue::Finite(v / self.lambda_sum),
            DualValue::OutOfDomain => DualValue::OutOfDomain,
        })
    }
}

/// `r_k = (1/λ) ∇(dw)_{z_k}(z_{k−1})`.
pub fn step_residual<T: Scalar, W: DistanceGenerating<T>>(
    w: &W,
    z_prev: &ProductVector<T>,
    z_new: &ProductVector<T>,
    lambda: T,
) -> Result<ProductVector<T>> {
    if !(lambda > T::zero()) {
        return Err(invalid("lambda", "must be positive"));
    }
    Ok(w.dw_grad(z_new, z_prev)?.scale(T::one() / lambda))
}

/// Evaluates both sides of the error condition. Pass iff
/// `lhs ≤ rhs + tol (1 + |lhs| + |rhs|)`.
pub fn validate_step<T: Scalar, W: DistanceGenerating<T>>(
    state: &HpeState<T>,
    quad: &HpeQuadruple<T>,
    sigma: T,
    w: &W,
    tol: T,
) -> Result<StepCheck<T>> {
    let lhs = w.dw_eval(&quad.z_new, &quad.z_tilde)? + quad.lambda * quad.eps + quad.eta_new;
    let rhs = sigma * w.dw_eval(&state.z_prev, &quad.z_tilde)? + state.eta_prev;
    let pass = lhs <= rhs + tol * (T::one() + lhs.abs() + rhs.abs());
    Ok(StepCheck { pass, lhs, rhs })
}

/// Folds one step into the running sums and advances `z_prev`, `η_prev`.
pub fn accumulate<T: Scalar, W: DistanceGenerating<T>>(
    state: &mut HpeState<T>,
    quad: &HpeQuadruple<T>,
    r: ProductVector<T>,
    w: &W,
    check: StepCheck<T>,
) -> Result<()> {
    let dw_prev_tilde = w.dw_eval(&state.z_prev, &quad.z_tilde)?;
    let r_dual_norm = match w.grad_gap_dual_norm(&quad.z_new, &state.z_prev)? {
        DualValue::Finite(v) => v / quad.lambda,
        DualValue::OutOfDomain => return Err(Error::Consistency("step residual outside the dual domain".into())),
    };
    let lambda = quad.lambda;
    state.k += 1;
    state.lambda_sum += lambda;
    state.sum_lambda_r.axpy(lambda, &r);
    state.sum_lambda_ztilde.axpy(lambda, &quad.z_tilde);
    state.sum_lambda_inner += lambda * (quad.eps + r.dot(&quad.z_tilde));
    state.rho = state.rho.max(dw_prev_tilde);
    state.certified &= check.pass;
    state.log.push(StepRecord {
        k: state.k,
        lambda,
        r,
        r_dual_norm,
        eps: quad.eps,
        eta: quad.eta_new,
        lhs: check.lhs,
        rhs: check.rhs,
        pass: check.pass,
        dw_prev_tilde,
    });
    state.z_prev = quad.z_new.clone();
    state.eta_prev = quad.eta_new;
    Ok(())
}

/// Couples a distance generating function, `σ` and a state.
#[derive(Debug, Clone)]
pub struct HpeEngine<T: Scalar, W> {
    w: W,
    sigma: T,
    tol: T,
    state: HpeState<T>,
}

impl<T: Scalar, W: DistanceGenerating<T>> HpeEngine<T, W> {
    pub fn new(w: W, sigma: T, z0: ProductVector<T>, eta0: T) -> Result<Self> {
        if sigma < T::zero() || sigma > T::one() {
            return Err(invalid("sigma", "must lie in [0, 1]"));
        }
        z0.check_dims("hpe start point", w.dims())?;
        Ok(Self {
            w,
            sigma,
            tol: T::tol(HPE_TOL),
            state: HpeState::new(z0, eta0)?,
        })
    }

    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    /// Validates and accumulates one quadruple.
    pub fn submit(&mut self, quad: HpeQuadruple<T>) -> Result<&StepRecord<T>> {
        let check = validate_step(&self.state, &quad, self.sigma, &self.w, self.tol)?;
        let r = step_residual(&self.w, &self.state.z_prev, &quad.z_new, quad.lambda)?;
        accumulate(&mut self.state, &quad, r, &self.w, check)?;
        Ok(self.state.log.last().expect("just pushed"))
    }

    pub fn state(&self) -> &HpeState<T> {
        &self.state
    }

    pub fn into_state(self) -> HpeState<T> {
        self.state
    }

    pub fn dgf(&self) -> &W {
        &self.w
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

/// Inputs of the rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Upper estimate of `(dw)_0`.
    pub dw0: f64,
    pub eta0: f64,
    pub sigma: f64,
    pub m: f64,
    pub big_m: f64,
    /// Bregman diameter of `Dom T`, when known.
    pub diameter: Option<f64>,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(invalid("sigma", "must lie in [0, 1]"));
        }
        if !(self.m > 0.0) || self.m > self.big_m {
            return Err(invalid("m, M", "need 0 < m <= M"));
        }
        if self.dw0 < 0.0 || self.eta0 < 0.0 {
            return Err(invalid("dw0, eta0", "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseBound {
    pub r_bound: f64,
    pub eps_bound: f64,
}

/// Bound on `(‖r_i‖*, ε_i)` for the best index `i ≤ k` under weight exponent `t`:
///
/// ```text
/// ‖r_i‖* ≤ (2M/√m) √( ((1+σ)dw0 + 2η0)/(1−σ) · λ_i^{t−2} / Σ_j λ_j^t )
/// ε_i    ≤ ((1+σ)dw0 + 2η0)/(1−σ) · λ_i^{t−1} / Σ_j λ_j^t
/// ```
///
/// `t = 1` and `t = 2` give the two classical forms.
pub fn pointwise_bound(params: &RateParams, lambdas: &[f64], t: f64, i: usize) -> Result<PointwiseBound> {
    params.validate()?;
    if params.sigma >= 1.0 {
        return Err(Error::SigmaNotBelowOne { sigma: params.sigma });
    }
    if lambdas.is_empty() {
        return Err(invalid("lambdas", "need at least one step"));
    }
    let li = *lambdas
        .get(i)
        .ok_or_else(|| invalid("i", format!("index {i} out of range for {} steps", lambdas.len())))?;
    let sum_t: f64 = lambdas.iter().map(|l| l.powf(t)).sum();
    let base = ((1.0 + params.sigma) * params.dw0 + 2.0 * params.eta0) / (1.0 - params.sigma);
    Ok(PointwiseBound {
        r_bound: 2.0 * params.big_m / params.m.sqrt() * (base * li.powf(t - 2.0) / sum_t).sqrt(),
        eps_bound: base * li.powf(t - 1.0) / sum_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicBound {
    pub r_bound: f64,
    pub eps_bound: f64,
    /// Observed `ρ_k` used in `eps_bound`.
    pub rho_used: f64,
    /// A-priori cap `((dw)_0 + η_0)/(1 − σ)`, when `σ < 1`.
    pub rho_cap_sigma: Option<f64>,
    /// A-priori cap `(2M/m)((dw)_0 + η_0 + D)`, when a diameter is supplied.
    pub rho_cap_diameter: Option<f64>,
}

/// `‖r^a_k‖* ≤ 2√2 M √(dw0 + η0) / (√m Λ_k)` and
/// `ε^a_k ≤ (3M/m)(3(dw0 + η0) + σ ρ_k)/Λ_k`.
pub fn ergodic_bound<T: Scalar>(params: &RateParams, state: &HpeState<T>) -> Result<ErgodicBound> {
    ergodic_bound_at(params, state.lambda_sum.as_f64(), state.rho.as_f64())
}

/// [`ergodic_bound`] from the raw `Λ_k` and `ρ_k`.
pub fn ergodic_bound_at(params: &RateParams, lambda_sum: f64, rho: f64) -> Result<ErgodicBound> {
    params.validate()?;
    if !(lambda_sum > 0.0) {
        return Err(Error::EmptyAccumulator);
    }
    let (m, big_m, sigma) = (params.m, params.big_m, params.sigma);
    let energy = params.dw0 + params.eta0;
    Ok(ErgodicBound {
        r_bound: 2.0 * 2f64.sqrt() * big_m * energy.sqrt() / (m.sqrt() * lambda_sum),
        eps_bound: 3.0 * big_m / m * (3.0 * energy + sigma * rho) / lambda_sum,
        rho_used: rho,
        rho_cap_sigma: (sigma < 1.0).then(|| energy / (1.0 - sigma)),
        rho_cap_diameter: params.diameter.map(|d| 2.0 * big_m / m * (energy + d)),
    })
}
