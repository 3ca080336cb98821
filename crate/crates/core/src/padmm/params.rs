use crate::error::{invalid, Error, Result};
use crate::linalg::Vector;
use crate::scalar::Scalar;

/// Slack on the upper end of the admissible stepsize range.
pub const THETA_SLACK: f64 = 1e-12;

/// `(1 + √5)/2`.
pub fn golden_ratio<T: Scalar>() -> T {
    (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0)
}

pub(crate) fn check_theta<T: Scalar>(theta: T) -> Result<()> {
    if !(theta > T::zero()) || theta > golden_ratio::<T>() + T::lit(THETA_SLACK) {
        return Err(invalid("theta", format!("{} is outside (0, (1+sqrt 5)/2]", theta.as_f64())));
    }
    Ok(())
}

/// Largest root of `det M_θ(σ) = 0`, clamped to `[0, 1]`:
///
/// ```text
/// σ_θ = (a + √(a² − 4(2−θ)(3−θ)(θ−1)²)) / (2(3−θ)),   a = 3θ² − 7θ + 5.
/// ```
pub fn sigma_theta<T: Scalar>(theta: T) -> Result<T> {
    check_theta(theta)?;
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let a = three * theta * theta - T::lit(7.0) * theta + T::lit(5.0);
    let t1 = theta - one;
    let disc = a * a - T::lit(4.0) * (two - theta) * (three - theta) * t1 * t1;
    let sigma = (a + disc.max(T::zero()).sqrt()) / (two * (three - theta));
    Ok(sigma.max(T::zero()).min(one))
}

/// `τ_θ = 4 max(1/√θ, √θ/(2−θ))`, defined for `0 < θ < 2`.
pub fn tau_theta<T: Scalar>(theta: T) -> Result<T> {
    let two = T::lit(2.0);
    if !(theta > T::zero()) || theta >= two {
        return Err(invalid("theta", "tau is defined on (0, 2)"));
    }
    let r = theta.sqrt();
    Ok(T::lit(4.0) * (T::one() / r).max(r / (two - theta)))
}

/// `M_θ(σ)` with its determinant and smallest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MTheta<T> {
    pub entries: [[T; 2]; 2],
    pub det: T,
    pub min_eigenvalue: T,
}

pub fn m_theta<T: Scalar>(theta: T, sigma: T) -> MTheta<T> {
    let one = T::one();
    let a = sigma * (one + theta) - one;
    let b = (sigma + theta - one) * (one - theta);
    let d = sigma - (one - theta) * (one - theta);
    let det = a * d - b * b;
    let half_trace = (a + d) / T::lit(2.0);
    let half_gap = ((a - d) / T::lit(2.0)).hypot(b);
    MTheta {
        entries: [[a, b], [b, d]],
        det,
        min_eigenvalue: half_trace - half_gap,
    }
}

/// `σ_θ`, `τ_θ`, the `d₀` upper estimate and `η₀ = τ_θ d₀` for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstants<T> {
    pub sigma_theta: T,
    pub tau_theta: T,
    pub d0: T,
    pub eta0: T,
}

impl<T: Scalar> RateConstants<T> {
    pub fn new(theta: T, d0: T) -> Result<Self> {
        if !(d0 >= T::zero()) || !d0.is_finite() {
            return Err(invalid("d0", "must be finite and nonnegative"));
        }
        let sigma_theta = sigma_theta(theta)?;
        let tau_theta = tau_theta(theta)?;
        Ok(Self {
            sigma_theta,
            tau_theta,
            d0,
            eta0: tau_theta * d0,
        })
    }
}

/// ```text
/// η_k = [σ − (θ−1)²] ‖Δx‖² / (2βθ³) + (σ + θ − 1)/(2θ) ‖Δy‖²_G
/// ```
///
/// `dy_g_sq` is `‖Δy‖²_G`.
pub fn eta_k<T: Scalar>(beta: T, theta: T, sigma: T, dx: &Vector<T>, dy_g_sq: T) -> Result<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let cx = sigma - (theta - one) * (theta - one);
    let cy = sigma + theta - one;
    let floor = -T::lit(1e-12);
    if cx < floor || cy < floor {
        return Err(Error::Consistency(format!(
            "negative eta coefficient ({:e}, {:e}) at theta {}",
            cx.as_f64(),
            cy.as_f64(),
            theta.as_f64()
        )));
    }
    let cx = cx.max(T::zero());
    let cy = cy.max(T::zero());
    Ok(cx * dx.norm_squared() / (two * beta * theta * theta * theta) + cy / (two * theta) * dy_g_sq.max(T::zero()))
}
