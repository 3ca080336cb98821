//! Distance generating functions and their Bregman distances.
//!
//! Only the quadratic family `w(z) = ½‖z‖²_Q` is instantiable. The HPE engine
//! consumes distances through [`DistanceGenerating`], so another family can be
//! added without touching the engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{DualValue, ProductDims, ProductSeminormOp, ProductVector, PsdOperator, Vector};
use crate::scalar::Scalar;

/// Tolerance under which a probe violation counts as zero, relative to
/// `1 + |lhs| + |rhs|`.
pub const PROBE_TOL: f64 = 1e-9;

/// A distance generating function on the product space together with the
/// seminorm it is regular with respect to.
pub trait DistanceGenerating<T: Scalar> {
    fn dims(&self) -> ProductDims;

    fn value(&self, z: &ProductVector<T>) -> Result<T>;

    fn gradient(&self, z: &ProductVector<T>) -> Result<ProductVector<T>>;

    /// `(dw)_z(zp) = w(zp) − w(z) − ⟨∇w(z), zp − z⟩`.
    fn dw_eval(&self, z: &ProductVector<T>, zp: &ProductVector<T>) -> Result<T>;

    /// `∇(dw)_z(zp) = ∇w(zp) − ∇w(z)`.
    fn dw_grad(&self, z: &ProductVector<T>, zp: &ProductVector<T>) -> Result<ProductVector<T>>;

    /// The seminorm `w` is regular with respect to.
    fn norm(&self, z: &ProductVector<T>) -> Result<T>;

    fn dual_norm(&self, r: &ProductVector<T>) -> Result<DualValue<T>>;

    /// `‖∇w(zp) − ∇w(z)‖*`.
    fn grad_gap_dual_norm(&self, z: &ProductVector<T>, zp: &ProductVector<T>) -> Result<DualValue<T>> {
        self.dual_norm(&self.dw_grad(z, zp)?)
    }

    /// Regularity constants `(m, M)`.
    fn regularity(&self) -> (T, T);
}

/// `w(z) = ½‖z‖²_Q`, which is (1, 1)-regular with respect to `‖·‖_Q`.
#[derive(Debug, Clone)]
pub struct QuadraticDgf<T: Scalar> {
    q: ProductSeminormOp<T>,
}

impl<T: Scalar> QuadraticDgf<T> {
    pub fn new(q: ProductSeminormOp<T>) -> Self {
        Self { q }
    }

    /// A plain PSD operator on a single space, carried in the `s` block.
    pub fn on_single_space(op: PsdOperator<T>) -> Self {
        let q = ProductSeminormOp::new(op, PsdOperator::zeros(0), 0, T::one())
            .expect("unit x scale is valid");
        Self { q }
    }

    pub fn operator(&self) -> &ProductSeminormOp<T> {
        &self.q
    }
}

impl<T: Scalar> DistanceGenerating<T> for QuadraticDgf<T> {
    fn dims(&self) -> ProductDims {
        self.q.dims()
    }

    fn value(&self, z: &ProductVector<T>) -> Result<T> {
        Ok(T::lit(0.5) * self.q.seminorm_squared(z)?)
    }

    fn gradient(&self, z: &ProductVector<T>) -> Result<ProductVector<T>> {
        self.q.apply(z)
    }

    fn dw_eval(&self, z: &ProductVector<T>, zp: &ProductVector<T>) -> Result<T> {
        z.check_dims("bregman distance", self.dims())?;
        zp.check_dims("bregman distance", self.dims())?;
        let d = zp - z;
        Ok(T::lit(0.5) * self.q.squared_unchecked(&d).max(T::zero()))
    }

    fn dw_grad(&self, z: &ProductVector<T>, zp: &ProductVector<T>) -> Result<ProductVector<T>> {
        z.check_dims("bregman gradient", self.dims())?;
        zp.check_dims("bregman gradient", self.dims())?;
        Ok(self.q.mul(&(zp - z)))
    }

    fn norm(&self, z: &ProductVector<T>) -> Result<T> {
        self.q.seminorm(z)
    }

    fn dual_norm(&self, r: &ProductVector<T>) -> Result<DualValue<T>> {
        self.q.dual_seminorm(r)
    }

    /// `‖Q(zp − z)‖* = ‖zp − z‖_Q`, evaluated without a solve.
    fn grad_gap_dual_norm(&self, z: &ProductVector<T>, zp: &ProductVector<T>) -> Result<DualValue<T>> {
        z.check_dims("bregman gradient", self.dims())?;
        Ok(DualValue::Finite(self.q.seminorm(&(zp - z))?))
    }

    fn regularity(&self) -> (T, T) {
        (T::one(), T::one())
    }
}

/// Outcome of sampling the two regularity inequalities and the sandwich bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityCert {
    pub m: f64,
    pub big_m: f64,
    pub samples: usize,
    pub max_violation: f64,
}

impl RegularityCert {
    pub fn passed(&self) -> bool {
        self.max_violation <= 0.0
    }
}

/// Worst slacks of the two pair/chain inequalities of regular distances.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientGapReport {
    pub samples: usize,
    pub chain_len: usize,
    /// Worst relative slack of `(‖∇(dw)_{z'}(z)‖*)² ≤ (2M²/m) min{(dw)_z(z'), (dw)_{z'}(z)}`.
    pub worst_pair_slack: f64,
    /// Worst relative slack of `(dw)_{u0}(u_l) ≤ (lM/m) Σ min{…}`.
    pub worst_chain_slack: f64,
}

impl GradientGapReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.worst_pair_slack >= -tol && self.worst_chain_slack >= -tol
    }
}

/// Relative slack of `lhs ≤ rhs`, positive when the inequality holds.
pub fn rel_slack<T: Scalar>(lhs: T, rhs: T) -> f64 {
    let (l, r) = (lhs.as_f64(), rhs.as_f64());
    (r - l) / (1.0 + l.abs() + r.abs())
}

fn violation(lhs: f64, rhs: f64) -> f64 {
    // lhs ≤ rhs expected
    let raw = lhs - rhs;
    if raw <= PROBE_TOL * (1.0 + lhs.abs() + rhs.abs()) {
        0.0
    } else {
        raw
    }
}

pub(crate) fn random_point<T: Scalar>(dims: ProductDims, scale: f64, rng: &mut ChaCha8Rng) -> ProductVector<T> {
    let mut draw = |n: usize| -> Vector<T> {
        Vector::from_iterator(
            n,
            (0..n).map(|_| T::lit(scale * rng.sample::<f64, _>(StandardNormal))),
        )
    };
    let s = draw(dims.s);
    let y = draw(dims.y);
    let x = draw(dims.x);
    ProductVector::new(s, y, x)
}

fn random_scale(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(-2.0..2.0))
}

/// Samples random pairs and records the worst violation of
/// `(dw)_z(z') ≥ (m/2)‖z − z'‖²`, `‖∇w(z) − ∇w(z')‖* ≤ M‖z − z'‖` and
/// `(dw)_z(z') ≤ (M/2)‖z − z'‖²`.
pub fn regularity_probe<T: Scalar, W: DistanceGenerating<T>>(
    w: &W,
    m: f64,
    big_m: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RegularityCert> {
    if !(m > 0.0) || !(big_m > 0.0) {
        return Err(invalid("m, M", "regularity constants must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = w.dims();
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let z: ProductVector<T> = random_point(dims, random_scale(&mut rng), &mut rng);
        let zp: ProductVector<T> = random_point(dims, random_scale(&mut rng), &mut rng);
        let dist = w.norm(&(&z - &zp))?.as_f64();
        let dw = w.dw_eval(&z, &zp)?.as_f64();
        let lower = 0.5 * m * dist * dist;
        let upper = 0.5 * big_m * dist * dist;
        worst = worst.max(violation(lower, dw));
        worst = worst.max(violation(dw, upper));
        let grad_gap = w.gradient(&z)?;
        let grad_gap = &grad_gap - &w.gradient(&zp)?;
        match w.dual_norm(&grad_gap)? {
            DualValue::Finite(g) => worst = worst.max(violation(g.as_f64(), big_m * dist)),
            DualValue::OutOfDomain => worst = f64::INFINITY,
        }
    }
    Ok(RegularityCert {
        m,
        big_m,
        samples: n_samples,
        max_violation: worst,
    })
}

/// Checks the pair inequality on random pairs and the chain inequality on
/// random chains `u0, …, u_l`.
pub fn gradient_gap_probe<T: Scalar, W: DistanceGenerating<T>>(
    w: &W,
    n_samples: usize,
    chain_len: usize,
    seed: u64,
) -> Result<GradientGapReport> {
    if chain_len == 0 {
        return Err(invalid("chain_len", "must be at least 1"));
    }
    let (m, big_m) = w.regularity();
    let (m, big_m) = (m.as_f64(), big_m.as_f64());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = w.dims();
    let mut worst_pair = f64::INFINITY;
    let mut worst_chain = f64::INFINITY;
    for _ in 0..n_samples {
        let z: ProductVector<T> = random_point(dims, random_scale(&mut rng), &mut rng);
        let zp: ProductVector<T> = random_point(dims, random_scale(&mut rng), &mut rng);
        let g = match w.dual_norm(&w.dw_grad(&zp, &z)?)? {
            DualValue::Finite(g) => g.as_f64(),
            DualValue::OutOfDomain => f64::INFINITY,
        };
        let min_dw = w.dw_eval(&z, &zp)?.as_f64().min(w.dw_eval(&zp, &z)?.as_f64());
        worst_pair = worst_pair.min(rel_slack(g * g, 2.0 * big_m * big_m / m * min_dw));

        let scale = random_scale(&mut rng);
        let chain: Vec<ProductVector<T>> = (0..=chain_len).map(|_| random_point(dims, scale, &mut rng)).collect();
        let mut sum = 0.0;
        for pair in chain.windows(2) {
            let a = w.dw_eval(&pair[0], &pair[1])?.as_f64();
            let b = w.dw_eval(&pair[1], &pair[0])?.as_f64();
            sum += a.min(b);
        }
        let lhs = w.dw_eval(&chain[0], &chain[chain_len])?.as_f64();
        worst_chain = worst_chain.min(rel_slack(lhs, chain_len as f64 * big_m / m * sum));
    }
    if n_samples == 0 {
        worst_pair = 0.0;
        worst_chain = 0.0;
    }
    Ok(GradientGapReport {
        samples: n_samples,
        chain_len,
        worst_pair_slack: worst_pair,
        worst_chain_slack: worst_chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::PsdOperator;

    fn scalar_q(q: f64) -> QuadraticDgf<f64> {
        QuadraticDgf::on_single_space(PsdOperator::from_diagonal(&[q]).unwrap())
    }

    fn pt(s: &[f64]) -> ProductVector<f64> {
        ProductVector::from_slices(s, &[], &[])
    }

    #[test]
    fn dw_eval_examples() {
        let w = QuadraticDgf::on_single_space(PsdOperator::<f64>::identity(2));
        let z = pt(&[0.3, -1.2]);
        assert_eq!(w.dw_eval(&z, &z).unwrap(), 0.0);
        let zp = pt(&[2f64.sqrt(), 2f64.sqrt()]);
        assert!((w.dw_eval(&pt(&[0.0, 0.0]), &zp).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(scalar_q(2.0).dw_eval(&pt(&[0.0]), &pt(&[1.0])).unwrap(), 1.0);
    }

    #[test]
    fn dw_grad_examples() {
        let w = QuadraticDgf::on_single_space(PsdOperator::<f64>::identity(2));
        let z = pt(&[0.3, -1.2]);
        assert_eq!(w.dw_grad(&z, &z).unwrap(), pt(&[0.0, 0.0]));
        let v = pt(&[4.0, -5.0]);
        assert_eq!(w.dw_grad(&pt(&[0.0, 0.0]), &v).unwrap(), v);
        assert_eq!(scalar_q(2.0).dw_grad(&pt(&[1.0]), &pt(&[3.0])).unwrap(), pt(&[4.0]));
    }

    #[test]
    fn dw_grad_is_antisymmetric() {
        let w = scalar_q(3.0);
        let (a, b) = (pt(&[0.7]), pt(&[-2.1]));
        let g1 = w.dw_grad(&a, &b).unwrap();
        let g2 = w.dw_grad(&b, &a).unwrap();
        assert_eq!(g1, -&g2);
    }

    #[test]
    fn regularity_probe_examples() {
        let w = QuadraticDgf::on_single_space(PsdOperator::<f64>::from_diagonal(&[2.0, 0.0, 1.0]).unwrap());
        let cert = regularity_probe(&w, 1.0, 1.0, 200, 11).unwrap();
        assert!(cert.passed());
        assert!(cert.max_violation <= 1e-12);
        let bad = regularity_probe(&w, 2.0, 1.0, 50, 11).unwrap();
        assert!(!bad.passed());
        let empty = regularity_probe(&w, 1.0, 1.0, 0, 0).unwrap();
        assert!(empty.passed());
        assert_eq!(empty.max_violation, 0.0);
        assert!(regularity_probe(&w, 0.0, 1.0, 1, 0).is_err());
    }

    #[test]
    fn gradient_gap_examples() {
        let w = QuadraticDgf::on_single_space(PsdOperator::<f64>::identity(3));
        // chain of length 1 with u0 = u1: both sides vanish
        let u = pt(&[1.0, 2.0, 3.0]);
        assert_eq!(w.dw_eval(&u, &u).unwrap(), 0.0);
        // pair equality for Q = I
        let (z, zp) = (pt(&[1.0, 0.0, 2.0]), pt(&[0.0, 1.0, -1.0]));
        let g = w.dual_norm(&w.dw_grad(&zp, &z).unwrap()).unwrap().finite().unwrap();
        let rhs = 2.0 * w.dw_eval(&z, &zp).unwrap();
        assert!((g * g - rhs).abs() < 1e-12);
        let report = gradient_gap_probe(&w, 100, 3, 5).unwrap();
        assert!(report.passed(1e-12));
        assert!(report.worst_pair_slack.abs() < 1e-12);
        assert!(gradient_gap_probe(&w, 1, 0, 5).is_err());
    }
}
