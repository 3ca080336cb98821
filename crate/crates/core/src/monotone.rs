//! Convex pieces with exact subdifferential oracles, the KKT operator of the
//! separable problem, and sampling tests for ε-enlargement membership.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bregman::rel_slack;
use crate::error::{check_dim, invalid, Result};
use crate::linalg::{ProductDims, ProductVector, PsdOperator, Vector};
use crate::padmm::ProblemSpec;
use crate::scalar::Scalar;

/// One of the built-in closed convex functions.
#[derive(Debug, Clone)]
pub enum ConvexPiece<T: Scalar> {
    /// `½⟨P v, v⟩ + ⟨q, v⟩`.
    Quadratic { p: PsdOperator<T>, q: Vector<T> },
    /// `mu · ‖v‖₁`.
    L1 { mu: T, dim: usize },
    Zero { dim: usize },
}

impl<T: Scalar> ConvexPiece<T> {
    pub fn quadratic(p: PsdOperator<T>, q: Vector<T>) -> Result<Self> {
        check_dim("quadratic piece linear term", p.dim(), q.len())?;
        if !q.iter().all(|v| v.is_finite()) {
            return Err(crate::Error::NonFinite("quadratic piece linear term"));
        }
        Ok(ConvexPiece::Quadratic { p, q })
    }

    pub fn l1(mu: T, dim: usize) -> Result<Self> {
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(invalid("mu", "l1 weight must be positive"));
        }
        Ok(ConvexPiece::L1 { mu, dim })
    }

    pub fn zero(dim: usize) -> Self {
        ConvexPiece::Zero { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexPiece::Quadratic { p, .. } => p.dim(),
            ConvexPiece::L1 { dim, .. } | ConvexPiece::Zero { dim } => *dim,
        }
    }

    pub fn is_quadratic_like(&self) -> bool {
        !matches!(self, ConvexPiece::L1 { .. })
    }

    pub fn value(&self, v: &Vector<T>) -> Result<T> {
        check_dim("piece value", self.dim(), v.len())?;
        Ok(match self {
            ConvexPiece::Quadratic { p, q } => T::lit(0.5) * p.quad_unchecked(v) + q.dot(v),
            ConvexPiece::L1 { mu, .. } => *mu * v.lp_norm(1),
            ConvexPiece::Zero { .. } => T::zero(),
        })
    }

    /// The gradient for smooth pieces; for `L1`, `mu · sign(v)` with 0 at zero entries.
    pub fn subdiff_select(&self, v: &Vector<T>) -> Result<Vector<T>> {
        check_dim("subgradient selection", self.dim(), v.len())?;
        Ok(match self {
            ConvexPiece::Quadratic { p, q } => p.mul(v) + q,
            ConvexPiece::L1 { mu, .. } => v.map(|vi| {
                if vi > T::zero() {
                    *mu
                } else if vi < T::zero() {
                    -*mu
                } else {
                    T::zero()
                }
            }),
            ConvexPiece::Zero { dim } => Vector::zeros(*dim),
        })
    }

    /// A random element of `∂piece(v)`: uniform on `[−mu, mu]` at zero coordinates of `L1`.
    pub fn subdiff_sample(&self, v: &Vector<T>, rng: &mut ChaCha8Rng) -> Result<Vector<T>> {
        let mut u = self.subdiff_select(v)?;
        if let ConvexPiece::L1 { mu, .. } = self {
            for (ui, vi) in u.iter_mut().zip(v.iter()) {
                if *vi == T::zero() {
                    *ui = *mu * T::lit(rng.random_range(-1.0..=1.0));
                }
            }
        }
        Ok(u)
    }

    /// Fenchel–Young gap `piece(v) + piece*(u) − ⟨u, v⟩`, or `None` when `u`
    /// lies outside the domain of the conjugate (membership tested at `tol`).
    ///
    /// `u ∈ ∂_ε piece(v)` exactly when the gap is at most `ε`.
    pub fn fenchel_gap(&self, v: &Vector<T>, u: &Vector<T>, tol: T) -> Result<Option<T>> {
        check_dim("fenchel gap point", self.dim(), v.len())?;
        check_dim("fenchel gap dual point", self.dim(), u.len())?;
        Ok(match self {
            ConvexPiece::Quadratic { p, q } => {
                let grad = p.mul(v) + q;
                let d = u - &grad;
                let scale = T::one() + u.norm() + grad.norm();
                if p.image_residual(&d)? > tol * scale {
                    None
                } else {
                    let w = p.pinv_apply(&d)?;
                    Some(T::lit(0.5) * d.dot(&w))
                }
            }
            ConvexPiece::L1 { mu, .. } => {
                let limit = *mu + tol * (T::one() + *mu);
                if u.iter().any(|ui| ui.abs() > limit) {
                    None
                } else {
                    Some(*mu * v.lp_norm(1) - u.dot(v))
                }
            }
            ConvexPiece::Zero { .. } => {
                if u.norm() > tol * (T::one() + u.norm()) {
                    None
                } else {
                    Some(T::zero())
                }
            }
        })
    }

    /// `u ∈ ∂_eps piece(v)`, decided through the exact Fenchel–Young gap.
    pub fn subdiff_membership(&self, v: &Vector<T>, u: &Vector<T>, eps: T, tol: T) -> Result<bool> {
        if eps < T::zero() {
            return Err(invalid("eps", "must be nonnegative"));
        }
        Ok(match self.fenchel_gap(v, u, tol)? {
            Some(gap) => rel_slack(gap, eps) >= -tol.as_f64(),
            None => false,
        })
    }

    /// Euclidean distance from `u` to `∂piece(v)`.
    pub fn subdiff_distance(&self, v: &Vector<T>, u: &Vector<T>) -> Result<T> {
        check_dim("subdifferential distance", self.dim(), u.len())?;
        Ok(match self {
            ConvexPiece::L1 { mu, .. } => {
                check_dim("subdifferential distance", self.dim(), v.len())?;
                let mut acc = T::zero();
                for (ui, vi) in u.iter().zip(v.iter()) {
                    let d = if *vi > T::zero() {
                        *ui - *mu
                    } else if *vi < T::zero() {
                        *ui + *mu
                    } else {
                        (ui.abs() - *mu).max(T::zero())
                    };
                    acc += d * d;
                }
                acc.sqrt()
            }
            _ => (u - self.subdiff_select(v)?).norm(),
        })
    }
}

/// A point of the graph of an operator.
#[derive(Debug, Clone)]
pub struct GraphSample<T: Scalar> {
    pub point: ProductVector<T>,
    pub value: ProductVector<T>,
}

/// Per-block outcome of testing `r ∈ (∂_{εs} g(s) − Dᵀx, ∂_{εy} f(y) − Cᵀx, Cy + Ds − c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionCheck {
    /// Relative slack of the `s` block (`-inf` when outside the conjugate domain).
    pub s_slack: f64,
    pub y_slack: f64,
    /// Relative slack of the affine `x` block (negative of the scaled mismatch).
    pub x_slack: f64,
}

impl InclusionCheck {
    pub fn worst_slack(&self) -> f64 {
        self.s_slack.min(self.y_slack).min(self.x_slack)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.worst_slack() >= -tol
    }
}

/// `T(s, y, x) = (∂g(s) − Dᵀx, ∂f(y) − Cᵀx, Cy + Ds − c)`.
#[derive(Debug, Clone, Copy)]
pub struct KktOperator<'a, T: Scalar> {
    problem: &'a ProblemSpec<T>,
}

impl<'a, T: Scalar> KktOperator<'a, T> {
    pub fn new(problem: &'a ProblemSpec<T>) -> Self {
        Self { problem }
    }

    pub fn dims(&self) -> ProductDims {
        self.problem.dims()
    }

    fn affine_parts(&self, z: &ProductVector<T>) -> Result<(Vector<T>, Vector<T>, Vector<T>)> {
        z.check_dims("kkt operator", self.dims())?;
        let p = self.problem;
        let dtx = p.d_mat().tr_mul(&z.x);
        let ctx = p.c_mat().tr_mul(&z.x);
        let feas = p.constraint_residual(&z.s, &z.y);
        Ok((dtx, ctx, feas))
    }

    /// The selection built from [`ConvexPiece::subdiff_select`].
    pub fn select(&self, z: &ProductVector<T>) -> Result<ProductVector<T>> {
        let (dtx, ctx, feas) = self.affine_parts(z)?;
        let p = self.problem;
        Ok(ProductVector::new(
            p.g().subdiff_select(&z.s)? - dtx,
            p.f().subdiff_select(&z.y)? - ctx,
            feas,
        ))
    }

    /// A random element of `T(z)`.
    pub fn sample(&self, z: &ProductVector<T>, rng: &mut ChaCha8Rng) -> Result<GraphSample<T>> {
        let (dtx, ctx, feas) = self.affine_parts(z)?;
        let p = self.problem;
        let value = ProductVector::new(
            p.g().subdiff_sample(&z.s, rng)? - dtx,
            p.f().subdiff_sample(&z.y, rng)? - ctx,
            feas,
        );
        Ok(GraphSample {
            point: z.clone(),
            value,
        })
    }

    /// `dist(0, T(z))`.
    pub fn kkt_residual(&self, z: &ProductVector<T>) -> Result<T> {
        let (dtx, ctx, feas) = self.affine_parts(z)?;
        let p = self.problem;
        let ds = p.g().subdiff_distance(&z.s, &dtx)?;
        let dy = p.f().subdiff_distance(&z.y, &ctx)?;
        Ok((ds * ds + dy * dy + feas.norm_squared()).sqrt())
    }

    /// Tests `r ∈ (∂_{eps_s} g(s) − Dᵀx, ∂_{eps_y} f(y) − Cᵀx, Cy + Ds − c)`
    /// with exact Fenchel–Young gaps.
    pub fn inclusion(&self, z: &ProductVector<T>, r: &ProductVector<T>, eps_s: T, eps_y: T, tol: T) -> Result<InclusionCheck> {
        r.check_dims("kkt inclusion residual", self.dims())?;
        let (dtx, ctx, feas) = self.affine_parts(z)?;
        let p = self.problem;
        let block = |gap: Option<T>, eps: T| match gap {
            Some(g) => rel_slack(g, eps),
            None => f64::NEG_INFINITY,
        };
        let u = &r.s + &dtx;
        let v = &r.y + &ctx;
        let s_slack = block(p.g().fenchel_gap(&z.s, &u, tol)?, eps_s);
        let y_slack = block(p.f().fenchel_gap(&z.y, &v, tol)?, eps_y);
        let scale = T::one() + r.x.norm() + feas.norm() + p.c().norm();
        let x_slack = -((&r.x - &feas).norm() / scale).as_f64();
        Ok(InclusionCheck { s_slack, y_slack, x_slack })
    }
}

/// Sampling test of `vp ∈ T^{[eps]}(v)`: returns the minimum over sampled
/// graph points `(v1, v2)` of `⟨vp − v2, v − v1⟩ + eps`.
///
/// Graph points are drawn at the anchors and at random perturbations of the
/// anchors at three length scales. A negative result disproves membership; a
/// nonnegative one is only consistent with it.
pub fn enlargement_probe<T: Scalar>(
    op: &KktOperator<'_, T>,
    v: &ProductVector<T>,
    vp: &ProductVector<T>,
    eps: T,
    anchors: &[ProductVector<T>],
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if eps < T::zero() {
        return Err(invalid("eps", "must be nonnegative"));
    }
    let dims = op.dims();
    v.check_dims("enlargement point", dims)?;
    vp.check_dims("enlargement value", dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = |g: &GraphSample<T>| ((vp - &g.value).dot(&(v - &g.point)) + eps).as_f64();
    let mut worst = f64::INFINITY;
    let mut base: Vec<ProductVector<T>> = anchors.to_vec();
    base.push(v.clone());
    for a in &base {
        worst = worst.min(gap(&op.sample(a, &mut rng)?));
    }
    let scales = [1e-3, 1e-1, 1.0];
    let root = (dims.total().max(1) as f64).sqrt();
    for i in 0..n_samples {
        let anchor = &base[i % base.len()];
        let len = scales[i % scales.len()] * (1.0 + anchor.norm().as_f64()) / root;
        let mut point = anchor.clone();
        let pert = crate::bregman::random_point::<T>(dims, len, &mut rng);
        point.axpy(T::one(), &pert);
        worst = worst.min(gap(&op.sample(&point, &mut rng)?));
    }
    Ok(worst)
}

/// Draws `n` random points of the graph of `op` around `center`.
pub fn graph_samples<T: Scalar>(op: &KktOperator<'_, T>, center: &ProductVector<T>, n: usize, seed: u64) -> Result<Vec<GraphSample<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = op.dims();
    (0..n)
        .map(|_| {
            let scale = 10f64.powf(rng.random_range(-2.0..1.0));
            let mut p = center.clone();
            p.axpy(T::one(), &crate::bregman::random_point::<T>(dims, scale, &mut rng));
            // occasionally pin coordinates to zero so L1 kinks are exercised
            if rng.random_bool(0.3) {
                for si in p.s.iter_mut() {
                    if rng.random_bool(0.5) {
                        *si = T::zero();
                    }
                }
            }
            op.sample(&p, &mut rng)
        })
        .collect()
}
