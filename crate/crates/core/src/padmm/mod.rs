//! Proximal ADMM for `min f(y) + g(s) s.t. C y + D s = c`.
//!
//! Iteration `k`:
//!
//! ```text
//! s_k = argmin g(s) − ⟨Dᵀx_{k−1}, s⟩ + (β/2)‖C y_{k−1} + D s − c‖² + ½‖s − s_{k−1}‖²_H
//! y_k = argmin f(y) − ⟨Cᵀx_{k−1}, y⟩ + (β/2)‖C y + D s_k − c‖² + ½‖y − y_{k−1}‖²_G
//! x_k = x_{k−1} − θβ (C y_k + D s_k − c)
//! ```
//!
//! Each iteration is also emitted as an HPE quadruple on the product space
//! with `Q(s, y, x) = (H s, (G + βCᵀC) y, x/(βθ))`.

mod certificates;
mod params;
mod solver;

pub use certificates::{
    ergodic_certificate, ergodic_eps_bound_value, ergodic_res_bound_value, lemma_checks, pointwise_bound_value, pointwise_certificate,
    ErgodicCertificate, ErgodicRow, LemmaReport, PointwiseCertificate,
    PointwiseRow, SlackTrack,
};
pub use params::{eta_k, golden_ratio, m_theta, sigma_theta, tau_theta, MTheta, RateConstants, THETA_SLACK};
pub use solver::{
    compute_xtilde, make_hpe_quadruple, update_x, Admm, AdmmRun, BlockSolver, IterationRecord, RunOptions, StopReason,
};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{all_finite, Matrix, ProductDims, PsdOperator, Vector};
use crate::monotone::ConvexPiece;
use crate::scalar::Scalar;

/// `f(y) + g(s)` subject to `C y + D s = c`.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T: Scalar> {
    f: ConvexPiece<T>,
    g: ConvexPiece<T>,
    c_mat: Matrix<T>,
    d_mat: Matrix<T>,
    c: Vector<T>,
}

impl<T: Scalar> ProblemSpec<T> {
    pub fn new(f: ConvexPiece<T>, g: ConvexPiece<T>, c_mat: Matrix<T>, d_mat: Matrix<T>, c: Vector<T>) -> Result<Self> {
        check_dim("C rows", c.len(), c_mat.nrows())?;
        check_dim("D rows", c.len(), d_mat.nrows())?;
        check_dim("C columns", f.dim(), c_mat.ncols())?;
        check_dim("D columns", g.dim(), d_mat.ncols())?;
        if !all_finite(c_mat.as_slice()) {
            return Err(Error::NonFinite("C"));
        }
        if !all_finite(d_mat.as_slice()) {
            return Err(Error::NonFinite("D"));
        }
        if !all_finite(c.as_slice()) {
            return Err(Error::NonFinite("c"));
        }
        Ok(Self { f, g, c_mat, d_mat, c })
    }

    pub fn f(&self) -> &ConvexPiece<T> {
        &self.f
    }

    pub fn g(&self) -> &ConvexPiece<T> {
        &self.g
    }

    pub fn c_mat(&self) -> &Matrix<T> {
        &self.c_mat
    }

    pub fn d_mat(&self) -> &Matrix<T> {
        &self.d_mat
    }

    pub fn c(&self) -> &Vector<T> {
        &self.c
    }

    pub fn dims(&self) -> ProductDims {
        ProductDims {
            s: self.g.dim(),
            y: self.f.dim(),
            x: self.c.len(),
        }
    }

    /// `C y + D s − c`.
    pub fn constraint_residual(&self, s: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        &self.c_mat * y + &self.d_mat * s - &self.c
    }

    /// `f(y) + g(s)`.
    pub fn objective(&self, s: &Vector<T>, y: &Vector<T>) -> Result<T> {
        Ok(self.f.value(y)? + self.g.value(s)?)
    }

    /// Frobenius norm of all data, used to scale tolerances.
    pub fn data_norm(&self) -> T {
        let piece = |p: &ConvexPiece<T>| match p {
            ConvexPiece::Quadratic { p, q } => p.matrix().norm() + q.norm(),
            ConvexPiece::L1 { mu, dim } => *mu * T::lit(*dim as f64).sqrt(),
            ConvexPiece::Zero { .. } => T::zero(),
        };
        piece(&self.f) + piece(&self.g) + self.c_mat.norm() + self.d_mat.norm() + self.c.norm()
    }
}

/// Penalty `β`, stepsize `θ` and the proximal operators `H` (on S), `G` (on Y).
#[derive(Debug, Clone)]
pub struct ProxParams<T: Scalar> {
    beta: T,
    theta: T,
    h: PsdOperator<T>,
    g: PsdOperator<T>,
}

impl<T: Scalar> ProxParams<T> {
    pub fn new(beta: T, theta: T, h: PsdOperator<T>, g: PsdOperator<T>) -> Result<Self> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(invalid("beta", "must be positive and finite"));
        }
        params::check_theta(theta)?;
        Ok(Self { beta, theta, h, g })
    }

    /// `H = 0`, `G = 0`.
    pub fn standard(beta: T, theta: T, dims: ProductDims) -> Result<Self> {
        Self::new(beta, theta, PsdOperator::zeros(dims.s), PsdOperator::zeros(dims.y))
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn h(&self) -> &PsdOperator<T> {
        &self.h
    }

    pub fn g(&self) -> &PsdOperator<T> {
        &self.g
    }
}
