use nalgebra::{Cholesky, Dyn};

use super::params::{eta_k, RateConstants};
use super::{ProblemSpec, ProxParams};
use crate::bregman::QuadraticDgf;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, ProductSeminormOp, ProductVector, PsdOperator, Vector};
use crate::monotone::ConvexPiece;
use crate::ne_hpe::{HpeEngine, HpeQuadruple, HpeState};
use crate::scalar::Scalar;

/// Relative tolerance for recognising `βMᵀM + prox` as a multiple of the identity.
const SCALED_IDENTITY_TOL: f64 = 1e-10;

/// Closed-form solver for one block subproblem
/// `min piece(v) − ⟨b, v⟩ + ½⟨(βMᵀM + prox) v, v⟩`
/// (constant terms folded into `b`).
#[derive(Debug, Clone)]
pub enum BlockSolver<T: Scalar> {
    /// Quadratic or zero piece: Cholesky factor of `P + βMᵀM + prox`.
    Linear { chol: Cholesky<T, Dyn>, matrix: Matrix<T> },
    /// `mu‖·‖₁` with `βMᵀM + prox = τ I`: soft-thresholding.
    Shrink { tau: T, mu: T },
}

impl<T: Scalar> BlockSolver<T> {
    /// `coupling` is `D` for the s-block and `C` for the y-block.
    pub fn build(piece: &ConvexPiece<T>, coupling: &Matrix<T>, prox: &PsdOperator<T>, beta: T, block: &str) -> Result<Self> {
        let n = piece.dim();
        if prox.dim() != n || coupling.ncols() != n {
            return Err(Error::UnsupportedSubproblem(format!("{block}-block operator dimensions disagree")));
        }
        let base = coupling.tr_mul(coupling) * beta + prox.matrix();
        match piece {
            ConvexPiece::L1 { mu, .. } => {
                let op = PsdOperator::new(base)?;
                match op.as_scaled_identity(T::lit(SCALED_IDENTITY_TOL)) {
                    Some(tau) if tau > T::zero() || n == 0 => Ok(BlockSolver::Shrink { tau, mu: *mu }),
                    _ => Err(Error::UnsupportedSubproblem(format!(
                        "{block}-block: an l1 piece needs beta*M^T M + prox to be a positive multiple of the identity"
                    ))),
                }
            }
            ConvexPiece::Quadratic { p, .. } => Self::linear(base + p.matrix(), block),
            ConvexPiece::Zero { .. } => Self::linear(base, block),
        }
    }

    fn linear(matrix: Matrix<T>, block: &str) -> Result<Self> {
        let chol = Cholesky::new(matrix.clone()).ok_or_else(|| {
            Error::UnsupportedSubproblem(format!("{block}-block system matrix is not positive definite"))
        })?;
        Ok(BlockSolver::Linear { chol, matrix })
    }

    /// Solves the subproblem with linear term `b`; returns the minimiser and
    /// its first-order residual relative to `1 + ‖b‖`.
    pub fn solve(&self, b: &Vector<T>) -> (Vector<T>, T) {
        let scale = T::one() + b.norm();
        match self {
            BlockSolver::Linear { chol, matrix } => {
                let v = chol.solve(b);
                let res = (matrix * &v - b).norm();
                (v, res / scale)
            }
            BlockSolver::Shrink { tau, mu } => {
                if b.is_empty() {
                    return (b.clone(), T::zero());
                }
                let thresh = *mu / *tau;
                let v = b.map(|bi| {
                    let a = bi / *tau;
                    a.signum() * (a.abs() - thresh).max(T::zero())
                });
                // distance from b − τv to mu ∂‖v‖₁
                let mut acc = T::zero();
                for (vi, bi) in v.iter().zip(b.iter()) {
                    let u = *bi - *tau * *vi;
                    let d = if *vi > T::zero() {
                        u - *mu
                    } else if *vi < T::zero() {
                        u + *mu
                    } else {
                        (u.abs() - *mu).max(T::zero())
                    };
                    acc += d * d;
                }
                (v, acc.sqrt() / scale)
            }
        }
    }
}

/// Everything observed at iteration `k`.
#[derive(Debug, Clone)]
pub struct IterationRecord<T: Scalar> {
    pub k: usize,
    pub s: Vector<T>,
    pub y: Vector<T>,
    pub x: Vector<T>,
    pub x_tilde: Vector<T>,
    pub ds: Vector<T>,
    pub dy: Vector<T>,
    pub dx: Vector<T>,
    /// `Q(z_{k−1} − z_k)`.
    pub r: ProductVector<T>,
    pub eta: T,
    pub hpe_lhs: T,
    pub hpe_rhs: T,
    pub hpe_pass: bool,
    /// `(‖Δs‖²_H + ‖Δy‖²_{G+βCᵀC} + ‖Δx‖²/(βθ))^{1/2}`.
    pub res_norm: T,
    pub sub_residual_s: T,
    pub sub_residual_y: T,
}

impl<T: Scalar> IterationRecord<T> {
    pub fn z(&self) -> ProductVector<T> {
        ProductVector::new(self.s.clone(), self.y.clone(), self.x.clone())
    }

    pub fn z_tilde(&self) -> ProductVector<T> {
        ProductVector::new(self.s.clone(), self.y.clone(), self.x_tilde.clone())
    }
}

/// `x_k = x_{k−1} − θβ (C y_k + D s_k − c)`.
pub fn update_x<T: Scalar>(
    problem: &ProblemSpec<T>,
    params: &ProxParams<T>,
    s_k: &Vector<T>,
    y_k: &Vector<T>,
    x_prev: &Vector<T>,
) -> Vector<T> {
    x_prev - problem.constraint_residual(s_k, y_k) * (params.theta() * params.beta())
}

/// `x̃_k = x_{k−1} − β (C y_{k−1} + D s_k − c)`.
pub fn compute_xtilde<T: Scalar>(
    problem: &ProblemSpec<T>,
    params: &ProxParams<T>,
    y_prev: &Vector<T>,
    s_k: &Vector<T>,
    x_prev: &Vector<T>,
) -> Vector<T> {
    x_prev - problem.constraint_residual(s_k, y_prev) * params.beta()
}

/// `(λ = 1, z̃ = (s_k, y_k, x̃_k), z = (s_k, y_k, x_k), ε = 0, η_k)`.
pub fn make_hpe_quadruple<T: Scalar>(record: &IterationRecord<T>) -> Result<HpeQuadruple<T>> {
    HpeQuadruple::new(T::one(), record.z_tilde(), record.z(), T::zero(), record.eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_iter: usize,
    /// Stop once `‖r_k‖*` falls to this value.
    pub res_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    ResidualTolerance,
}

/// A configured solver for one `(problem, β, θ, H, G)` cell.
#[derive(Debug, Clone)]
pub struct Admm<'a, T: Scalar> {
    problem: &'a ProblemSpec<T>,
    params: ProxParams<T>,
    s_solver: BlockSolver<T>,
    y_solver: BlockSolver<T>,
    dgf: QuadraticDgf<T>,
    q_g: Vector<T>,
    q_f: Vector<T>,
}

fn linear_term<T: Scalar>(piece: &ConvexPiece<T>) -> Vector<T> {
    match piece {
        ConvexPiece::Quadratic { q, .. } => q.clone(),
        _ => Vector::zeros(piece.dim()),
    }
}

impl<'a, T: Scalar> Admm<'a, T> {
    /// Rejects unsupported subproblem classes before any iteration.
    pub fn new(problem: &'a ProblemSpec<T>, params: ProxParams<T>) -> Result<Self> {
        let dims = problem.dims();
        crate::error::check_dim("H", dims.s, params.h().dim())?;
        crate::error::check_dim("G", dims.y, params.g().dim())?;
        let beta = params.beta();
        let s_solver = BlockSolver::build(problem.g(), problem.d_mat(), params.h(), beta, "s")?;
        let y_solver = BlockSolver::build(problem.f(), problem.c_mat(), params.g(), beta, "y")?;
        let gc = params.g().sum(&PsdOperator::gram(problem.c_mat(), beta)?)?;
        let x_scale = T::one() / (beta * params.theta());
        let dgf = QuadraticDgf::new(ProductSeminormOp::new(params.h().clone(), gc, dims.x, x_scale)?);
        Ok(Self {
            problem,
            params,
            s_solver,
            y_solver,
            dgf,
            q_g: linear_term(problem.g()),
            q_f: linear_term(problem.f()),
        })
    }

    pub fn problem(&self) -> &ProblemSpec<T> {
        self.problem
    }

    pub fn params(&self) -> &ProxParams<T> {
        &self.params
    }

    /// `w(z) = ½‖z‖²_Q` on the product space.
    pub fn dgf(&self) -> &QuadraticDgf<T> {
        &self.dgf
    }

    pub fn s_solver(&self) -> &BlockSolver<T> {
        &self.s_solver
    }

    pub fn y_solver(&self) -> &BlockSolver<T> {
        &self.y_solver
    }

    /// `s_k` from `(y_{k−1}, x_{k−1}, s_{k−1})`, with its optimality residual.
    pub fn solve_s(&self, z_prev: &ProductVector<T>) -> (Vector<T>, T) {
        let p = self.problem;
        let beta = self.params.beta();
        let shifted = p.c_mat() * &z_prev.y - p.c();
        let b = p.d_mat().tr_mul(&(&z_prev.x - shifted * beta)) - &self.q_g + self.params.h().mul(&z_prev.s);
        self.s_solver.solve(&b)
    }

    /// `y_k` from the updated `s_k` and `(y_{k−1}, x_{k−1})`.
    pub fn solve_y(&self, z_prev: &ProductVector<T>, s_k: &Vector<T>) -> (Vector<T>, T) {
        let p = self.problem;
        let beta = self.params.beta();
        let shifted = p.d_mat() * s_k - p.c();
        let b = p.c_mat().tr_mul(&(&z_prev.x - shifted * beta)) - &self.q_f + self.params.g().mul(&z_prev.y);
        self.y_solver.solve(&b)
    }

    /// One iteration from `z_{k−1}`. The HPE fields are left at zero.
    pub fn step(&self, k: usize, z_prev: &ProductVector<T>, consts: &RateConstants<T>) -> Result<IterationRecord<T>> {
        let (s, sub_residual_s) = self.solve_s(z_prev);
        let (y, sub_residual_y) = self.solve_y(z_prev, &s);
        let x = update_x(self.problem, &self.params, &s, &y, &z_prev.x);
        let x_tilde = compute_xtilde(self.problem, &self.params, &z_prev.y, &s, &z_prev.x);
        let ds = &s - &z_prev.s;
        let dy = &y - &z_prev.y;
        let dx = &x - &z_prev.x;
        let delta = ProductVector::new(ds.clone(), dy.clone(), dx.clone());
        if !delta.is_finite() || !x_tilde.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("admm iterate"));
        }
        let res_norm = self.dgf.operator().seminorm(&delta)?;
        let eta = eta_k(
            self.params.beta(),
            self.params.theta(),
            consts.sigma_theta,
            &dx,
            self.params.g().quad_unchecked(&dy),
        )?;
        Ok(IterationRecord {
            k,
            r: self.dgf.operator().mul(&(-&delta)),
            s,
            y,
            x,
            x_tilde,
            ds,
            dy,
            dx,
            eta,
            hpe_lhs: T::zero(),
            hpe_rhs: T::zero(),
            hpe_pass: false,
            res_norm,
            sub_residual_s,
            sub_residual_y,
        })
    }

    /// Runs from `z0`, streaming every quadruple through the HPE engine with `σ = σ_θ`.
    pub fn run(&self, z0: &ProductVector<T>, consts: RateConstants<T>, opts: RunOptions) -> Result<AdmmRun<T>> {
        z0.check_dims("admm start point", self.problem.dims())?;
        if !z0.is_finite() {
            return Err(Error::NonFinite("admm start point"));
        }
        let mut engine = HpeEngine::new(self.dgf.clone(), consts.sigma_theta, z0.clone(), consts.eta0)?;
        let mut records = Vec::with_capacity(opts.max_iter);
        let mut z_prev = z0.clone();
        let mut stop = StopReason::MaxIterations;
        for k in 1..=opts.max_iter {
            let mut rec = self.step(k, &z_prev, &consts)?;
            let logged = engine.submit(make_hpe_quadruple(&rec)?)?;
            rec.hpe_lhs = logged.lhs;
            rec.hpe_rhs = logged.rhs;
            rec.hpe_pass = logged.pass;
            rec.r = logged.r.clone();
            z_prev = rec.z();
            let done = opts.res_tol.is_some_and(|tol| rec.res_norm.as_f64() <= tol);
            records.push(rec);
            if done {
                stop = StopReason::ResidualTolerance;
                break;
            }
        }
        Ok(AdmmRun {
            records,
            hpe: engine.into_state(),
            z0: z0.clone(),
            consts,
            params: self.params.clone(),
            dgf: self.dgf.clone(),
            stop,
        })
    }
}

/// A finished run with its HPE ledger.
#[derive(Debug, Clone)]
pub struct AdmmRun<T: Scalar> {
    pub records: Vec<IterationRecord<T>>,
    pub hpe: HpeState<T>,
    pub z0: ProductVector<T>,
    pub consts: RateConstants<T>,
    pub params: ProxParams<T>,
    pub dgf: QuadraticDgf<T>,
    pub stop: StopReason,
}

impl<T: Scalar> AdmmRun<T> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn certified(&self) -> bool {
        self.hpe.certified
    }

    /// `z_j` for `0 ≤ j ≤ iterations`.
    pub fn z_at(&self, j: usize) -> ProductVector<T> {
        if j == 0 {
            self.z0.clone()
        } else {
            self.records[j - 1].z()
        }
    }

    pub fn last(&self) -> ProductVector<T> {
        self.z_at(self.records.len())
    }

    /// Smallest relative HPE slack over the run.
    pub fn worst_hpe_slack(&self) -> f64 {
        self.records
            .iter()
            .map(|r| crate::bregman::rel_slack(r.hpe_lhs, r.hpe_rhs))
            .fold(f64::INFINITY, f64::min)
    }
}
