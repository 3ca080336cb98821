//! Reference solutions, `d₀` estimation, per-cell check batteries and the
//! named suites built on them.

mod cell;
mod suites;

pub use cell::{
    engine_checks, ergodic_point_at, run_cell, CellResult, CellSpec, CheckRecord, CheckStatus, EngineChecks, Tolerances,
};
pub use suites::{run_suite, CellReport, SuiteConfig, SuiteName, SuiteReport, THETA_GRID};

use crate::bregman::DistanceGenerating;
use crate::error::{Error, Result};
use crate::generators::{prox_params, Instance, Variant};
use crate::linalg::{Matrix, ProductVector, Vector};
use crate::monotone::{ConvexPiece, KktOperator};
use crate::padmm::{Admm, ProblemSpec, RateConstants};
use crate::scalar::Scalar;

/// Residual target of the long-run fallback.
pub const LONG_RUN_RES_TOL: f64 = 1e-10;
/// Iteration cap of the long-run fallback.
pub const LONG_RUN_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMethod {
    DirectKkt,
    LongRun { iterations: usize },
}

/// A computed point `z*` with `0 ∈ T(z*)` up to `kkt_residual`.
#[derive(Debug, Clone)]
pub struct ReferenceSolution<T: Scalar> {
    pub z_star: ProductVector<T>,
    pub kkt_residual: T,
    pub method: ReferenceMethod,
}

impl<T: Scalar> ReferenceSolution<T> {
    /// Acceptance threshold on `kkt_residual` for the method used.
    pub fn residual_budget(&self, problem: &ProblemSpec<T>) -> f64 {
        match self.method {
            ReferenceMethod::DirectKkt => 1e-8 * (1.0 + problem.data_norm().as_f64()),
            ReferenceMethod::LongRun { .. } => 1e-6,
        }
    }
}

fn quadratic_parts<T: Scalar>(piece: &ConvexPiece<T>) -> Option<(Matrix<T>, Vector<T>)> {
    match piece {
        ConvexPiece::Quadratic { p, q } => Some((p.matrix().clone(), q.clone())),
        ConvexPiece::Zero { dim } => Some((Matrix::zeros(*dim, *dim), Vector::zeros(*dim))),
        ConvexPiece::L1 { .. } => None,
    }
}

/// Least-norm solution of
///
/// ```text
/// [ P_g   0   −Dᵀ ] [s]   [−q_g]
/// [ 0    P_f  −Cᵀ ] [y] = [−q_f]
/// [ D     C    0  ] [x]   [  c ]
/// ```
fn direct_kkt<T: Scalar>(problem: &ProblemSpec<T>, pg: Matrix<T>, qg: Vector<T>, pf: Matrix<T>, qf: Vector<T>) -> Result<ProductVector<T>> {
    let d = problem.dims();
    let n = d.total();
    let mut k = Matrix::<T>::zeros(n, n);
    let (os, oy, ox) = (0, d.s, d.s + d.y);
    k.view_mut((os, os), (d.s, d.s)).copy_from(&pg);
    k.view_mut((oy, oy), (d.y, d.y)).copy_from(&pf);
    k.view_mut((os, ox), (d.s, d.x)).copy_from(&(-problem.d_mat().transpose()));
    k.view_mut((oy, ox), (d.y, d.x)).copy_from(&(-problem.c_mat().transpose()));
    k.view_mut((ox, os), (d.x, d.s)).copy_from(problem.d_mat());
    k.view_mut((ox, oy), (d.x, d.y)).copy_from(problem.c_mat());
    let rhs = ProductVector::new(-qg, -qf, problem.c().clone()).concat();
    let svd = k.svd(true, true);
    let max_sv = svd.singular_values.iter().fold(T::zero(), |a, b| a.max(*b));
    let cutoff = T::lit(1e-12) * max_sv.max(T::one()) * T::lit(n.max(1) as f64);
    let sol = svd.solve(&rhs, cutoff).map_err(|e| Error::SolveFailed(e.to_string()))?;
    Ok(ProductVector::new(
        sol.rows(os, d.s).into_owned(),
        sol.rows(oy, d.y).into_owned(),
        sol.rows(ox, d.x).into_owned(),
    ))
}

/// The fallback for nonsmooth pieces: the proximal ADMM at `θ = β = 1`
/// (linearized when the plain s-step has no closed form) until
/// `‖r_k‖* ≤ 1e−10`, without per-iteration logging.
fn long_run<T: Scalar>(instance: &Instance<T>) -> Result<(ProductVector<T>, usize)> {
    let problem = &instance.problem;
    let admm = match Admm::new(problem, prox_params(problem, &Variant::Standard, 1.0, 1.0, 0)?) {
        Ok(admm) => admm,
        Err(Error::UnsupportedSubproblem(_)) => {
            Admm::new(problem, prox_params(problem, &Variant::Linearized { tau: None }, 1.0, 1.0, 0)?)?
        }
        Err(e) => return Err(e),
    };
    let consts = RateConstants::new(T::one(), T::zero())?;
    let mut z = instance.z0.clone();
    let op = KktOperator::new(problem);
    for k in 1..=LONG_RUN_MAX_ITER {
        let rec = admm.step(k, &z, &consts)?;
        z = rec.z();
        if rec.res_norm.as_f64() <= LONG_RUN_RES_TOL {
            return Ok((z, k));
        }
    }
    Err(Error::ReferenceNotReached {
        residual: op.kkt_residual(&z)?.as_f64(),
        iterations: LONG_RUN_MAX_ITER,
    })
}

/// Computes `z*` and validates it through the subdifferential oracles.
pub fn solve_reference<T: Scalar>(instance: &Instance<T>) -> Result<ReferenceSolution<T>> {
    let problem = &instance.problem;
    let (z_star, method) = match (quadratic_parts(problem.g()), quadratic_parts(problem.f())) {
        (Some((pg, qg)), Some((pf, qf))) => (direct_kkt(problem, pg, qg, pf, qf)?, ReferenceMethod::DirectKkt),
        _ => {
            let (z, iterations) = long_run(instance)?;
            (z, ReferenceMethod::LongRun { iterations })
        }
    };
    let kkt_residual = KktOperator::new(problem).kkt_residual(&z_star)?;
    let solution = ReferenceSolution {
        z_star,
        kkt_residual,
        method,
    };
    let budget = solution.residual_budget(problem);
    if !(kkt_residual.as_f64() <= budget) {
        let iterations = match method {
            ReferenceMethod::DirectKkt => 0,
            ReferenceMethod::LongRun { iterations } => iterations,
        };
        return Err(Error::ReferenceNotReached {
            residual: kkt_residual.as_f64(),
            iterations,
        });
    }
    Ok(solution)
}

/// `(dw)_{z₀}(z*)`: an upper estimate of `d₀`, on the same code path as the engine.
pub fn estimate_d0<T: Scalar, W: DistanceGenerating<T>>(w: &W, z0: &ProductVector<T>, z_star: &ProductVector<T>) -> Result<T> {
    w.dw_eval(z0, z_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{lasso, random_quadratic, scalar_toy};
    use crate::padmm::ProxParams;

    #[test]
    fn scalar_toy_reference_and_d0() {
        let inst = scalar_toy::<f64>().unwrap();
        let reference = solve_reference(&inst).unwrap();
        assert_eq!(reference.method, ReferenceMethod::DirectKkt);
        assert!(reference.z_star.norm() < 1e-15);
        let admm = Admm::new(&inst.problem, ProxParams::standard(1.0, 1.0, inst.problem.dims()).unwrap()).unwrap();
        let d0 = estimate_d0(admm.dgf(), &inst.z0, &reference.z_star).unwrap();
        assert!((d0 - 0.5).abs() < 1e-15);
        assert_eq!(estimate_d0(admm.dgf(), &inst.z0, &inst.z0).unwrap(), 0.0);
    }

    #[test]
    fn d0_scales_with_beta() {
        let inst = scalar_toy::<f64>().unwrap();
        let z0 = ProductVector::from_slices(&[0.0], &[1.0], &[2.0]);
        let zs = ProductVector::from_slices(&[0.0], &[0.0], &[0.0]);
        let dims = inst.problem.dims();
        let a = Admm::new(&inst.problem, ProxParams::standard(1.0, 1.0, dims).unwrap()).unwrap();
        let b = Admm::new(&inst.problem, ProxParams::standard(2.0, 1.0, dims).unwrap()).unwrap();
        // y-term ½β·1, x-term ½·4/β
        assert!((estimate_d0(a.dgf(), &z0, &zs).unwrap() - (0.5 + 2.0)).abs() < 1e-15);
        assert!((estimate_d0(b.dgf(), &z0, &zs).unwrap() - (1.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn direct_reference_is_a_kkt_point() {
        let inst = random_quadratic::<f64>(6, 5, 4, 10.0, 3).unwrap();
        let reference = solve_reference(&inst).unwrap();
        assert!(reference.kkt_residual < 1e-10);
        let op = KktOperator::new(&inst.problem);
        let zero = ProductVector::zeros(inst.problem.dims());
        assert!(op.inclusion(&reference.z_star, &zero, 0.0, 0.0, 1e-8).unwrap().passed(1e-8));
    }

    #[test]
    fn lasso_reference_by_long_run() {
        let inst = lasso::<f64>(10, 20, 0.1, 4).unwrap();
        let reference = solve_reference(&inst).unwrap();
        assert!(matches!(reference.method, ReferenceMethod::LongRun { .. }));
        assert!(reference.kkt_residual < 1e-6);
        let op = KktOperator::new(&inst.problem);
        let zero = ProductVector::zeros(inst.problem.dims());
        assert!(op.inclusion(&reference.z_star, &zero, 0.0, 0.0, 1e-8).unwrap().passed(1e-8));
    }
}
