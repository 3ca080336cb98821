//! Seeded problem instances and proximal-operator variants.
//!
//! Every generated problem embeds a KKT point by construction: the random
//! quadratic plants a feasible pair, and the lasso has `y = s` feasible.

use nalgebra::{SymmetricEigen, QR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, ProductVector, PsdOperator, Vector};
use crate::monotone::ConvexPiece;
use crate::padmm::{ProblemSpec, ProxParams};
use crate::scalar::Scalar;

const MAX_REDRAWS: usize = 5;
const RANK_TOL: f64 = 1e-8;

/// Built-in problem families.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    /// Strongly convex quadratics `f`, `g` with condition number `cond`
    /// coupled by Gaussian `C`, `D`.
    RandomQuadratic { n_s: usize, n_y: usize, n_x: usize, cond: f64, seed: u64 },
    /// `½‖A y − b‖² + mu‖s‖₁` subject to `y − s = 0`, with `A` of size `m × n`.
    Lasso { m: usize, n: usize, mu: f64, seed: u64 },
    /// `½y² + ½s²` subject to `y + s = 0`, started at `(1, 1, 0)`.
    ScalarToy,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::RandomQuadratic { .. } => "random_quadratic",
            ProblemKind::Lasso { .. } => "lasso",
            ProblemKind::ScalarToy => "scalar_toy",
        }
    }

    /// Short label including the shape parameters.
    pub fn label(&self) -> String {
        match self {
            ProblemKind::RandomQuadratic { n_s, n_y, n_x, cond, seed } => {
                format!("random_quadratic(n_s={n_s},n_y={n_y},n_x={n_x},cond={cond},seed={seed})")
            }
            ProblemKind::Lasso { m, n, mu, seed } => format!("lasso(m={m},n={n},mu={mu},seed={seed})"),
            ProblemKind::ScalarToy => "scalar_toy".to_string(),
        }
    }
}

/// Choice of `(H, G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// `H = G = 0`.
    Standard,
    /// Random PSD `H`, `G` with spectra in `[0, scale]` and some zero
    /// eigenvalues. For an `l1` piece the matching operator is `scale · I`.
    Proximal { h_scale: f64, g_scale: f64 },
    /// `H = τ I − βDᵀD`, `G = 0`; `τ` defaults to `1.5 β‖D‖²`.
    Linearized { tau: Option<f64> },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Proximal { .. } => "proximal",
            Variant::Linearized { .. } => "linearized",
        }
    }
}

/// A problem together with its starting point.
#[derive(Debug, Clone)]
pub struct Instance<T: Scalar> {
    pub kind: ProblemKind,
    pub problem: ProblemSpec<T>,
    pub z0: ProductVector<T>,
}

fn gaussian<T: Scalar>(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::lit(scale * rng.sample::<f64, _>(StandardNormal)))
}

fn gaussian_vec<T: Scalar>(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vector<T> {
    Vector::from_fn(n, |_, _| T::lit(scale * rng.sample::<f64, _>(StandardNormal)))
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    let qr = QR::new(gaussian::<f64>(n, n, 1.0, rng));
    let mut q = qr.q();
    let r = qr.r();
    // fix column signs so the draw is Haar distributed
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn cast<T: Scalar>(m: &Matrix<f64>) -> Matrix<T> {
    m.map(T::lit)
}

/// `Q diag(λ) Qᵀ` with `λ` geometric from 1 to `cond`; the identity when `cond = 1`.
pub fn random_psd_with_condition<T: Scalar>(n: usize, cond: f64, rng: &mut ChaCha8Rng) -> Result<PsdOperator<T>> {
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(invalid("cond", "must be finite and at least 1"));
    }
    if cond == 1.0 {
        return Ok(PsdOperator::identity(n));
    }
    let q = random_orthogonal(n, rng);
    let lambdas: Vec<f64> = (0..n)
        .map(|i| if n == 1 { 1.0 } else { cond.powf(i as f64 / (n - 1) as f64) })
        .collect();
    let d = Matrix::from_diagonal(&Vector::from_vec(lambdas));
    PsdOperator::new(cast(&(&q * d * q.transpose())))
}

/// Random PSD matrix with eigenvalues uniform in `(0, scale]`, about a quarter
/// of them (at least one when `n ≥ 2`) set to zero.
pub fn random_psd_singular<T: Scalar>(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Result<PsdOperator<T>> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(invalid("scale", "must be finite and nonnegative"));
    }
    let q = random_orthogonal(n, rng);
    let n_zero = if n >= 2 { (n / 4).max(1) } else { 0 };
    let lambdas: Vec<f64> = (0..n)
        .map(|i| if i < n_zero { 0.0 } else { scale * rng.random_range(0.1..=1.0) })
        .collect();
    let d = Matrix::from_diagonal(&Vector::from_vec(lambdas));
    PsdOperator::new(cast(&(&q * d * q.transpose())))
}

fn row_rank_ok(m: &Matrix<f64>) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let gram = m * m.transpose();
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    max > 0.0 && min > RANK_TOL * RANK_TOL * max
}

pub fn random_quadratic<T: Scalar>(n_s: usize, n_y: usize, n_x: usize, cond: f64, seed: u64) -> Result<Instance<T>> {
    if n_s == 0 || n_y == 0 || n_x == 0 {
        return Err(invalid("dims", "all dimensions must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_f = random_psd_with_condition::<T>(n_y, cond, &mut rng)?;
    let p_g = random_psd_with_condition::<T>(n_s, cond, &mut rng)?;
    let q_f = gaussian_vec::<T>(n_y, 1.0, &mut rng);
    let q_g = gaussian_vec::<T>(n_s, 1.0, &mut rng);
    let mut blocks = None;
    for _ in 0..MAX_REDRAWS {
        let c = gaussian::<f64>(n_x, n_y, 1.0 / (n_y as f64).sqrt(), &mut rng);
        let d = gaussian::<f64>(n_x, n_s, 1.0 / (n_s as f64).sqrt(), &mut rng);
        let stacked = Matrix::from_fn(n_x, n_y + n_s, |i, j| if j < n_y { c[(i, j)] } else { d[(i, j - n_y)] });
        let each_ok = (n_x > n_y || row_rank_ok(&c)) && (n_x > n_s || row_rank_ok(&d));
        if each_ok && row_rank_ok(&stacked) {
            blocks = Some((c, d));
            break;
        }
    }
    let (c, d) = blocks.ok_or_else(|| Error::Generation(format!("coupling blocks rank deficient after {MAX_REDRAWS} draws")))?;
    let y_plant = gaussian_vec::<f64>(n_y, 1.0, &mut rng);
    let s_plant = gaussian_vec::<f64>(n_s, 1.0, &mut rng);
    let rhs = &c * y_plant + &d * s_plant;
    let problem = ProblemSpec::new(
        ConvexPiece::quadratic(p_f, q_f)?,
        ConvexPiece::quadratic(p_g, q_g)?,
        cast(&c),
        cast(&d),
        rhs.map(T::lit),
    )?;
    let z0 = ProductVector::new(
        gaussian_vec(n_s, 1.0, &mut rng),
        gaussian_vec(n_y, 1.0, &mut rng),
        gaussian_vec(n_x, 1.0, &mut rng),
    );
    Ok(Instance {
        kind: ProblemKind::RandomQuadratic { n_s, n_y, n_x, cond, seed },
        problem,
        z0,
    })
}

/// `f(y) = ½‖A y − b‖²` is stored as `½⟨AᵀA y, y⟩ − ⟨Aᵀb, y⟩` (the constant is dropped).
pub fn lasso<T: Scalar>(m: usize, n: usize, mu: f64, seed: u64) -> Result<Instance<T>> {
    if m == 0 || n == 0 {
        return Err(invalid("dims", "m and n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian::<f64>(m, n, 1.0 / (m as f64).sqrt(), &mut rng);
    let support = (n / 10).max(1);
    let mut truth = Vector::<f64>::zeros(n);
    for i in 0..support {
        let idx = (i * n) / support;
        truth[idx] = rng.sample::<f64, _>(StandardNormal);
    }
    let noise = gaussian_vec::<f64>(m, 0.01, &mut rng);
    let b = &a * truth + noise;
    let p = PsdOperator::new(cast(&a.tr_mul(&a)))?;
    let q = (-a.tr_mul(&b)).map(T::lit);
    let problem = ProblemSpec::new(
        ConvexPiece::quadratic(p, q)?,
        ConvexPiece::l1(T::lit(mu), n)?,
        Matrix::identity(n, n),
        -Matrix::<T>::identity(n, n),
        Vector::zeros(n),
    )?;
    let z0 = ProductVector::new(
        gaussian_vec(n, 1.0, &mut rng),
        gaussian_vec(n, 1.0, &mut rng),
        gaussian_vec(n, 1.0, &mut rng),
    );
    Ok(Instance {
        kind: ProblemKind::Lasso { m, n, mu, seed },
        problem,
        z0,
    })
}

pub fn scalar_toy<T: Scalar>() -> Result<Instance<T>> {
    let one = PsdOperator::identity(1);
    let problem = ProblemSpec::new(
        ConvexPiece::quadratic(one.clone(), Vector::zeros(1))?,
        ConvexPiece::quadratic(one, Vector::zeros(1))?,
        Matrix::from_element(1, 1, T::one()),
        Matrix::from_element(1, 1, T::one()),
        Vector::zeros(1),
    )?;
    Ok(Instance {
        kind: ProblemKind::ScalarToy,
        problem,
        z0: ProductVector::from_slices(&[T::one()], &[T::one()], &[T::zero()]),
    })
}

pub fn generate<T: Scalar>(kind: &ProblemKind) -> Result<Instance<T>> {
    match *kind {
        ProblemKind::RandomQuadratic { n_s, n_y, n_x, cond, seed } => random_quadratic(n_s, n_y, n_x, cond, seed),
        ProblemKind::Lasso { m, n, mu, seed } => lasso(m, n, mu, seed),
        ProblemKind::ScalarToy => scalar_toy(),
    }
}

/// Spectral norm of a rectangular matrix.
fn spectral_norm<T: Scalar>(m: &Matrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone().svd(false, false).singular_values.iter().fold(T::zero(), |a, b| a.max(*b))
}

fn prox_for_piece<T: Scalar>(piece: &ConvexPiece<T>, scale: f64, rng: &mut ChaCha8Rng) -> Result<PsdOperator<T>> {
    match piece {
        ConvexPiece::L1 { dim, .. } => PsdOperator::scaled_identity(*dim, T::lit(scale)),
        _ => random_psd_singular(piece.dim(), scale, rng),
    }
}

/// Builds `ProxParams` for `variant`; `seed` drives the random operators of
/// the proximal variant.
pub fn prox_params<T: Scalar>(
    problem: &ProblemSpec<T>,
    variant: &Variant,
    beta: f64,
    theta: f64,
    seed: u64,
) -> Result<ProxParams<T>> {
    let dims = problem.dims();
    let beta_t = T::lit(beta);
    let theta_t = T::lit(theta);
    match *variant {
        Variant::Standard => ProxParams::standard(beta_t, theta_t, dims),
        Variant::Proximal { h_scale, g_scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let h = prox_for_piece(problem.g(), h_scale, &mut rng)?;
            let g = prox_for_piece(problem.f(), g_scale, &mut rng)?;
            ProxParams::new(beta_t, theta_t, h, g)
        }
        Variant::Linearized { tau } => {
            let d_norm = spectral_norm(problem.d_mat()).as_f64();
            let floor = beta * d_norm * d_norm;
            let tau = tau.unwrap_or(1.5 * floor);
            if tau < floor * (1.0 - 1e-12) {
                return Err(invalid("tau", format!("linearized variant needs tau >= beta*||D||^2 = {floor}")));
            }
            let dtd = problem.d_mat().tr_mul(problem.d_mat()) * beta_t;
            let h = Matrix::<T>::identity(dims.s, dims.s) * T::lit(tau) - dtd;
            ProxParams::new(beta_t, theta_t, PsdOperator::new(h)?, PsdOperator::zeros(dims.y))
        }
    }
}
