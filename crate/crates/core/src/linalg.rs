//! Dense vectors, self-adjoint PSD operators with their induced seminorms,
//! and the three-block product space `S x Y x X`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, invalid, Error, Result};
use crate::scalar::Scalar;

pub type Vector<T> = DVector<T>;
pub type Matrix<T> = DMatrix<T>;

/// Relative eigenvalue threshold below which a direction is treated as kernel.
pub const RANK_TOL_REL: f64 = 1e-10;

/// Result of evaluating a dual seminorm, whose domain is the image of the operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualValue<T> {
    Finite(T),
    OutOfDomain,
}

impl<T: Copy> DualValue<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            DualValue::Finite(v) => Some(v),
            DualValue::OutOfDomain => None,
        }
    }

    pub fn is_out_of_domain(self) -> bool {
        matches!(self, DualValue::OutOfDomain)
    }
}

pub(crate) fn all_finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Self-adjoint positive semidefinite operator stored densely.
///
/// The matrix is symmetrized on construction (the two triangles are
/// bit-identical afterwards) and its eigendecomposition is kept, which makes
/// the pseudo-inverse, the image-membership test and the dual seminorm cheap.
#[derive(Debug, Clone)]
pub struct PsdOperator<T: Scalar> {
    matrix: Matrix<T>,
    eigenvalues: Vector<T>,
    eigenvectors: Matrix<T>,
    norm: T,
    rank_tol: T,
}

impl<T: Scalar> PsdOperator<T> {
    pub fn new(mut matrix: Matrix<T>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if !all_finite(matrix.as_slice()) {
            return Err(Error::NonFinite("PSD operator matrix"));
        }
        let half = T::lit(0.5);
        for i in 0..rows {
            for j in (i + 1)..rows {
                let avg = (matrix[(i, j)] + matrix[(j, i)]) * half;
                matrix[(i, j)] = avg;
                matrix[(j, i)] = avg;
            }
        }
        let (eigenvalues, eigenvectors) = if rows == 0 {
            (Vector::zeros(0), Matrix::zeros(0, 0))
        } else {
            let eig = SymmetricEigen::new(matrix.clone());
            (eig.eigenvalues, eig.eigenvectors)
        };
        let norm = eigenvalues.iter().fold(T::zero(), |acc, l| acc.max(l.abs()));
        let rank_tol = T::tol(RANK_TOL_REL) * norm;
        let min_eig = eigenvalues.iter().fold(T::zero(), |acc, l| acc.min(*l));
        if min_eig < -rank_tol {
            return Err(Error::NotPsd {
                min_eigenvalue: min_eig.as_f64(),
            });
        }
        Ok(Self {
            matrix,
            eigenvalues,
            eigenvectors,
            norm,
            rank_tol,
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(Matrix::zeros(n, n)).expect("zero operator is PSD")
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n, n)).expect("identity is PSD")
    }

    pub fn scaled_identity(n: usize, c: T) -> Result<Self> {
        if c < T::zero() {
            return Err(invalid("scale", "scaled identity needs a nonnegative scale"));
        }
        Self::new(Matrix::identity(n, n) * c)
    }

    pub fn from_diagonal(diag: &[T]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    /// `B Bᵀ` for an arbitrary factor `B`.
    pub fn from_factor(factor: &Matrix<T>) -> Result<Self> {
        Self::new(factor * factor.transpose())
    }

    /// `scale · Mᵀ M`, the Gram operator of a coupling matrix.
    pub fn gram(coupling: &Matrix<T>, scale: T) -> Result<Self> {
        Self::new(coupling.tr_mul(coupling) * scale)
    }

    /// Sum of two PSD operators of equal dimension.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        check_dim("operator sum", self.dim(), other.dim())?;
        Self::new(&self.matrix + &other.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &Vector<T> {
        &self.eigenvalues
    }

    /// Spectral norm (largest eigenvalue magnitude).
    pub fn spectral_norm(&self) -> T {
        self.norm
    }

    pub fn rank_tol(&self) -> T {
        self.rank_tol
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |acc, l| acc.min(*l))
    }

    /// `Some(τ)` when the operator equals `τ I` entrywise within `rel_tol · max(1, |τ|)`.
    pub fn as_scaled_identity(&self, rel_tol: T) -> Option<T> {
        let n = self.dim();
        if n == 0 {
            return Some(T::zero());
        }
        let tau = (0..n).fold(T::zero(), |acc, i| acc + self.matrix[(i, i)]) / T::lit(n as f64);
        let scale = tau.abs().max(T::one());
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { tau } else { T::zero() };
                if (self.matrix[(i, j)] - target).abs() > rel_tol * scale {
                    return None;
                }
            }
        }
        Some(tau)
    }

    pub fn apply(&self, v: &Vector<T>) -> Result<Vector<T>> {
        check_dim("operator apply", self.dim(), v.len())?;
        Ok(self.mul(v))
    }

    /// Unchecked product for callers that already validated dimensions.
    #[inline]
    pub(crate) fn mul(&self, v: &Vector<T>) -> Vector<T> {
        &self.matrix * v
    }

    /// `⟨A v, v⟩`.
    pub fn quad_form(&self, v: &Vector<T>) -> Result<T> {
        check_dim("quadratic form", self.dim(), v.len())?;
        Ok(self.quad_unchecked(v))
    }

    #[inline]
    pub(crate) fn quad_unchecked(&self, v: &Vector<T>) -> T {
        self.mul(v).dot(v)
    }

    /// `‖v‖_A = √⟨A v, v⟩`.
    pub fn seminorm(&self, v: &Vector<T>) -> Result<T> {
        let q = self.quad_form(v)?;
        self.checked_sqrt(q, v.norm_squared())
    }

    pub(crate) fn checked_sqrt(&self, q: T, scale: T) -> Result<T> {
        let floor = (self.rank_tol + T::tol(1e-14) * self.norm) * scale;
        if q < -floor {
            return Err(Error::NegativeQuadraticForm { value: q.as_f64() });
        }
        Ok(q.max(T::zero()).sqrt())
    }

    fn eigen_coords(&self, r: &Vector<T>) -> Vector<T> {
        self.eigenvectors.tr_mul(r)
    }

    /// Norm of the component of `r` orthogonal to the image.
    pub fn image_residual(&self, r: &Vector<T>) -> Result<T> {
        check_dim("image residual", self.dim(), r.len())?;
        let c = self.eigen_coords(r);
        let mut acc = T::zero();
        for (ci, li) in c.iter().zip(self.eigenvalues.iter()) {
            if *li <= self.rank_tol {
                acc += *ci * *ci;
            }
        }
        Ok(acc.sqrt())
    }

    /// Minimum-norm least-squares solution of `A u = r`.
    pub fn pinv_apply(&self, r: &Vector<T>) -> Result<Vector<T>> {
        check_dim("pseudo-inverse", self.dim(), r.len())?;
        let mut c = self.eigen_coords(r);
        for (ci, li) in c.iter_mut().zip(self.eigenvalues.iter()) {
            *ci = if *li > self.rank_tol { *ci / *li } else { T::zero() };
        }
        Ok(&self.eigenvectors * c)
    }

    /// Dual seminorm `sup{⟨r, v⟩ : ‖v‖_A ≤ 1}`, finite exactly on `Im(A)`.
    ///
    /// Membership uses the least-squares residual against
    /// `rank_tol · max(1, ‖r‖)`.
    pub fn dual_seminorm(&self, r: &Vector<T>) -> Result<DualValue<T>> {
        self.dual_seminorm_within(r, self.rank_tol)
    }

    /// Same as [`dual_seminorm`](Self::dual_seminorm) with an explicit
    /// membership tolerance.
    pub fn dual_seminorm_within(&self, r: &Vector<T>, tol: T) -> Result<DualValue<T>> {
        check_dim("dual seminorm", self.dim(), r.len())?;
        if !all_finite(r.as_slice()) {
            return Err(Error::NonFinite("dual seminorm argument"));
        }
        let c = self.eigen_coords(r);
        let mut residual_sq = T::zero();
        let mut value_sq = T::zero();
        for (ci, li) in c.iter().zip(self.eigenvalues.iter()) {
            if *li > self.rank_tol {
                value_sq += *ci * *ci / *li;
            } else {
                residual_sq += *ci * *ci;
            }
        }
        if !value_sq.is_finite() {
            return Err(Error::SolveFailed("dual seminorm overflow".into()));
        }
        if residual_sq.sqrt() > tol * r.norm().max(T::one()) {
            Ok(DualValue::OutOfDomain)
        } else {
            Ok(DualValue::Finite(value_sq.sqrt()))
        }
    }
}

/// Block dimensions of the product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductDims {
    pub s: usize,
    pub y: usize,
    pub x: usize,
}

impl ProductDims {
    pub fn total(&self) -> usize {
        self.s + self.y + self.x
    }
}

/// Point `z = (s, y, x)` of `S x Y x X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector<T: Scalar> {
    pub s: Vector<T>,
    pub y: Vector<T>,
    pub x: Vector<T>,
}

impl<T: Scalar> ProductVector<T> {
    pub fn new(s: Vector<T>, y: Vector<T>, x: Vector<T>) -> Self {
        Self { s, y, x }
    }

    pub fn zeros(dims: ProductDims) -> Self {
        Self {
            s: Vector::zeros(dims.s),
            y: Vector::zeros(dims.y),
            x: Vector::zeros(dims.x),
        }
    }

    pub fn from_slices(s: &[T], y: &[T], x: &[T]) -> Self {
        Self {
            s: Vector::from_column_slice(s),
            y: Vector::from_column_slice(y),
            x: Vector::from_column_slice(x),
        }
    }

    pub fn dims(&self) -> ProductDims {
        ProductDims {
            s: self.s.len(),
            y: self.y.len(),
            x: self.x.len(),
        }
    }

    pub fn check_dims(&self, context: &'static str, dims: ProductDims) -> Result<()> {
        check_dim(context, dims.s, self.s.len())?;
        check_dim(context, dims.y, self.y.len())?;
        check_dim(context, dims.x, self.x.len())
    }

    pub fn dot(&self, other: &Self) -> T {
        self.s.dot(&other.s) + self.y.dot(&other.y) + self.x.dot(&other.x)
    }

    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            s: &self.s * a,
            y: &self.y * a,
            x: &self.x * a,
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        self.s.axpy(a, &other.s, T::one());
        self.y.axpy(a, &other.y, T::one());
        self.x.axpy(a, &other.x, T::one());
    }

    pub fn is_finite(&self) -> bool {
        all_finite(self.s.as_slice()) && all_finite(self.y.as_slice()) && all_finite(self.x.as_slice())
    }

    /// Stacked `(s, y, x)` as one vector.
    pub fn concat(&self) -> Vector<T> {
        let mut out = Vector::zeros(self.dims().total());
        let (ns, ny) = (self.s.len(), self.y.len());
        out.rows_mut(0, ns).copy_from(&self.s);
        out.rows_mut(ns, ny).copy_from(&self.y);
        out.rows_mut(ns + ny, self.x.len()).copy_from(&self.x);
        out
    }
}

impl<T: Scalar> Add for &ProductVector<T> {
    type Output = ProductVector<T>;
    fn add(self, rhs: Self) -> ProductVector<T> {
        ProductVector {
            s: &self.s + &rhs.s,
            y: &self.y + &rhs.y,
            x: &self.x + &rhs.x,
        }
    }
}

impl<T: Scalar> Sub for &ProductVector<T> {
    type Output = ProductVector<T>;
    fn sub(self, rhs: Self) -> ProductVector<T> {
        ProductVector {
            s: &self.s - &rhs.s,
            y: &self.y - &rhs.y,
            x: &self.x - &rhs.x,
        }
    }
}

impl<T: Scalar> Mul<T> for &ProductVector<T> {
    type Output = ProductVector<T>;
    fn mul(self, a: T) -> ProductVector<T> {
        self.scale(a)
    }
}

impl<T: Scalar> Neg for &ProductVector<T> {
    type Output = ProductVector<T>;
    fn neg(self) -> ProductVector<T> {
        self.scale(-T::one())
    }
}

/// Block-diagonal operator `Q(s, y, x) = (H s, Gc y, x_scale · x)`.
#[derive(Debug, Clone)]
pub struct ProductSeminormOp<T: Scalar> {
    h: PsdOperator<T>,
    gc: PsdOperator<T>,
    x_dim: usize,
    x_scale: T,
}

impl<T: Scalar> ProductSeminormOp<T> {
    pub fn new(h: PsdOperator<T>, gc: PsdOperator<T>, x_dim: usize, x_scale: T) -> Result<Self> {
        if !(x_scale > T::zero()) || !x_scale.is_finite() {
            return Err(invalid("x_scale", "must be positive and finite"));
        }
        Ok(Self { h, gc, x_dim, x_scale })
    }

    pub fn h(&self) -> &PsdOperator<T> {
        &self.h
    }

    pub fn gc(&self) -> &PsdOperator<T> {
        &self.gc
    }

    pub fn x_scale(&self) -> T {
        self.x_scale
    }

    pub fn dims(&self) -> ProductDims {
        ProductDims {
            s: self.h.dim(),
            y: self.gc.dim(),
            x: self.x_dim,
        }
    }

    pub fn apply(&self, z: &ProductVector<T>) -> Result<ProductVector<T>> {
        z.check_dims("product operator apply", self.dims())?;
        Ok(self.mul(z))
    }

    #[inline]
    pub(crate) fn mul(&self, z: &ProductVector<T>) -> ProductVector<T> {
        ProductVector {
            s: self.h.mul(&z.s),
            y: self.gc.mul(&z.y),
            x: &z.x * self.x_scale,
        }
    }

    /// `‖z‖²_Q`, without the square root.
    pub fn seminorm_squared(&self, z: &ProductVector<T>) -> Result<T> {
        z.check_dims("product seminorm", self.dims())?;
        Ok(self.squared_unchecked(z))
    }

    #[inline]
    pub(crate) fn squared_unchecked(&self, z: &ProductVector<T>) -> T {
        self.h.quad_unchecked(&z.s) + self.gc.quad_unchecked(&z.y) + self.x_scale * z.x.norm_squared()
    }

    pub fn seminorm(&self, z: &ProductVector<T>) -> Result<T> {
        let q = self.seminorm_squared(z)?;
        let scale = z.s.norm_squared() + z.y.norm_squared();
        let floor = (self.h.rank_tol() + self.gc.rank_tol() + T::tol(1e-14) * (self.h.spectral_norm() + self.gc.spectral_norm())) * scale;
        if q < -floor {
            return Err(Error::NegativeQuadraticForm { value: q.as_f64() });
        }
        Ok(q.max(T::zero()).sqrt())
    }

    /// Dual of the product seminorm: finite iff each block lies in its image.
    pub fn dual_seminorm(&self, r: &ProductVector<T>) -> Result<DualValue<T>> {
        r.check_dims("product dual seminorm", self.dims())?;
        let s = self.h.dual_seminorm(&r.s)?;
        let y = self.gc.dual_seminorm(&r.y)?;
        match (s, y) {
            (DualValue::Finite(a), DualValue::Finite(b)) => {
                Ok(DualValue::Finite((a * a + b * b + r.x.norm_squared() / self.x_scale).sqrt()))
            }
            _ => Ok(DualValue::OutOfDomain),
        }
    }

    /// The block-diagonal operator as one dense PSD matrix.
    pub fn assemble(&self) -> Result<PsdOperator<T>> {
        let d = self.dims();
        let n = d.total();
        let mut m = Matrix::zeros(n, n);
        m.view_mut((0, 0), (d.s, d.s)).copy_from(self.h.matrix());
        m.view_mut((d.s, d.s), (d.y, d.y)).copy_from(self.gc.matrix());
        for i in 0..d.x {
            m[(d.s + d.y + i, d.s + d.y + i)] = self.x_scale;
        }
        PsdOperator::new(m)
    }
}
