//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the solver and its certificates.
///
/// Implemented for `f32` and `f64`. Everything that needs square roots or
/// eigendecompositions is written against this trait, so the two widths
/// share one code path.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// A tolerance no tighter than what this width can resolve.
    ///
    /// Returns `value` for `f64` at every tolerance used in the crate, and a
    /// few ulps-worth of slack for `f32`.
    #[inline]
    fn tol(value: f64) -> Self {
        Self::lit(value).max(Self::lit(64.0) * Self::default_epsilon())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
