//! Proximal ADMM for `min f(y) + g(s) s.t. C y + D s = c`, analysed as an
//! instance of a non-Euclidean hybrid proximal extragradient (HPE) framework.
//!
//! Every iteration of the solver is turned into an HPE quadruple whose error
//! condition is checked, and the pointwise and ergodic rate bounds are
//! evaluated against the observed residuals, including the multiplier
//! stepsize `θ = (1 + √5)/2`.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the width used by the harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bregman;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod monotone;
pub mod ne_hpe;
pub mod padmm;
pub mod scalar;
pub mod verification;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vector64 = linalg::Vector<f64>;
pub type PsdOperator64 = linalg::PsdOperator<f64>;
pub type ProductVector64 = linalg::ProductVector<f64>;
pub type ProductSeminormOp64 = linalg::ProductSeminormOp<f64>;
pub type QuadraticDgf64 = bregman::QuadraticDgf<f64>;
pub type ConvexPiece64 = monotone::ConvexPiece<f64>;
pub type ProblemSpec64 = padmm::ProblemSpec<f64>;
pub type ProxParams64 = padmm::ProxParams<f64>;
pub type AdmmRun64 = padmm::AdmmRun<f64>;
pub type HpeState64 = ne_hpe::HpeState<f64>;

pub type PsdOperator32 = linalg::PsdOperator<f32>;
pub type ProblemSpec32 = padmm::ProblemSpec<f32>;
