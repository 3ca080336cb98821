//! Run configuration, θ-sweeps and CSV/JSON output for the proximal ADMM
//! certificates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::{ProblemConfig, RunConfig, VariantConfig};
pub use error::{HarnessError, Result};
pub use output::{CellSummary, CSV_HEADER};
pub use runner::{parallel_map, run, sweep, RunOutput, SweepArgs};
