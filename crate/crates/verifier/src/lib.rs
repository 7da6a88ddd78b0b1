//! Seeded batch verification of the `harmorph` checks, reported as JSON lines.

// `!(x < tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod sampling;
pub mod suites;

pub use config::{CheckConfig, Suite};
pub use error::VerifyError;
pub use report::ResidualReport;
pub use suites::run_suite;
