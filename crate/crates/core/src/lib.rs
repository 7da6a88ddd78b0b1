// `!(x < tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// tensor code reads best with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod constructors;
pub mod error;
pub mod fd;
pub mod field;
pub mod foliation;
pub mod gallery;
pub mod jet;
pub mod kernel;
pub mod morphism;
pub mod region;
