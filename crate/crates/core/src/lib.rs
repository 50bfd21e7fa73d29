//! Structured-sparse non-negative matrix factorization.
//!
//! `X ≈ WH` with `W, H ≥ 0`, an optional orthogonality penalty on `H` and a
//! sparsity constraint on `W` (row count, per-column count or entry count),
//! solved with PALM or its monotone accelerated variant.

// `!(x > 0.0)` is used on purpose so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod prox;
pub mod random;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
