//! Pareto-optimal MIMO precoding under per-antenna power constraints.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pareto;
pub mod precoder;
pub mod random;
pub mod verify;

pub use error::{Error, Result};
