//! Stability-based adaptive window selection for online learning under
//! unknown non-stationarity.

#![forbid(unsafe_code)]
// `!(x >= 0.0)` rejects NaN along with negatives
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod rng;

pub use error::{Result, SawsError};
pub mod problems;
pub mod solvers;
pub mod saws;
pub mod closeness;
pub mod envgen;
pub mod harness;
