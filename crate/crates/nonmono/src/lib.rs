#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails the checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod numlin;
pub mod ops;
pub mod problems;
pub mod rules;
pub mod semimono;
pub mod solver;

pub use error::{Error, Result};
pub use numlin::{GroupedSvd, Mat, SymMatrix, Tolerances, Vector};
