#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod grid;
pub mod kernel;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
