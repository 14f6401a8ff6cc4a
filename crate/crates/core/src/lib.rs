//! Independence tests that detect whether a classifier has overfitted to the
//! dataset it is evaluated on, using importance weighted adversarial
//! examples.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aeg;
pub mod error;
pub mod harness;
pub mod seed;
pub mod stats;
pub mod synthetic;
pub mod translation;

pub use error::{Error, Result};
