//! Recursive DRAG pulse synthesis, multilevel transmon simulation, first-order
//! prefactor predictions and Nelder–Mead calibration.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod calibration;
pub mod envelopes;
pub mod error;
pub mod jet;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod propagation;
pub mod spoly;
pub mod synthesis;

pub use error::{Error, Result};
