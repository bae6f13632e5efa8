//! Class-E power amplifier synthesis and simulation: network design,
//! switched-linear periodic steady state, open-loop power control,
//! temperature-compensated bias and closed-loop drain peak protection.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bias;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod design;
pub mod error;
pub mod mismatch;
pub mod power_control;
pub mod protection;
pub mod report;
pub mod stage;

pub use error::{Error, Result};
