//! Monte-Carlo engine and closed-form analytics for Bayesian market impact.
//!
//! A market maker who cannot tell a meta-order from noise prices the order
//! flow by Bayesian inference on the participation rate. This crate
//! simulates such flows, applies the pricing rules and compares ensemble
//! averages with the analytic square-root, linear, decay and reversal laws.

// NaN must fail the positivity checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod estimators;
pub mod harness;
pub mod marketmaker;
pub mod orderflow;
pub mod specfun;
pub mod theory;

pub use error::{Error, Result};
