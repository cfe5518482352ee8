//! Data-driven barrier certificates for discrete-time systems.
//!
//! Samples of one-step transitions are filtered against a physics model,
//! turned into a linear scenario program over the coefficients of a
//! polynomial barrier, solved, and certified with either a covering-radius
//! (deterministic) or scenario-bound (probabilistic) argument.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod certify;
pub mod error;
pub mod filter;
pub mod lipschitz;
pub mod models;
pub mod pipeline;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
