//! Detection of sparse, structured correlations in a Gaussian vector.
//!
//! The crate provides the null/alternative models ([`model`]), candidate-set
//! families and their overlap laws ([`classes`]), the test statistics and
//! threshold rules ([`detectors`]), lower bounds on the Bayes risk
//! ([`bounds`]), and a deterministic Monte Carlo harness ([`harness`]).

pub mod bounds;
pub mod citations;
pub mod cli;
pub mod classes;
pub mod detectors;
pub mod harness;
pub mod error;
pub mod model;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
