//! Multivariate empirical processes of weakly dependent stationary sequences.
//!
//! The crate simulates several families of stationary `R^d`-valued processes,
//! builds the piecewise-constant and chaining approximations of their
//! empirical processes, and provides the diagnostics used to check mixing
//! rates, partial-sum moment growth and Gaussian limits. It is `no_std` and
//! needs only `alloc`.

#![no_std]
// When std is anywhere in the dependency graph its inherent float methods
// shadow `num_traits::Float`, leaving those imports unused.
#![allow(unused_imports)]

extern crate alloc;

pub mod chaining;
pub mod empirical;
pub mod error;
pub mod foundation;
pub mod generators;
pub mod limit;
pub mod mixing;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
