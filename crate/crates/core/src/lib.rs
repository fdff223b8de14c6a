//! Adaptive-agent Kyle price formation.
//!
//! A market maker filters an informed trader's signal out of noisy order
//! flow while periodically revising its belief about fundamental volatility
//! from realized prices. This crate holds the pure numerical core:
//!
//! - [`stochastic`]: seeded random streams and the AR(1) noise-variance process.
//! - [`agents`]: trader strategies and price-impact update maps.
//! - [`engine`]: the full trading-round simulation with belief revision.
//! - [`kesten`]: the coarse-time excess-variance recursion and closed-form quantities.
//! - [`stats`]: autocorrelation, exponential fits, tail estimation, summaries.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration files,
//! parallel ensembles and the command line live in the companion `kyle-sim`
//! crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agents;
pub mod engine;
mod error;
pub mod kesten;
mod math;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
