//! Ensembles, experiments, CSV output and the `kyle` command line for the
//! adaptive Kyle model in `kyle-core`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod ensemble;
mod error;
pub mod experiments;
pub mod io;

pub use error::{Result, SimError};
