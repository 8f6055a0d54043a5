//! Command-line driver, experiment runner and reproduction suite for
//! `fracdecay-core`.

// `!(x > 0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod csv;
pub mod error;
pub mod jobs;
pub mod params;
pub mod reproduce;
pub mod runner;

pub use error::{CliError, Result};
