//! Experiments on spiked random matrices: configuration files, CSV/JSON
//! output, Monte Carlo scenarios, figure data and the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod figures;
pub mod formats;
pub mod scenario;
pub mod theory;

pub use spikelab_core as core;
