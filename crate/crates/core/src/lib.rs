//! Spiked Wigner and Wishart matrices, their spectral measures in the direction
//! of the spike, and the free-probability limits those measures converge to.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod closed_forms;
pub mod eig;
pub mod error;
pub mod measures;
pub mod overlap;
pub mod sampler;

pub use error::{Error, Result};
