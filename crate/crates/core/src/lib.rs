//! Simulation and asymptotics for spherical fractional Brownian motion.
//!
//! The crate is `no_std` (with `alloc`). Parallel execution, file formats and the
//! command line live in the companion `sfbm` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod constants;
pub mod cubature;
pub mod error;
pub mod excursion;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
