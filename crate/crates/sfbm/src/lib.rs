//! Parallel execution, file formats and the `sfbm` command line on top of `sfbm-core`.

pub mod app;
pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;

pub use runner::ParallelRunner;
pub use sfbm_core;
