//! File formats, output layout, reference-data cache and command-line
//! front end for the `meltpool-core` simulator.
//!
//! Everything numerical lives in the core crate; this crate turns TOML
//! configs into [`meltpool_core::solver::SimulationConfig`]s and writes
//! results to disk.

pub mod cli;
pub mod config;
mod error;
pub mod fetch;
pub mod formats;
pub mod manifest;
pub mod report;
pub mod store;

pub use error::{AppError, Result};
pub use meltpool_core;
