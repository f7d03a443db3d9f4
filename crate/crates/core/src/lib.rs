//! Transient nonlinear heat conduction for single-track laser scans.
//!
//! The crate predicts melt-pool length, width, depth and cooling rate for a
//! laser moving over a metal plate. It solves
//!
//! ```text
//! ρ c(T) ∂T/∂t + ρ L ∂f_pc/∂t − ∇·(k(T) ∇T) = 0
//! ```
//!
//! on a graded tensor-product hexahedral grid with a surface heat flux
//! (double-elliptical Goldak or a measured intensity map) and radiative loss
//! on the top face.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature only adds
//! thread parallelism for assembly, metric scans and parameter sweeps; all
//! results are bit-identical with or without it.
//!
//! Units are fixed throughout: mm, s, W, J, kg, °C.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bench;
pub mod calibration;
mod error;
pub mod grid;
pub mod heat_source;
pub mod material;
pub(crate) mod math;
pub mod metrics;
mod par;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
