//! Pulse-level compilation of variational quantum circuits.
//!
//! The crate is `no_std` (it needs `alloc`). The default `std` feature
//! adds parallel evaluation of independent work (per-slice propagators,
//! library gates, blocks) and a wall clock for per-block timing.

#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod adam;
pub mod bench;
pub mod circuit;
pub mod error;
pub mod grape;
pub mod hamiltonian;
pub mod linalg;
pub mod mintime;
mod parallel;
pub mod partition;
pub mod pipeline;
pub mod qasm;

pub use error::{Error, Result};
