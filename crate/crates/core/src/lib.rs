//! Self-interference suppression for full-duplex arrays with gain-controlled
//! RF beamformers.
//!
//! The pieces, bottom-up:
//!
//! - [`geometry`]: array layouts and phase-response vectors.
//! - [`beamformer`]: Tx/Rx beams with per-element gains, directivity.
//! - [`channel`]: the SI coupling tensor, file I/O, band and sub-array selection.
//! - [`objective`]: band-averaged SI power and the penalized fitness.
//! - [`pso`]: the bounded particle swarm optimizer.
//! - [`sweep`]: the MD / CM / NCM schemes and angle-grid sweeps.

pub mod beamformer;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod objective;
pub mod pso;
pub mod sweep;

pub use error::{Error, Result};
