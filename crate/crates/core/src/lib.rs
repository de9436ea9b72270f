//! Through-wall FMCW radar simulator.
//!
//! The crate models the full chain of a radar-on-chip measurement:
//!
//! ```text
//! chirp ──> scene (walls, cables, movers) ──> de-chirped IF trace
//!                                                    │
//!                      range table <── peaks <── STFT spectrogram
//! ```
//!
//! Every stage is a pure function of its inputs; noise is drawn from a
//! per-frame seeded generator so traces are reproducible bit for bit.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod chirp;
pub mod config;
pub mod error;
pub mod ranging;
pub mod scene;
pub mod spectro;
pub mod synth;
pub mod units;
pub mod validate;

pub use error::{Error, Result};

/// Propagation speed used for every delay/range conversion (m/s).
pub const SPEED_OF_LIGHT: f64 = 2.9979e8;

/// Reference load for dBm <-> volt conversions (ohm).
pub const REFERENCE_IMPEDANCE_OHM: f64 = 50.0;
