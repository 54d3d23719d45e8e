//! Integrated active and passive sensing for a dual-function radar-communication
//! base station.
//!
//! A BS with `M` transmit and `N0` receive antennas serves `K` single-antenna UEs
//! while `R` receive-only access points (RAPs) listen for target reflections of
//! the same waveform. The crate covers the full chain:
//!
//! * [`scenario`]: deployment geometry, Rayleigh channels and configuration.
//! * [`precoding`]: RZF communication beams, the ZFR sensing beam and SINR.
//! * [`stats`]: the chi-square detection kernel.
//! * [`detect_fusion`]: centralized signal fusion GLRT (unlimited backhaul).
//! * [`detect_local`]: per-node GLRT with whitening (limited backhaul).
//! * [`vote`]: one-bit decision fusion at the central controller.
//! * [`optimize`]: SINR-constrained power allocation and the `p0` descent heuristic.
//! * [`experiments`]: Monte Carlo sweeps, CSV tables and SVG plots.

pub mod detect_fusion;
pub mod detect_local;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod optimize;
pub mod precoding;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod vote;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
