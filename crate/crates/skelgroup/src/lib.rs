//! Skeleton-based group activity recognition with weak per-actor supervision.
//!
//! A group activity clip is a fixed-length sequence of 2D skeletons for a
//! fixed roster of actors. The library turns each clip into three input
//! streams (normalized per-actor poses, their temporal differences, and
//! per-joint offsets from a scene pivot actor), feeds each stream through its
//! own small convolutional branch, fuses the branches into per-actor feature
//! vectors, and reads out both a per-actor action head and a max-pooled group
//! head. Per-actor labels may come from annotation or from clustering cheap
//! per-actor descriptors, so the group classifier can be trained even when no
//! individual action labels exist.
//!
//! The crate is organized as a library plus one thin CLI binary. Start with
//! the `examples/` directory: each example is a runnable walkthrough of one
//! capability (dataset generation, stream inspection, gradient checking,
//! training, pseudo-labeling, cluster sweeps, ablations).

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod pseudo;
pub mod streams;
pub mod train;

pub mod cli;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// The deterministic random number generator used everywhere in the crate.
/// Always constructed from an explicit seed; nothing reads OS entropy.
pub type DetRng = rand_chacha::ChaCha8Rng;
