//! Matrix completion from quantized observations.
//!
//! The crate covers the full pipeline for recovering a low-rank matrix from a
//! coarsely quantized subset of its entries:
//!
//! - [`matrix`]: ground-truth generation, sampling masks, projection and
//!   vectorization.
//! - [`quantize`]: memoryless, dithered, stochastic and one-bit scalar
//!   quantizers plus dither generation.
//! - [`onebit`]: dithered one-bit observations, the sparse one-bit polyhedron,
//!   consistency (Hamming) metrics and threshold-distance statistics.
//! - [`solvers`]: nuclear-norm proximal operator, the Frobenius-ball
//!   constrained solver for multi-bit data and the polyhedron constrained
//!   solver for one-bit data.
//! - [`bounds`]: closed-form recovery bounds, failure-probability exponents and
//!   the decay-rate root solver.
//! - [`harness`]: seeded Monte Carlo experiments and CSV reports.
//!
//! All random operations take an explicit `u64` seed and are bitwise
//! reproducible.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod onebit;
pub mod quantize;
pub mod solvers;

pub use error::{Error, Result};
pub use matrix::{Dimensions, GroundTruth, SampleMask};

/// Dense real matrix used throughout the crate (column-major storage).
pub type Matrix = nalgebra::DMatrix<f64>;
