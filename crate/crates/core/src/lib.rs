//! # speclore
//!
//! Community detection for sparse latent space network models.
//!
//! The method is SpecLoRe: **spec**tral clustering followed by **lo**cal
//! **re**finement. Initialization computes the best rank-k approximation of
//! the adjacency matrix and clusters its L1-normalized rows with a weighted
//! k-median; refinement then runs synchronous majority-vote rounds over
//! normalized edge counts. A leave-one-out variant re-initializes once per
//! node and aligns the per-node label permutations.
//!
//! Alongside the estimators, the crate ships:
//!
//! - a generative simulator for the latent eigenmodel
//!   `logit(P_ij) = alpha_i + alpha_j + z_i' H z_j` with Gaussian latent
//!   positions per community ([`genmodel`]),
//! - evaluators for the theoretical error rates: misclustering loss, Bayes
//!   risk, the projection distance rho, order-1/2 Renyi divergence, and
//!   Monte-Carlo estimates of the upper/lower rate envelopes ([`theory`]),
//! - the one-node testing harness comparing edge counting with the numeric
//!   likelihood-ratio decision ([`theory`]).
//!
//! Everything is deterministic given a seed, independent of thread count.
//!
//! ## Quick start
//!
//! ```
//! use speclore::genmodel::{preset_spec, Preset, draw_model};
//! use speclore::pipeline::cluster;
//! use speclore::theory::misclustering_loss;
//!
//! let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
//! // Small n for the doctest; presets default to n = 1000.
//! let spec = spec.with_n(120).unwrap();
//! let draw = draw_model(&spec, 7).unwrap();
//! let out = cluster(&draw.adjacency, 2, 2, 7).unwrap();
//! let loss = misclustering_loss(&draw.truth, &out.labels).unwrap();
//! assert!(loss < 0.5);
//! ```

pub mod genmodel;
pub mod graph;
pub mod kmedian;
pub mod labels;
pub mod pipeline;
pub mod provable;
pub mod refine;
pub mod rng;
pub mod spectral;
pub mod theory;

pub use graph::{AdjacencyMatrix, DegreeStats};
pub use labels::LabelVector;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node id {id} out of range for n = {n} (line {line})")]
    NodeOutOfRange { id: usize, n: usize, line: usize },

    #[error("index {index} out of bounds for size {size}")]
    IndexOutOfBounds { index: usize, size: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("eigensolver failed to converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("label {label} out of range 0..={k}")]
    LabelOutOfRange { label: u32, k: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
