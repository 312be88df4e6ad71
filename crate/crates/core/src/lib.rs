//! Geometric feature engineering for time-series classification.
//!
//! Three pipelines turn a (possibly downsampled) chunk into CNN input:
//!
//! - **raw**: the z-scored amplitudes, one channel;
//! - **betti**: β₀, β₁, β₂ of the Vietoris–Rips filtration of the Takens
//!   embedding, sampled on an ε-grid;
//! - **spectra**: bucketed normalized-Laplacian eigenvalue counts μ_j(ε) of
//!   the ε-neighbor graphs of the same embedding.
//!
//! The [`harness`] module runs the full design matrix (chunk length ×
//! downsampling method × resolution × pipeline) under k-fold cross-validation.

pub mod cnn;
pub mod config;
pub mod downsample;
pub mod eigen;
pub mod embedding;
pub mod error;
pub mod features;
pub mod harness;
pub mod homology;
pub mod ingestion;
pub mod neighbor_graph;
pub mod spectra;
pub mod synthetic;

pub use error::{Error, Result};
