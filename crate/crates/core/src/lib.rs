//! Clustering of Measure-While-Drilling (MWD) rock-mass signatures.
//!
//! The pipeline turns raw per-section drilling readings into statistical
//! feature vectors, scales them, optionally reduces them with PCA or UMAP,
//! clusters them (k-means, agglomerative or HDBSCAN), scores the result and
//! tunes the whole chain with a multi-objective Parzen-estimator search.

pub mod assignment;
pub mod characterize;
pub mod cli;
pub mod data_model;
pub mod distance;
pub mod error;
pub mod hdbscan;
pub mod metrics;
pub mod motpe;
pub mod partition;
pub mod pca;
pub mod runner;
pub mod scaling;
pub mod synth;
pub mod umap;

pub use error::{Error, Result};
