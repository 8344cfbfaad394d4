//! Partitioning clusterers: k-means and agglomerative hierarchical clustering.

pub mod agglomerative;
pub mod kmeans;

pub use agglomerative::{agglomerative, linkage_tree, AgglomerativeParams, AgglomerativeResult, Dendrogram, Linkage, MergeStep};
pub use kmeans::{kmeans, KmeansInit, KmeansParams, KmeansResult};
