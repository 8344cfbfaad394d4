//! HDBSCAN: density-based hierarchical clustering with noise.
//!
//! Core distances and the mutual-reachability MST are computed from exact
//! all-pairs distances (dense Prim, `O(N^2)` time and `O(N)` memory). The
//! MST's single-linkage hierarchy is condensed at `min_cluster_size`, flat
//! clusters are chosen by Excess-of-Mass, and `cluster_selection_epsilon`
//! merges clusters born below that distance into their parents.

pub mod tree;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::ClusterAssignment;
use crate::distance::{row, standard, Metric};
use crate::error::{Error, Result};

pub use tree::{CondensedRow, CondensedTree, ClusterNode, Edge};

const PARALLEL_PRIM_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size`.
    pub min_samples: Option<usize>,
    pub cluster_selection_epsilon: f64,
    pub metric: Metric,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        HdbscanParams { min_cluster_size: 5, min_samples: None, cluster_selection_epsilon: 0.0, metric: Metric::Euclidean }
    }
}

impl HdbscanParams {
    pub fn effective_min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.min_cluster_size)
    }

    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.min_cluster_size < 2 {
            return Err(Error::invalid("min_cluster_size", "must be at least 2"));
        }
        let ms = self.effective_min_samples();
        if ms == 0 || ms > n_samples {
            return Err(Error::invalid("min_samples", format!("must be in 1..={n_samples}, got {ms}")));
        }
        if !(self.cluster_selection_epsilon.is_finite() && self.cluster_selection_epsilon >= 0.0) {
            return Err(Error::invalid("cluster_selection_epsilon", "must be finite and >= 0"));
        }
        if n_samples < self.min_cluster_size {
            return Err(Error::invalid(
                "min_cluster_size",
                format!("{} exceeds the sample count {n_samples}", self.min_cluster_size),
            ));
        }
        Ok(())
    }
}

/// Core distances plus the data needed to evaluate mutual reachability.
pub struct MutualReachability {
    x: Array2<f64>,
    metric: Metric,
    pub core: Vec<f64>,
}

impl MutualReachability {
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let xv = self.x.view();
        let d = self.metric.distance(row(&xv, a), row(&xv, b));
        d.max(self.core[a]).max(self.core[b])
    }

    pub fn len(&self) -> usize {
        self.core.len()
    }

    pub fn is_empty(&self) -> bool {
        self.core.is_empty()
    }

    pub fn to_matrix(&self) -> Array2<f64> {
        let n = self.len();
        Array2::from_shape_fn((n, n), |(a, b)| self.distance(a, b))
    }
}

/// Core distance = distance to the `min_samples`-th nearest other point
/// (capped at `n - 1`).
pub fn mutual_reachability(x: ArrayView2<'_, f64>, min_samples: usize, metric: Metric) -> Result<MutualReachability> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::Empty("hdbscan input"));
    }
    if min_samples == 0 {
        return Err(Error::invalid("min_samples", "must be at least 1"));
    }
    let x = standard(x);
    let k = min_samples.min(n - 1);
    let core = {
        let xv = x.view();
        (0..n)
            .into_par_iter()
            .map(|i| {
                if k == 0 {
                    return 0.0;
                }
                let mut d: Vec<f64> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| metric.distance(row(&xv, i), row(&xv, j)))
                    .collect();
                let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
                *kth
            })
            .collect()
    };
    Ok(MutualReachability { x, metric, core })
}

/// Dense Prim's algorithm on the mutual-reachability graph; ties pick the
/// lower point index.
pub fn minimum_spanning_tree(mr: &MutualReachability) -> Vec<Edge> {
    let n = mr.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let update = |(j, (b, f)): (usize, (&mut f64, &mut usize))| {
            if !in_tree[j] {
                let d = mr.distance(cur, j);
                if d < *b {
                    *b = d;
                    *f = cur;
                }
            }
        };
        if n > PARALLEL_PRIM_THRESHOLD {
            best.par_iter_mut().zip(from.par_iter_mut()).enumerate().for_each(update);
        } else {
            best.iter_mut().zip(from.iter_mut()).enumerate().for_each(update);
        }
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(Edge { a: from[next], b: next, weight: best[next] });
        cur = next;
    }
    edges
}

#[derive(Debug, Clone)]
pub struct HdbscanResult {
    pub assignment: ClusterAssignment,
    pub tree: CondensedTree,
    pub outlier: Vec<bool>,
    pub core_distances: Vec<f64>,
    pub mst: Vec<Edge>,
}

pub fn hdbscan_cluster(x: ArrayView2<'_, f64>, p: &HdbscanParams) -> Result<HdbscanResult> {
    let n = x.nrows();
    p.validate(n)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("hdbscan input", "contains non-finite values"));
    }
    let mr = mutual_reachability(x, p.effective_min_samples(), p.metric)?;
    let mst = minimum_spanning_tree(&mr);
    let linkage = tree::single_linkage(n, &mst);
    let mut tree = tree::condense(&linkage, n, p.min_cluster_size);
    tree.select_eom();
    tree.merge_epsilon(p.cluster_selection_epsilon);
    let assignment = tree.labels();
    let outlier = assignment.labels.iter().map(|&l| l < 0).collect();
    Ok(HdbscanResult { assignment, tree, outlier, core_distances: mr.core, mst })
}
