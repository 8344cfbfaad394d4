//! Greedy agglomerative clustering with Lance-Williams updates.
//!
//! Every pass merges the closest pair of active clusters; ties go to the
//! pair with the smaller `(i, j)`, where a cluster is identified by its
//! smallest member index. Each row caches its nearest active neighbor so a
//! merge only rescans rows that pointed at the merged pair.

use std::cmp::Ordering;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::ClusterAssignment;
use crate::distance::{row, standard, Metric};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Complete,
    Average,
    Single,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Ward, Linkage::Complete, Linkage::Average, Linkage::Single];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgglomerativeParams {
    pub n_clusters: usize,
    pub linkage: Linkage,
    pub metric: Metric,
}

impl Default for AgglomerativeParams {
    fn default() -> Self {
        AgglomerativeParams { n_clusters: 2, linkage: Linkage::Ward, metric: Metric::Euclidean }
    }
}

/// One merge, scipy style: leaves are `0..n`, merge `t` creates id `n + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<MergeStep>,
}

impl Dendrogram {
    /// Labels after applying the first `n - k` merges, numbered by first occurrence.
    pub fn cut(&self, k: usize) -> Result<ClusterAssignment> {
        let n = self.n_leaves;
        if k == 0 || k > n {
            return Err(Error::invalid("n_clusters", format!("must be in 1..={n}, got {k}")));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        // node id -> a representative leaf
        let mut rep: Vec<usize> = (0..n).collect();
        for m in self.merges.iter().take(n - k) {
            let (a, b) = (find(&mut parent, rep[m.left]), find(&mut parent, rep[m.right]));
            parent[a.max(b)] = a.min(b);
            rep.push(a.min(b));
        }
        let roots: Vec<i64> = (0..n).map(|i| find(&mut parent, i) as i64).collect();
        Ok(ClusterAssignment::from_raw(&roots))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgglomerativeResult {
    pub assignment: ClusterAssignment,
    pub dendrogram: Dendrogram,
}

#[inline]
fn cmp_pair(a: (f64, usize, usize), b: (f64, usize, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }
    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }
}

fn row_nearest(dm: &Condensed, active: &[bool], i: usize) -> Option<(f64, usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for j in 0..dm.n {
        if j == i || !active[j] {
            continue;
        }
        let cand = (dm.get(i, j), i.min(j), i.max(j));
        if best.is_none_or(|b| cmp_pair(cand, b) == Ordering::Less) {
            best = Some(cand);
        }
    }
    best
}

pub fn linkage_tree(x: ArrayView2<'_, f64>, linkage: Linkage, metric: Metric) -> Result<Dendrogram> {
    if linkage == Linkage::Ward && metric != Metric::Euclidean {
        return Err(Error::invalid("metric", format!("ward linkage requires euclidean, got {metric}")));
    }
    if metric == Metric::Chebyshev {
        return Err(Error::invalid("metric", "agglomerative clustering supports euclidean, manhattan or cosine"));
    }
    let n = x.nrows();
    if n == 0 {
        return Err(Error::Empty("agglomerative input"));
    }
    let xs = standard(x);
    let xv = xs.view();
    let d: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xv = &xv;
            (i + 1..n).map(move |j| metric.distance(row(xv, i), row(xv, j)))
        })
        .collect();
    let mut dm = Condensed { n, d };
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node_id: Vec<usize> = (0..n).collect();
    let mut nearest: Vec<Option<(f64, usize, usize)>> = (0..n).map(|i| row_nearest(&dm, &active, i)).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for t in 0..n.saturating_sub(1) {
        let (h, i, j) = nearest
            .iter()
            .enumerate()
            .filter(|(s, _)| active[*s])
            .filter_map(|(_, b)| *b)
            .min_by(|a, b| cmp_pair(*a, *b))
            .expect("at least two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let (dik, djk) = (dm.get(i, k), dm.get(j, k));
            let nk = size[k] as f64;
            let v = match linkage {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
                Linkage::Average => (ni * dik + nj * djk) / (ni + nj),
                Linkage::Ward => (((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * h * h) / (ni + nj + nk))
                    .max(0.0)
                    .sqrt(),
            };
            dm.set(i, k, v);
        }
        let (a, b) = (node_id[i].min(node_id[j]), node_id[i].max(node_id[j]));
        merges.push(MergeStep { left: a, right: b, height: h, size: size[i] + size[j] });
        active[j] = false;
        size[i] += size[j];
        node_id[i] = n + t;

        for k in 0..n {
            if !active[k] {
                continue;
            }
            let stale = k == i || nearest[k].is_some_and(|(_, p, q)| p == i || q == i || p == j || q == j);
            if stale {
                nearest[k] = row_nearest(&dm, &active, k);
            } else {
                let cand = (dm.get(i, k), i.min(k), i.max(k));
                if nearest[k].is_none_or(|b| cmp_pair(cand, b) == Ordering::Less) {
                    nearest[k] = Some(cand);
                }
            }
        }
    }
    Ok(Dendrogram { n_leaves: n, merges })
}

pub fn agglomerative(x: ArrayView2<'_, f64>, p: &AgglomerativeParams) -> Result<AgglomerativeResult> {
    let n = x.nrows();
    if p.n_clusters == 0 || p.n_clusters > n {
        return Err(Error::invalid("n_clusters", format!("must be in 1..={n}, got {}", p.n_clusters)));
    }
    let dendrogram = linkage_tree(x, p.linkage, p.metric)?;
    let assignment = dendrogram.cut(p.n_clusters)?;
    Ok(AgglomerativeResult { assignment, dendrogram })
}
