//! k-nearest-neighbor graphs.
//!
//! Exact all-pairs search up to [`EXACT_LIMIT`] points; above that a
//! random-projection forest seeds the lists and neighbor-of-neighbor
//! refinement (NN-descent) improves them. Ties are broken by the smaller
//! point index everywhere.

use std::cmp::Ordering;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::{row, standard, Metric};
use crate::error::{Error, Result};

pub const EXACT_LIMIT: usize = 4096;

/// `indices[i]` / `distances[i]` hold the `k` nearest other points of `i`,
/// nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl KnnGraph {
    pub fn n_points(&self) -> usize {
        self.indices.len()
    }

    pub fn k(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }
}

#[inline]
fn cmp_candidate(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

pub fn build_knn_graph(x: ArrayView2<'_, f64>, k: usize, metric: Metric, seed: u64) -> Result<KnnGraph> {
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(Error::invalid("n_neighbors", format!("must be in 1..{n}, got {k}")));
    }
    if n <= EXACT_LIMIT {
        Ok(exact_knn(x, k, metric))
    } else {
        Ok(approximate_knn(x, k, metric, seed))
    }
}

pub fn exact_knn(x: ArrayView2<'_, f64>, k: usize, metric: Metric) -> KnnGraph {
    let x = standard(x);
    let xv = x.view();
    let n = xv.nrows();
    let lists: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = row(&xv, i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (metric.distance(a, row(&xv, j)), j))
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, cmp_candidate);
                cand.truncate(k);
            }
            cand.sort_by(cmp_candidate);
            cand
        })
        .collect();
    from_lists(lists)
}

fn from_lists(lists: Vec<Vec<(f64, usize)>>) -> KnnGraph {
    let (indices, distances) = lists
        .into_iter()
        .map(|l| (l.iter().map(|c| c.1).collect(), l.iter().map(|c| c.0).collect()))
        .unzip();
    KnnGraph { indices, distances }
}

/// Inserts `cand` into the sorted, bounded list; returns whether it changed.
fn push_bounded(list: &mut Vec<(f64, usize)>, cand: (f64, usize), k: usize) -> bool {
    if list.iter().any(|c| c.1 == cand.1) {
        return false;
    }
    if list.len() == k && cmp_candidate(&cand, &list[k - 1]) != Ordering::Less {
        return false;
    }
    let pos = list.partition_point(|c| cmp_candidate(c, &cand) == Ordering::Less);
    list.insert(pos, cand);
    list.truncate(k);
    true
}

struct RpTree {
    leaves: Vec<Vec<usize>>,
}

fn build_rp_tree(x: &ArrayView2<'_, f64>, leaf_size: usize, rng: &mut ChaCha8Rng) -> RpTree {
    let n = x.nrows();
    let mut leaves = Vec::new();
    let mut stack = vec![(0..n).collect::<Vec<usize>>()];
    while let Some(idx) = stack.pop() {
        if idx.len() <= leaf_size {
            leaves.push(idx);
            continue;
        }
        let a = idx[rng.random_range(0..idx.len())];
        let mut b = idx[rng.random_range(0..idx.len())];
        if a == b {
            b = idx[(idx.iter().position(|&p| p == a).unwrap() + 1) % idx.len()];
        }
        let (pa, pb) = (row(x, a), row(x, b));
        let normal: Vec<f64> = pa.iter().zip(pb).map(|(u, v)| u - v).collect();
        let offset: f64 = normal
            .iter()
            .zip(pa.iter().zip(pb))
            .map(|(nv, (u, v))| nv * 0.5 * (u + v))
            .sum();
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
        for &p in &idx {
            let side: f64 = normal.iter().zip(row(x, p)).map(|(nv, v)| nv * v).sum::<f64>() - offset;
            if side > 0.0 || (side == 0.0 && rng.random::<bool>()) {
                left.push(p);
            } else {
                right.push(p);
            }
        }
        if left.is_empty() || right.is_empty() {
            // degenerate hyperplane (duplicates): split at random
            let mut shuffled = idx.clone();
            shuffled.shuffle(rng);
            let half = shuffled.len() / 2;
            right = shuffled.split_off(half);
            left = shuffled;
        }
        stack.push(right);
        stack.push(left);
    }
    RpTree { leaves }
}

/// Random-projection forest initialisation followed by NN-descent.
pub fn approximate_knn(x: ArrayView2<'_, f64>, k: usize, metric: Metric, seed: u64) -> KnnGraph {
    let x = standard(x);
    let xv = x.view();
    let n = xv.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_trees = (5 + ((n as f64).sqrt() / 20.0).round() as usize).min(32);
    let leaf_size = (k + 1).max(30);

    let mut lists: Vec<Vec<(f64, usize)>> = vec![Vec::with_capacity(k + 1); n];
    for _ in 0..n_trees {
        let tree = build_rp_tree(&xv, leaf_size, &mut rng);
        let updates: Vec<Vec<(usize, (f64, usize))>> = tree
            .leaves
            .par_iter()
            .map(|leaf| {
                let mut out = Vec::with_capacity(leaf.len() * leaf.len());
                for &p in leaf {
                    for &q in leaf {
                        if p != q {
                            out.push((p, (metric.distance(row(&xv, p), row(&xv, q)), q)));
                        }
                    }
                }
                out
            })
            .collect();
        for (p, cand) in updates.into_iter().flatten() {
            push_bounded(&mut lists[p], cand, k);
        }
    }
    // points left short (tiny leaves) get random fill
    for (i, list) in lists.iter_mut().enumerate() {
        while list.len() < k {
            let j = rng.random_range(0..n);
            if j != i {
                push_bounded(list, (metric.distance(row(&xv, i), row(&xv, j)), j), k);
            }
        }
    }

    let max_candidates = k.min(30);
    for _ in 0..12 {
        // reverse neighbors, capped for cost
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, list) in lists.iter().enumerate() {
            for c in list.iter().take(max_candidates) {
                if reverse[c.1].len() < max_candidates {
                    reverse[c.1].push(i);
                }
            }
        }
        let snapshot = &lists;
        let reverse = &reverse;
        let next: Vec<(Vec<(f64, usize)>, bool)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut list = snapshot[i].clone();
                let mut changed = false;
                let near: Vec<usize> = snapshot[i]
                    .iter()
                    .take(max_candidates)
                    .map(|c| c.1)
                    .chain(reverse[i].iter().copied())
                    .collect();
                for &u in &near {
                    let second = snapshot[u]
                        .iter()
                        .take(max_candidates)
                        .map(|c| c.1)
                        .chain(reverse[u].iter().copied());
                    for v in second {
                        if v != i {
                            let d = metric.distance(row(&xv, i), row(&xv, v));
                            changed |= push_bounded(&mut list, (d, v), k);
                        }
                    }
                }
                (list, changed)
            })
            .collect();
        let n_changed = next.iter().filter(|(_, c)| *c).count();
        lists = next.into_iter().map(|(l, _)| l).collect();
        if (n_changed as f64) < 0.001 * n as f64 {
            break;
        }
    }
    from_lists(lists)
}
