//! Local fuzzy membership weights on the k-NN graph.

use rayon::prelude::*;

use super::knn::KnnGraph;

const BISECTION_TOL: f64 = 1e-7;
const MAX_BISECTION_STEPS: usize = 200;
const MIN_SIGMA_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    /// Directed kernel weights `p(i -> j)` in k-NN order, before symmetrisation.
    pub directed: Vec<Vec<(usize, f64)>>,
    /// Symmetric weights `p_ij = p_ji`, sorted by neighbor index.
    pub adjacency: Vec<Vec<(usize, f64)>>,
    /// Distance to the nearest neighbor per point.
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FuzzyGraph {
    pub fn n_points(&self) -> usize {
        self.adjacency.len()
    }

    /// Unique undirected edges `(i, j, p_ij)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |(j, _)| *j > i).map(move |&(j, w)| (i, j, w)))
            .collect()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .binary_search_by(|(k, _)| k.cmp(&j))
            .map_or(0.0, |pos| self.adjacency[i][pos].1)
    }
}

/// Solves for `sigma` so that `sum_j exp(-max(0, d_j - rho) / sigma) = target`.
fn solve_sigma(dists: &[f64], rho: f64, target: f64) -> f64 {
    let membership = |sigma: f64| -> f64 {
        dists
            .iter()
            .map(|d| (-((d - rho).max(0.0)) / sigma).exp())
            .sum()
    };
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut mid = 1.0;
    for _ in 0..MAX_BISECTION_STEPS {
        let s = membership(mid);
        if (s - target).abs() < BISECTION_TOL {
            break;
        }
        if s > target {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { 0.5 * (lo + hi) };
        }
    }
    let mean_d = dists.iter().sum::<f64>() / dists.len() as f64;
    mid.max(MIN_SIGMA_SCALE * mean_d).max(f64::MIN_POSITIVE)
}

pub fn fuzzy_weights(knn: &KnnGraph) -> FuzzyGraph {
    let k = knn.k();
    let target = (k as f64).log2();
    let per_point: Vec<(f64, f64, Vec<(usize, f64)>)> = knn
        .indices
        .par_iter()
        .zip(&knn.distances)
        .map(|(idx, dists)| {
            let rho = dists[0];
            if dists.iter().all(|&d| d == 0.0) {
                return (rho, 0.0, idx.iter().map(|&j| (j, 1.0)).collect());
            }
            let sigma = solve_sigma(dists, rho, target);
            let w = idx
                .iter()
                .zip(dists)
                .map(|(&j, &d)| (j, (-((d - rho).max(0.0)) / sigma).exp()))
                .collect();
            (rho, sigma, w)
        })
        .collect();

    let n = knn.n_points();
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut directed = Vec::with_capacity(n);
    for (r, s, w) in per_point {
        rho.push(r);
        sigma.push(s);
        directed.push(w);
    }

    // probabilistic union of p(i->j) and p(j->i)
    let mut pairs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, list) in directed.iter().enumerate() {
        for &(j, w) in list {
            pairs[i].push((j, w));
            pairs[j].push((i, w));
        }
    }
    let adjacency = pairs
        .into_par_iter()
        .enumerate()
        .map(|(i, mut list)| {
            list.sort_by_key(|p| p.0);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(list.len());
            for (j, _) in list {
                if out.last().is_some_and(|(l, _)| *l == j) || j == i {
                    continue;
                }
                let a = directed_weight(&directed[i], j);
                let b = directed_weight(&directed[j], i);
                out.push((j, a + b - a * b));
            }
            out
        })
        .collect();
    FuzzyGraph { directed, adjacency, rho, sigma }
}

fn directed_weight(list: &[(usize, f64)], j: usize) -> f64 {
    list.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, w)| *w)
}
