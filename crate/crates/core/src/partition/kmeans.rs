//! Lloyd's k-means with k-means++ or random seeding and best-of-n restarts.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::ClusterAssignment;
use crate::distance::{row, squared_euclidean, standard};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KmeansInit {
    #[default]
    #[serde(rename = "k-means++")]
    KmeansPlusPlus,
    #[serde(rename = "random")]
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansParams {
    pub n_clusters: usize,
    pub init: KmeansInit,
    pub max_iter: usize,
    pub n_init: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams { n_clusters: 8, init: KmeansInit::KmeansPlusPlus, max_iter: 300, n_init: 10, tol: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub assignment: ClusterAssignment,
    pub centers: Array2<f64>,
    pub inertia: f64,
    pub n_iter: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
    pub restart: usize,
}

fn nearest(point: &[f64], centers: &ArrayView2<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.nrows() {
        let d = squared_euclidean(point, row(centers, c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub(crate) fn kmeans_plus_plus(x: &ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = x.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| squared_euclidean(row(x, i), row(x, chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc >= u && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            // rounding can leave `pick` on a zero-weight tail point
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).expect("total > 0");
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_euclidean(row(x, i), row(x, next)));
        }
    }
    chosen
}

struct Restart {
    labels: Vec<usize>,
    centers: Array2<f64>,
    inertia: f64,
    n_iter: usize,
    history: Vec<f64>,
}

fn assign(x: &ArrayView2<'_, f64>, centers: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let cv = centers.view();
    (0..x.nrows()).map(|i| nearest(row(x, i), &cv)).unzip()
}

fn lloyd(x: &ArrayView2<'_, f64>, p: &KmeansParams, seed: u64) -> Restart {
    let (n, dim) = x.dim();
    let k = p.n_clusters;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = match p.init {
        KmeansInit::KmeansPlusPlus => kmeans_plus_plus(x, k, &mut rng),
        KmeansInit::Random => rand::seq::index::sample(&mut rng, n, k).into_vec(),
    };
    let mut centers = Array2::from_shape_fn((k, dim), |(c, j)| x[[init[c], j]]);
    let mut history = Vec::new();
    let mut n_iter = 0;
    for _ in 0..p.max_iter {
        n_iter += 1;
        let (mut labels, mut d2) = assign(x, &centers);
        history.push(d2.iter().sum());

        // an empty cluster takes the point farthest from its own center
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            for i in 0..n {
                if counts[labels[i]] > 1 && far.is_none_or(|f: usize| d2[i] > d2[f]) {
                    far = Some(i);
                }
            }
            if let Some(i) = far {
                counts[labels[i]] -= 1;
                labels[i] = c;
                counts[c] = 1;
                d2[i] = 0.0;
            }
        }

        let mut next = Array2::<f64>::zeros((k, dim));
        for i in 0..n {
            for j in 0..dim {
                next[[labels[i], j]] += x[[i, j]];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                next.row_mut(c).mapv_inplace(|v| v / counts[c] as f64);
            } else {
                next.row_mut(c).assign(&centers.row(c));
            }
        }
        let shift: f64 = (&next - &centers).iter().map(|v| v * v).sum();
        centers = next;
        if shift < p.tol {
            break;
        }
    }
    let (labels, d2) = assign(x, &centers);
    Restart { labels, centers, inertia: d2.iter().sum(), n_iter, history }
}

pub fn kmeans(x: ArrayView2<'_, f64>, p: &KmeansParams) -> Result<KmeansResult> {
    let n = x.nrows();
    if p.n_clusters == 0 || p.n_clusters > n {
        return Err(Error::invalid("n_clusters", format!("must be in 1..={n}, got {}", p.n_clusters)));
    }
    if p.n_init == 0 || p.max_iter == 0 {
        return Err(Error::invalid("kmeans", "n_init and max_iter must be positive"));
    }
    if !(p.tol.is_finite() && p.tol >= 0.0) {
        return Err(Error::invalid("tol", "must be finite and >= 0"));
    }
    let x = standard(x);
    let xv = x.view();
    let runs: Vec<Restart> = (0..p.n_init)
        .into_par_iter()
        .map(|r| lloyd(&xv, p, p.seed.wrapping_add(r as u64)))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.inertia < a.1.inertia { b } else { a })
        .expect("n_init > 0");
    let raw: Vec<i64> = best.labels.iter().map(|&l| l as i64).collect();
    let assignment = ClusterAssignment::from_raw(&raw);
    // keep centers aligned with the renumbered labels
    let mut order = vec![usize::MAX; p.n_clusters];
    for (&old, &new) in best.labels.iter().zip(&assignment.labels) {
        order[new as usize] = old;
    }
    order.truncate(assignment.n_clusters);
    let centers = Array2::from_shape_fn((order.len(), x.ncols()), |(c, j)| best.centers[[order[c], j]]);
    Ok(KmeansResult {
        assignment,
        centers,
        inertia: best.inertia,
        n_iter: best.n_iter,
        inertia_history: best.history,
        restart,
    })
}
