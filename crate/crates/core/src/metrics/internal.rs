//! Internal validity indices. Noise points (`-1`) are dropped first.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::assignment::NOISE;
use crate::distance::{row, squared_euclidean, standard, Metric};
use crate::error::{Error, Result};

/// Non-noise rows and their labels remapped to `0..k`.
struct Clustered {
    x: Array2<f64>,
    labels: Vec<usize>,
    k: usize,
}

fn clustered(x: ArrayView2<'_, f64>, labels: &[i32]) -> Result<Clustered> {
    if x.nrows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: labels.len() });
    }
    let keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != NOISE).collect();
    let mut ids: Vec<i32> = keep.iter().map(|&i| labels[i]).collect();
    ids.sort_unstable();
    ids.dedup();
    let remapped = keep.iter().map(|&i| ids.binary_search(&labels[i]).expect("present")).collect();
    let xs = Array2::from_shape_fn((keep.len(), x.ncols()), |(r, c)| x[[keep[r], c]]);
    Ok(Clustered { x: xs, labels: remapped, k: ids.len() })
}

fn require_two(metric: &'static str, c: &Clustered) -> Result<()> {
    if c.k < 2 {
        return Err(Error::Undefined { metric, reason: format!("needs at least 2 clusters, got {}", c.k) });
    }
    Ok(())
}

fn centroids(c: &Clustered) -> (Array2<f64>, Vec<usize>) {
    let mut sums = Array2::<f64>::zeros((c.k, c.x.ncols()));
    let mut counts = vec![0usize; c.k];
    for (i, &l) in c.labels.iter().enumerate() {
        counts[l] += 1;
        let mut r = sums.row_mut(l);
        r += &c.x.row(i);
    }
    for (l, &n) in counts.iter().enumerate() {
        sums.row_mut(l).mapv_inplace(|v| v / n as f64);
    }
    (sums, counts)
}

/// Mean silhouette over non-noise points; singleton-cluster points score 0.
pub fn silhouette(x: ArrayView2<'_, f64>, labels: &[i32], metric: Metric) -> Result<f64> {
    let c = clustered(x, labels)?;
    require_two("silhouette", &c)?;
    let xs = standard(c.x.view());
    let xv = xs.view();
    let n = c.labels.len();
    let mut counts = vec![0usize; c.k];
    c.labels.iter().for_each(|&l| counts[l] += 1);
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = c.labels[i];
            if counts[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; c.k];
            let xi = row(&xv, i);
            for j in 0..n {
                if j != i {
                    sums[c.labels[j]] += metric.distance(xi, row(&xv, j));
                }
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..c.k)
                .filter(|&l| l != own)
                .map(|l| sums[l] / counts[l] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total / n as f64)
}

/// Mean over clusters of the worst `(s_i + s_j) / d(c_i, c_j)` ratio, with
/// `s` the mean euclidean distance to the centroid.
pub fn davies_bouldin(x: ArrayView2<'_, f64>, labels: &[i32]) -> Result<f64> {
    let c = clustered(x, labels)?;
    require_two("davies_bouldin", &c)?;
    let (cent, counts) = centroids(&c);
    let mut scatter = vec![0.0; c.k];
    for (i, &l) in c.labels.iter().enumerate() {
        scatter[l] += (&c.x.row(i) - &cent.row(l)).mapv(|v| v * v).sum().sqrt();
    }
    for l in 0..c.k {
        scatter[l] /= counts[l] as f64;
    }
    let mut total = 0.0;
    for i in 0..c.k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..c.k {
            if i == j {
                continue;
            }
            let d = (&cent.row(i) - &cent.row(j)).mapv(|v| v * v).sum().sqrt();
            if d == 0.0 {
                return Err(Error::Undefined {
                    metric: "davies_bouldin",
                    reason: format!("clusters {i} and {j} share a centroid"),
                });
            }
            worst = worst.max((scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    Ok(total / c.k as f64)
}

/// `(B / (k - 1)) / (W / (n - k))`; `+inf` when every cluster has zero spread.
pub fn calinski_harabasz(x: ArrayView2<'_, f64>, labels: &[i32]) -> Result<f64> {
    let c = clustered(x, labels)?;
    require_two("calinski_harabasz", &c)?;
    let n = c.labels.len();
    if n == c.k {
        return Err(Error::Undefined { metric: "calinski_harabasz", reason: "every cluster is a singleton".into() });
    }
    let (cent, counts) = centroids(&c);
    let mean: Array1<f64> = c.x.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let between: f64 = (0..c.k)
        .map(|l| counts[l] as f64 * (&cent.row(l) - &mean).mapv(|v| v * v).sum())
        .sum();
    let cv = cent.view();
    let xv = c.x.view();
    let within: f64 = c
        .labels
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_euclidean(row(&xv, i), row(&cv, l)))
        .sum();
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (c.k - 1) as f64) / (within / (n - c.k) as f64))
}
