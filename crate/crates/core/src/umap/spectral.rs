//! Spectral initialisation from the normalised graph Laplacian.
//!
//! The smallest non-trivial Laplacian eigenvectors are the largest
//! eigenvectors of `(I + D^-1/2 W D^-1/2) / 2` orthogonal to `sqrt(deg)`;
//! they are found by block subspace iteration with a final Rayleigh-Ritz step.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::fuzzy::FuzzyGraph;

const MAX_ITERS: usize = 400;
const EXTRA_VECTORS: usize = 4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Orthonormalises `block` in place against `fixed` and itself.
fn orthonormalize<R: Rng>(block: &mut [Vec<f64>], fixed: &[f64], rng: &mut R) {
    for c in 0..block.len() {
        for _attempt in 0..3 {
            for _pass in 0..2 {
                let p = dot(&block[c], fixed);
                block[c].iter_mut().zip(fixed).for_each(|(x, f)| *x -= p * f);
                for prev in 0..c {
                    let (head, tail) = block.split_at_mut(c);
                    let p = dot(&tail[0], &head[prev]);
                    tail[0].iter_mut().zip(&head[prev]).for_each(|(x, f)| *x -= p * f);
                }
            }
            if normalize(&mut block[c]) > 1e-10 {
                break;
            }
            block[c].iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        }
    }
}

fn apply(graph: &FuzzyGraph, inv_sqrt_deg: &[f64], v: &[f64]) -> Vec<f64> {
    graph
        .adjacency
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let s: f64 = nb.iter().map(|&(j, w)| w * inv_sqrt_deg[j] * v[j]).sum();
            0.5 * (v[i] + inv_sqrt_deg[i] * s)
        })
        .collect()
}

/// `n x dim` spectral coordinates, or `None` when the graph is too small or
/// the iteration produced non-finite values.
pub fn spectral_layout<R: Rng>(graph: &FuzzyGraph, dim: usize, rng: &mut R) -> Option<Array2<f64>> {
    let n = graph.n_points();
    if n <= dim + 1 {
        return None;
    }
    let deg: Vec<f64> = graph.adjacency.iter().map(|nb| nb.iter().map(|p| p.1).sum()).collect();
    let inv_sqrt_deg: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let mut trivial: Vec<f64> = deg.iter().map(|d| d.sqrt()).collect();
    if normalize(&mut trivial) == 0.0 {
        return None;
    }

    let width = (dim + EXTRA_VECTORS).min(n - 1);
    let mut block: Vec<Vec<f64>> = (0..width)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    orthonormalize(&mut block, &trivial, rng);

    let mut prev_ritz = vec![0.0; width];
    for it in 0..MAX_ITERS {
        let mut next: Vec<Vec<f64>> = block.iter().map(|v| apply(graph, &inv_sqrt_deg, v)).collect();
        if it % 10 == 9 {
            let ritz: Vec<f64> = block.iter().zip(&next).map(|(v, mv)| dot(v, mv)).collect();
            let settled = ritz.iter().zip(&prev_ritz).all(|(a, b)| (a - b).abs() < 1e-9);
            prev_ritz = ritz;
            if settled {
                block = next;
                orthonormalize(&mut block, &trivial, rng);
                break;
            }
        }
        orthonormalize(&mut next, &trivial, rng);
        block = next;
    }

    // Rayleigh-Ritz on the converged subspace
    let images: Vec<Vec<f64>> = block.iter().map(|v| apply(graph, &inv_sqrt_deg, v)).collect();
    let h = DMatrix::from_fn(width, width, |a, b| 0.5 * (dot(&block[a], &images[b]) + dot(&block[b], &images[a])));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut out = Array2::<f64>::zeros((n, dim));
    for (c, &k) in order.iter().take(dim).enumerate() {
        for (r, v) in block.iter().enumerate() {
            let coef = eig.eigenvectors[(r, k)];
            for i in 0..n {
                out[[i, c]] += coef * v[i];
            }
        }
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}
