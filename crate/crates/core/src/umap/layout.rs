//! Stochastic gradient descent on the fuzzy cross-entropy with negative sampling.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fuzzy::FuzzyGraph;

const GRAD_CLIP: f64 = 4.0;
const REPULSION_EPS: f64 = 0.001;
const Q_EPS: f64 = 1e-12;
const EVAL_NEGATIVES_PER_POINT: usize = 5;
const EVAL_MAX_NEGATIVES: usize = 50_000;

#[derive(Debug, Clone, Copy)]
pub struct SgdParams {
    pub a: f64,
    pub b: f64,
    pub n_epochs: usize,
    pub learning_rate: f64,
    pub negative_sample_rate: usize,
    pub repulsion_strength: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SgdOutcome {
    /// `(epoch, H)` with epoch 0 the initial layout.
    pub objective: Vec<(usize, f64)>,
    pub skipped_steps: u64,
    pub total_steps: u64,
}

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

#[inline]
fn q_of(dist_sq: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * dist_sq.powf(b))
}

/// Fixed pairs on which the objective is tracked: every graph edge plus a
/// seeded sample of non-edges scaled up to the full non-edge count.
pub struct EvalSet {
    edges: Vec<(usize, usize, f64)>,
    negatives: Vec<(usize, usize)>,
    negative_scale: f64,
}

impl EvalSet {
    pub fn new(graph: &FuzzyGraph, seed: u64) -> EvalSet {
        let n = graph.n_points();
        let edges = graph.edges();
        let total_pairs = n * (n - 1) / 2;
        let non_edges = total_pairs - edges.len();
        let mut negatives = Vec::new();
        if non_edges > 0 {
            let target = (EVAL_NEGATIVES_PER_POINT * n).min(EVAL_MAX_NEGATIVES).min(non_edges);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e7a1);
            let mut attempts = 0usize;
            while negatives.len() < target && attempts < 50 * target {
                attempts += 1;
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i == j || graph.weight(i, j) > 0.0 {
                    continue;
                }
                negatives.push((i.min(j), i.max(j)));
            }
        }
        let negative_scale = if negatives.is_empty() { 0.0 } else { non_edges as f64 / negatives.len() as f64 };
        EvalSet { edges, negatives, negative_scale }
    }

    /// Sampled estimate of `sum_{i<j} p ln(p/q) + (1-p) ln((1-p)/(1-q))`.
    pub fn objective(&self, y: &[f64], dim: usize, a: f64, b: f64) -> f64 {
        let q = |i: usize, j: usize| {
            let d: f64 = (0..dim).map(|c| (y[i * dim + c] - y[j * dim + c]).powi(2)).sum();
            q_of(d, a, b).clamp(Q_EPS, 1.0 - Q_EPS)
        };
        let xlogx = |p: f64, q: f64| if p > 0.0 { p * (p / q).ln() } else { 0.0 };
        let on_edges: f64 = self
            .edges
            .iter()
            .map(|&(i, j, p)| {
                let qq = q(i, j);
                xlogx(p, qq) + xlogx(1.0 - p, 1.0 - qq)
            })
            .sum();
        let off_edges: f64 = self.negatives.iter().map(|&(i, j)| -(1.0 - q(i, j)).ln()).sum();
        on_edges + self.negative_scale * off_edges
    }
}

struct Schedule {
    head: Vec<usize>,
    tail: Vec<usize>,
    epochs_per_sample: Vec<f64>,
    next_sample: Vec<f64>,
    epochs_per_negative: Vec<f64>,
    next_negative: Vec<f64>,
}

impl Schedule {
    fn new(graph: &FuzzyGraph, n_epochs: usize, negative_rate: usize) -> Schedule {
        let w_max = graph.adjacency.iter().flatten().map(|e| e.1).fold(0.0, f64::max);
        let floor = w_max / n_epochs as f64;
        let mut head = Vec::new();
        let mut tail = Vec::new();
        let mut eps = Vec::new();
        for (i, nb) in graph.adjacency.iter().enumerate() {
            for &(j, w) in nb {
                if w >= floor && w > 0.0 {
                    head.push(i);
                    tail.push(j);
                    eps.push(w_max / w);
                }
            }
        }
        let epn: Vec<f64> = eps.iter().map(|e| e / negative_rate as f64).collect();
        Schedule {
            head,
            tail,
            next_sample: eps.clone(),
            epochs_per_sample: eps,
            next_negative: epn.clone(),
            epochs_per_negative: epn,
        }
    }
}

fn record_epochs(n_epochs: usize) -> impl Fn(usize) -> bool {
    let every = (n_epochs / 10).max(1);
    move |e| e % every == 0 || e == n_epochs
}

/// Single-threaded optimisation; bit-reproducible for a given `rng` state.
pub fn optimize(
    y: &mut Array2<f64>,
    graph: &FuzzyGraph,
    p: &SgdParams,
    eval: &EvalSet,
    rng: &mut ChaCha8Rng,
) -> SgdOutcome {
    let (n, dim) = y.dim();
    let (a, b) = (p.a, p.b);
    let coords = y.as_slice_mut().expect("standard layout");
    let mut s = Schedule::new(graph, p.n_epochs, p.negative_sample_rate);
    let mut out = SgdOutcome::default();
    let record = record_epochs(p.n_epochs);
    out.objective.push((0, eval.objective(coords, dim, a, b)));
    let mut delta = vec![0.0; dim];

    for epoch in 1..=p.n_epochs {
        let e = epoch as f64;
        let alpha = p.learning_rate * (1.0 - (epoch - 1) as f64 / p.n_epochs as f64);
        for k in 0..s.head.len() {
            if s.next_sample[k] > e {
                continue;
            }
            let (i, j) = (s.head[k], s.tail[k]);
            let d2: f64 = (0..dim).map(|c| (coords[i * dim + c] - coords[j * dim + c]).powi(2)).sum();
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            out.total_steps += 1;
            if coeff.is_finite() {
                for c in 0..dim {
                    let g = clip(coeff * (coords[i * dim + c] - coords[j * dim + c])) * alpha;
                    coords[i * dim + c] += g;
                    coords[j * dim + c] -= g;
                }
            } else {
                out.skipped_steps += 1;
            }
            s.next_sample[k] += s.epochs_per_sample[k];

            let n_neg = ((e - s.next_negative[k]) / s.epochs_per_negative[k]).max(0.0) as usize;
            for _ in 0..n_neg {
                let t = rng.random_range(0..n);
                if t == i {
                    continue;
                }
                let d2: f64 = (0..dim).map(|c| (coords[i * dim + c] - coords[t * dim + c]).powi(2)).sum();
                let coeff = if d2 > 0.0 {
                    2.0 * p.repulsion_strength * b / ((REPULSION_EPS + d2) * (a * d2.powf(b) + 1.0))
                } else {
                    0.0
                };
                out.total_steps += 1;
                if !coeff.is_finite() {
                    out.skipped_steps += 1;
                    continue;
                }
                if coeff > 0.0 {
                    for c in 0..dim {
                        delta[c] = clip(coeff * (coords[i * dim + c] - coords[t * dim + c])) * alpha;
                    }
                    for c in 0..dim {
                        coords[i * dim + c] += delta[c];
                    }
                }
            }
            s.next_negative[k] += n_neg as f64 * s.epochs_per_negative[k];
        }
        if record(epoch) {
            out.objective.push((epoch, eval.objective(coords, dim, a, b)));
        }
    }
    out
}

/// Lock-free parallel variant: edges are split into chunks processed
/// concurrently against shared coordinates. Races between chunks make the
/// result depend on thread scheduling.
pub fn optimize_parallel(
    y: &mut Array2<f64>,
    graph: &FuzzyGraph,
    p: &SgdParams,
    eval: &EvalSet,
    seed: u64,
) -> SgdOutcome {
    let (n, dim) = y.dim();
    let (a, b) = (p.a, p.b);
    let shared: Vec<AtomicU64> = y.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
    let get = |k: usize| f64::from_bits(shared[k].load(Ordering::Relaxed));
    let add = |k: usize, v: f64| shared[k].store((get(k) + v).to_bits(), Ordering::Relaxed);
    let snapshot = |sh: &[AtomicU64]| -> Vec<f64> { sh.iter().map(|v| f64::from_bits(v.load(Ordering::Relaxed))).collect() };

    let s = Schedule::new(graph, p.n_epochs, p.negative_sample_rate);
    let n_edges = s.head.len();
    let chunk = n_edges.div_ceil(rayon::current_num_threads().max(1) * 4).max(1);
    let mut next_sample = s.next_sample.clone();
    let mut next_negative = s.next_negative.clone();
    let mut out = SgdOutcome::default();
    let record = record_epochs(p.n_epochs);
    out.objective.push((0, eval.objective(&snapshot(&shared), dim, a, b)));

    for epoch in 1..=p.n_epochs {
        let e = epoch as f64;
        let alpha = p.learning_rate * (1.0 - (epoch - 1) as f64 / p.n_epochs as f64);
        let counts: Vec<(u64, u64)> = next_sample
            .par_chunks_mut(chunk)
            .zip(next_negative.par_chunks_mut(chunk))
            .enumerate()
            .map(|(ci, (ns, nn))| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((epoch as u64) << 32) ^ ci as u64);
                let (mut total, mut skipped) = (0u64, 0u64);
                for (off, (ns, nn)) in ns.iter_mut().zip(nn.iter_mut()).enumerate() {
                    let k = ci * chunk + off;
                    if *ns > e {
                        continue;
                    }
                    let (i, j) = (s.head[k], s.tail[k]);
                    let d2: f64 = (0..dim).map(|c| (get(i * dim + c) - get(j * dim + c)).powi(2)).sum();
                    let coeff = if d2 > 0.0 {
                        -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
                    } else {
                        0.0
                    };
                    total += 1;
                    if coeff.is_finite() {
                        for c in 0..dim {
                            let g = clip(coeff * (get(i * dim + c) - get(j * dim + c))) * alpha;
                            add(i * dim + c, g);
                            add(j * dim + c, -g);
                        }
                    } else {
                        skipped += 1;
                    }
                    *ns += s.epochs_per_sample[k];
                    let n_neg = ((e - *nn) / s.epochs_per_negative[k]).max(0.0) as usize;
                    for _ in 0..n_neg {
                        let t = rng.random_range(0..n);
                        if t == i {
                            continue;
                        }
                        let d2: f64 = (0..dim).map(|c| (get(i * dim + c) - get(t * dim + c)).powi(2)).sum();
                        let coeff = if d2 > 0.0 {
                            2.0 * p.repulsion_strength * b / ((REPULSION_EPS + d2) * (a * d2.powf(b) + 1.0))
                        } else {
                            0.0
                        };
                        total += 1;
                        if !coeff.is_finite() {
                            skipped += 1;
                            continue;
                        }
                        if coeff > 0.0 {
                            for c in 0..dim {
                                let g = clip(coeff * (get(i * dim + c) - get(t * dim + c))) * alpha;
                                add(i * dim + c, g);
                            }
                        }
                    }
                    *nn += n_neg as f64 * s.epochs_per_negative[k];
                }
                (total, skipped)
            })
            .collect();
        for (t, sk) in counts {
            out.total_steps += t;
            out.skipped_steps += sk;
        }
        if record(epoch) {
            out.objective.push((epoch, eval.objective(&snapshot(&shared), dim, a, b)));
        }
    }
    for (dst, src) in y.iter_mut().zip(&shared) {
        *dst = f64::from_bits(src.load(Ordering::Relaxed));
    }
    out
}
