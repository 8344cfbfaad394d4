//! UMAP manifold embedding.
//!
//! Pipeline: k-NN graph, fuzzy membership weights, spectral initialisation,
//! then SGD on the fuzzy cross-entropy between the high-dimensional weights
//! `p_ij` and `q_ij = 1 / (1 + a |y_i - y_j|^(2b))`.

mod curve;
pub mod fuzzy;
pub mod knn;
mod layout;
mod spectral;

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::distance::Metric;
use crate::error::{Error, Result};

pub use curve::find_ab_params;
pub use fuzzy::{fuzzy_weights, FuzzyGraph};
pub use knn::{build_knn_graph, KnnGraph};

const INIT_JITTER: f64 = 1e-4;
const INIT_EXTENT: f64 = 10.0;
/// Runs with more than this fraction of skipped SGD steps are flagged.
pub const SKIP_FLAG_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UmapParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_components: usize,
    pub metric: Metric,
    /// `None` picks 200 epochs for up to 10 000 points and 500 above.
    pub n_epochs: Option<usize>,
    pub learning_rate: f64,
    pub negative_sample_rate: usize,
    pub spread: f64,
    pub seed: u64,
    /// Lock-free parallel SGD; faster but not bit-reproducible.
    pub parallel: bool,
}

impl Default for UmapParams {
    fn default() -> Self {
        UmapParams {
            n_neighbors: 15,
            min_dist: 0.1,
            n_components: 2,
            metric: Metric::Euclidean,
            n_epochs: None,
            learning_rate: 1.0,
            negative_sample_rate: 5,
            spread: 1.0,
            seed: 0,
            parallel: false,
        }
    }
}

impl UmapParams {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.n_neighbors < 2 || self.n_neighbors >= n_samples {
            return Err(Error::invalid(
                "n_neighbors",
                format!("must be at least 2 and below the sample count {n_samples}, got {}", self.n_neighbors),
            ));
        }
        if !(self.min_dist.is_finite() && self.min_dist >= 0.0) {
            return Err(Error::invalid("min_dist", format!("must be finite and >= 0, got {}", self.min_dist)));
        }
        if self.n_components == 0 {
            return Err(Error::invalid("n_components", "must be at least 1"));
        }
        if self.n_epochs == Some(0) {
            return Err(Error::invalid("n_epochs", "must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", "must be finite and positive"));
        }
        if self.negative_sample_rate == 0 {
            return Err(Error::invalid("negative_sample_rate", "must be positive"));
        }
        if !(self.spread.is_finite() && self.spread > 0.0) {
            return Err(Error::invalid("spread", "must be finite and positive"));
        }
        Ok(())
    }

    pub fn epochs_for(&self, n_samples: usize) -> usize {
        self.n_epochs.unwrap_or(if n_samples <= 10_000 { 200 } else { 500 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Initialization {
    Spectral,
    Random,
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub coordinates: Array2<f64>,
    /// Sampled cross-entropy per recorded epoch; epoch 0 is the initial layout.
    pub objective: Vec<(usize, f64)>,
    pub skipped_steps: u64,
    pub total_steps: u64,
    /// Set when the skipped fraction exceeds [`SKIP_FLAG_FRACTION`].
    pub flagged: bool,
    pub initialization: Initialization,
    pub a: f64,
    pub b: f64,
}

impl Embedding {
    pub fn initial_objective(&self) -> f64 {
        self.objective.first().map_or(f64::NAN, |o| o.1)
    }

    pub fn final_objective(&self) -> f64 {
        self.objective.last().map_or(f64::NAN, |o| o.1)
    }
}

fn initial_layout(graph: &FuzzyGraph, dim: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Initialization) {
    let n = graph.n_points();
    let (mut y, how) = match spectral::spectral_layout(graph, dim, rng) {
        Some(y) => (y, Initialization::Spectral),
        None => (
            Array2::from_shape_fn((n, dim), |_| rng.random_range(-INIT_EXTENT..INIT_EXTENT)),
            Initialization::Random,
        ),
    };
    let max_abs = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs > 0.0 {
        y.mapv_inplace(|v| v * INIT_EXTENT / max_abs);
    }
    let jitter = Normal::new(0.0, INIT_JITTER).expect("valid std");
    y.mapv_inplace(|v| v + rng.sample(jitter));
    for mut col in y.columns_mut() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            col.mapv_inplace(|v| INIT_EXTENT * (v - lo) / (hi - lo));
        }
    }
    (y, how)
}

/// Initialises and optimises an embedding of `graph`.
pub fn optimize_embedding(graph: &FuzzyGraph, params: &UmapParams) -> Result<Embedding> {
    let n = graph.n_points();
    if n < 2 {
        return Err(Error::invalid("embedding input", "at least 2 points are required"));
    }
    let (a, b) = find_ab_params(params.spread, params.min_dist);
    let n_epochs = params.epochs_for(n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (mut y, initialization) = initial_layout(graph, params.n_components, &mut rng);
    let eval = layout::EvalSet::new(graph, params.seed);
    let sgd = layout::SgdParams {
        a,
        b,
        n_epochs,
        learning_rate: params.learning_rate,
        negative_sample_rate: params.negative_sample_rate,
        repulsion_strength: 1.0,
    };
    let out = if params.parallel {
        layout::optimize_parallel(&mut y, graph, &sgd, &eval, params.seed)
    } else {
        layout::optimize(&mut y, graph, &sgd, &eval, &mut rng)
    };
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Stage { stage: "umap", cause: "embedding diverged to non-finite coordinates".into() });
    }
    let flagged = out.total_steps > 0 && out.skipped_steps as f64 > SKIP_FLAG_FRACTION * out.total_steps as f64;
    Ok(Embedding {
        coordinates: y,
        objective: out.objective,
        skipped_steps: out.skipped_steps,
        total_steps: out.total_steps,
        flagged,
        initialization,
        a,
        b,
    })
}

pub fn fit_umap(x: ArrayView2<'_, f64>, params: &UmapParams) -> Result<Embedding> {
    params.validate(x.nrows())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("umap input", "contains non-finite values"));
    }
    let knn = build_knn_graph(x, params.n_neighbors, params.metric, params.seed)?;
    let graph = fuzzy_weights(&knn);
    optimize_embedding(&graph, params)
}

/// Writes `section_id,c0..c{m-1}` rows.
pub fn write_embedding_csv<W: Write>(out: W, section_ids: &[String], coords: ArrayView2<'_, f64>) -> Result<()> {
    if section_ids.len() != coords.nrows() {
        return Err(Error::DimensionMismatch { expected: coords.nrows(), got: section_ids.len() });
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["section_id".to_string()];
    header.extend((0..coords.ncols()).map(|c| format!("c{c}")));
    w.write_record(&header)?;
    for (id, row) in section_ids.iter().zip(coords.rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("embedding csv", e))?;
    Ok(())
}
