#![allow(dead_code)]

pub mod criteria;
pub mod oracles;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rockcluster::data_model::{FeatureSetId, FeatureTable, FeatureVector, LabelSet};
use rockcluster::runner::Dataset;

pub use oracles::Points;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_array(x: &Points) -> Array2<f64> {
    Array2::from_shape_fn((x.len(), x[0].len()), |(i, j)| x[i][j])
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `n` points in `d` dimensions around `k` random centers, with labels.
/// Every cluster gets at least two members; `noise` marks some rows `-1`.
pub fn labelled_instance(r: &mut ChaCha8Rng, n: usize, k: usize, d: usize, noise: bool) -> (Points, Vec<i32>) {
    assert!(n >= 2 * k);
    let mut labels: Vec<i32> = (0..n).map(|i| if i < 2 * k { (i % k) as i32 } else { r.random_range(0..k as i32) }).collect();
    labels.shuffle(r);
    if noise {
        let extra: Vec<usize> = (0..n).filter(|_| r.random_bool(0.1)).collect();
        for i in extra {
            let l = labels[i];
            if labels.iter().filter(|&&m| m == l).count() > 2 {
                labels[i] = -1;
            }
        }
    }
    let centers: Points = (0..k).map(|_| (0..d).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
    let spread = r.random_range(0.2..2.0);
    let g = Normal::new(0.0, spread).unwrap();
    let x = labels
        .iter()
        .map(|&l| {
            let c = if l >= 0 { l as usize } else { r.random_range(0..k) };
            (0..d).map(|j| centers[c][j] + g.sample(r)).collect()
        })
        .collect();
    (x, labels)
}

/// Isotropic Gaussian blobs; returns points and the blob index per point.
pub fn gaussian_blobs(r: &mut ChaCha8Rng, centers: &Points, per: usize, sigma: f64) -> (Points, Vec<usize>) {
    let g = Normal::new(0.0, sigma).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per {
            x.push(center.iter().map(|m| m + g.sample(r)).collect());
            y.push(c);
        }
    }
    (x, y)
}

/// A mwd_median dataset from raw rows, with optional `rock_type` labels.
pub fn dataset(rows: &Points, rock: Option<&[usize]>) -> Dataset {
    let fs = FeatureSetId::MwdMedian;
    let vectors: Vec<FeatureVector> = rows
        .iter()
        .enumerate()
        .map(|(i, v)| {
            assert_eq!(v.len(), fs.len());
            FeatureVector { section_id: format!("S{i:05}"), schema: fs, values: v.clone() }
        })
        .collect();
    let table = FeatureTable::from_vectors(&vectors).unwrap();
    let labels = rock
        .map(|r| vec![LabelSet { name: "rock_type".into(), values: r.iter().map(|c| Some(format!("R{c}"))).collect() }])
        .unwrap_or_default();
    Dataset::new(table, labels).unwrap()
}

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Every file below `root`, keyed by relative path.
pub fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
