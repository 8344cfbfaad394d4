//! Per-sample cluster labels shared by all clusterers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NOISE: i32 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// `-1` marks noise; cluster ids are `0..n_clusters`.
    pub labels: Vec<i32>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    /// Validates that ids are dense in `0..n_clusters` and every id occurs.
    pub fn new(labels: Vec<i32>) -> Result<Self> {
        let max = labels.iter().copied().max().unwrap_or(NOISE);
        if labels.iter().any(|&l| l < NOISE) {
            return Err(Error::invalid("labels", "ids below -1 are not allowed"));
        }
        let n_clusters = (max + 1).max(0) as usize;
        let mut seen = vec![false; n_clusters];
        for &l in &labels {
            if l >= 0 {
                seen[l as usize] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid("labels", format!("cluster id {missing} has no members")));
        }
        Ok(ClusterAssignment { labels, n_clusters })
    }

    /// Renumbers arbitrary ids (negative = noise) in order of first occurrence.
    pub fn from_raw(raw: &[i64]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                if r < 0 {
                    NOISE
                } else {
                    let next = map.len() as i32;
                    *map.entry(r).or_insert(next)
                }
            })
            .collect();
        ClusterAssignment { labels, n_clusters: map.len() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_clusters];
        for &l in &self.labels {
            if l >= 0 {
                s[l as usize] += 1;
            }
        }
        s
    }
}
