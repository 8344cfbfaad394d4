//! Clustering scores, structural diagnostics and exclusion rules.

pub mod external;
pub mod internal;

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::assignment::{ClusterAssignment, NOISE};
use crate::distance::Metric;
use crate::error::Result;

pub use external::{adjusted_mutual_info, adjusted_rand, gini_index, Ami};
pub use internal::{calinski_harabasz, davies_bouldin, silhouette};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExclusionConfig {
    pub max_unclustered_fraction: f64,
    /// Runs with this many clusters or fewer are excluded.
    pub min_clusters_exclusive: usize,
    pub max_clusters: usize,
    pub max_cluster_share: f64,
}

impl Default for ExclusionConfig {
    fn default() -> Self {
        ExclusionConfig { max_unclustered_fraction: 0.10, min_clusters_exclusive: 3, max_clusters: 50, max_cluster_share: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ExclusionReason {
    TooManyUnclustered { fraction: f64 },
    TooFewClusters { n_clusters: usize },
    TooManyClusters { n_clusters: usize },
    DominantCluster { share: f64 },
    UndefinedMetric { metric: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub excluded: bool,
    pub reasons: Vec<ExclusionReason>,
}

/// Size-only view of a clustering, enough for the exclusion rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub n_samples: usize,
    pub n_clusters: usize,
    pub n_unclustered: usize,
    pub unclustered_fraction: f64,
    pub largest_cluster_fraction: f64,
    pub cluster_sizes: Vec<usize>,
}

impl Structure {
    pub fn of(a: &ClusterAssignment) -> Structure {
        let n = a.len();
        let sizes = a.sizes();
        let frac = |v: usize| if n > 0 { v as f64 / n as f64 } else { 0.0 };
        Structure {
            n_samples: n,
            n_clusters: a.n_clusters,
            n_unclustered: a.n_noise(),
            unclustered_fraction: frac(a.n_noise()),
            largest_cluster_fraction: frac(sizes.iter().copied().max().unwrap_or(0)),
            cluster_sizes: sizes,
        }
    }
}

pub fn apply_exclusion_rules(s: &Structure, cfg: &ExclusionConfig) -> Verdict {
    let mut reasons = Vec::new();
    if s.unclustered_fraction > cfg.max_unclustered_fraction {
        reasons.push(ExclusionReason::TooManyUnclustered { fraction: s.unclustered_fraction });
    }
    if s.n_clusters <= cfg.min_clusters_exclusive {
        reasons.push(ExclusionReason::TooFewClusters { n_clusters: s.n_clusters });
    }
    if s.n_clusters > cfg.max_clusters {
        reasons.push(ExclusionReason::TooManyClusters { n_clusters: s.n_clusters });
    }
    if s.largest_cluster_fraction > cfg.max_cluster_share {
        reasons.push(ExclusionReason::DominantCluster { share: s.largest_cluster_fraction });
    }
    Verdict { excluded: !reasons.is_empty(), reasons }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScores {
    pub n_labelled: usize,
    pub adjusted_rand: f64,
    pub adjusted_mutual_info: f64,
    pub adjusted_mutual_info_raw: f64,
}

/// All scores for one clustering. Undefined internal metrics are `None`
/// and recorded as exclusion reasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    /// Set when the within-cluster dispersion is zero.
    pub calinski_harabasz_infinite: bool,
    pub gini: Option<f64>,
    pub external: BTreeMap<String, ExternalScores>,
    #[serde(flatten)]
    pub structure: Structure,
    pub verdict: Verdict,
}

impl MetricReport {
    pub fn objectives(&self) -> Option<[f64; 3]> {
        Some([self.silhouette?, self.davies_bouldin?, self.calinski_harabasz?])
    }
}

/// External labels for a subset of samples; `None` entries are skipped.
pub struct LabelRef<'a> {
    pub name: &'a str,
    pub values: &'a [Option<String>],
}

pub fn evaluate(
    x: ArrayView2<'_, f64>,
    assignment: &ClusterAssignment,
    metric: Metric,
    labels: &[LabelRef<'_>],
    cfg: &ExclusionConfig,
) -> Result<MetricReport> {
    let structure = Structure::of(assignment);
    let mut verdict = apply_exclusion_rules(&structure, cfg);
    let mut undefined = |name: &str, e: crate::Error| {
        verdict.reasons.push(ExclusionReason::UndefinedMetric { metric: name.into(), reason: e.to_string() });
        None
    };
    let l = &assignment.labels;
    let sil = silhouette(x, l, metric).map_or_else(|e| undefined("silhouette", e), Some);
    let db = davies_bouldin(x, l).map_or_else(|e| undefined("davies_bouldin", e), Some);
    let mut ch_infinite = false;
    let ch = match calinski_harabasz(x, l) {
        Ok(v) if v.is_infinite() => {
            ch_infinite = true;
            undefined(
                "calinski_harabasz",
                crate::Error::Undefined { metric: "calinski_harabasz", reason: "zero within-cluster dispersion".into() },
            )
        }
        Ok(v) => Some(v),
        Err(e) => undefined("calinski_harabasz", e),
    };
    let non_noise: Vec<usize> = structure.cluster_sizes.clone();
    let gini = gini_index(&non_noise).ok();
    verdict.excluded = !verdict.reasons.is_empty();

    let mut external = BTreeMap::new();
    for set in labels {
        let (truth, pred): (Vec<&str>, Vec<i32>) = set
            .values
            .iter()
            .zip(l)
            .filter_map(|(t, &p)| t.as_deref().map(|t| (t, p)))
            .unzip();
        if truth.len() < 2 {
            continue;
        }
        let ari = adjusted_rand(&truth, &pred)?;
        let ami = adjusted_mutual_info(&truth, &pred)?;
        external.insert(
            set.name.to_string(),
            ExternalScores { n_labelled: truth.len(), adjusted_rand: ari, adjusted_mutual_info: ami.value, adjusted_mutual_info_raw: ami.raw },
        );
    }
    debug_assert!(l.iter().all(|&v| v >= NOISE));
    Ok(MetricReport {
        silhouette: sil,
        davies_bouldin: db,
        calinski_harabasz: ch,
        calinski_harabasz_infinite: ch_infinite,
        gini,
        external,
        structure,
        verdict,
    })
}
