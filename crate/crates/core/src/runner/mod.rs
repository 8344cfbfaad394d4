//! Pipeline orchestration: scale, reduce, cluster, score, characterize.

mod optimize;
mod registry;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assignment::ClusterAssignment;
use crate::characterize::{alignment_report, feature_cdf, parameter_column, profile_clusters, Alignment, CdfSeries, ClusterProfile, KEY_PARAMETERS};
use crate::data_model::{write_wide_csv, FeatureSetId, FeatureTable, LabelSet, ParameterId};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::hdbscan::{hdbscan_cluster, HdbscanParams};
use crate::metrics::{evaluate, ExclusionConfig, LabelRef, MetricReport};
use crate::partition::{agglomerative, kmeans, AgglomerativeParams, KmeansParams};
use crate::pca::fit_pca;
use crate::scaling::{fit_scaler, ScalerKind};
use crate::umap::{fit_umap, UmapParams};

pub use optimize::{apply_params, default_space, optimize_pipeline, OptimizeConfig, StudyOutcome};
pub use registry::{Registry, REGISTRY_ENV};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Reducer {
    None,
    Pca { n_components: usize },
    Umap(UmapParams),
}

impl Reducer {
    pub fn name(&self) -> &'static str {
        match self {
            Reducer::None => "none",
            Reducer::Pca { .. } => "pca",
            Reducer::Umap(_) => "umap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Clusterer {
    Kmeans(KmeansParams),
    Agglomerative(AgglomerativeParams),
    Hdbscan(HdbscanParams),
}

impl Clusterer {
    pub fn name(&self) -> &'static str {
        match self {
            Clusterer::Kmeans(_) => "kmeans",
            Clusterer::Agglomerative(_) => "agglomerative",
            Clusterer::Hdbscan(_) => "hdbscan",
        }
    }
}

/// One experiment. `seed` overrides the seeds inside the reducer and
/// clusterer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    #[serde(default)]
    pub feature_set: FeatureSetId,
    #[serde(default)]
    pub scaler: ScalerKind,
    pub reducer: Reducer,
    pub clusterer: Clusterer,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exclusion: ExclusionConfig,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::invalid("version", format!("unsupported config version {}, expected {CONFIG_VERSION}", cfg.version)));
        }
        Ok(cfg)
    }

    /// Copy with the pipeline seed pushed into every seeded stage.
    pub fn seeded(&self) -> PipelineConfig {
        let mut c = self.clone();
        if let Reducer::Umap(p) = &mut c.reducer {
            p.seed = c.seed;
        }
        if let Clusterer::Kmeans(p) = &mut c.clusterer {
            p.seed = c.seed;
        }
        c
    }

    /// Checks every parameter against its bounds for `n_samples` rows.
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::invalid("version", format!("unsupported config version {}, expected {CONFIG_VERSION}", self.version)));
        }
        let n_features = self.feature_set.len();
        match &self.reducer {
            Reducer::None => {}
            Reducer::Pca { n_components } => {
                if *n_components == 0 || *n_components > n_features.min(n_samples) {
                    return Err(Error::invalid(
                        "reducer.n_components",
                        format!("must be in 1..={}, got {n_components}", n_features.min(n_samples)),
                    ));
                }
            }
            Reducer::Umap(p) => p.validate(n_samples).map_err(|e| prefixed("reducer", e))?,
        }
        match &self.clusterer {
            Clusterer::Kmeans(p) => {
                if p.n_clusters == 0 || p.n_clusters > n_samples {
                    return Err(Error::invalid("clusterer.n_clusters", format!("must be in 1..={n_samples}, got {}", p.n_clusters)));
                }
                if p.n_init == 0 || p.max_iter == 0 {
                    return Err(Error::invalid("clusterer.n_init", "n_init and max_iter must be positive"));
                }
            }
            Clusterer::Agglomerative(p) => {
                if p.n_clusters == 0 || p.n_clusters > n_samples {
                    return Err(Error::invalid("clusterer.n_clusters", format!("must be in 1..={n_samples}, got {}", p.n_clusters)));
                }
                if p.metric == Metric::Chebyshev {
                    return Err(Error::invalid("clusterer.metric", "chebyshev is not supported for agglomerative clustering"));
                }
                if p.linkage == crate::partition::Linkage::Ward && p.metric != Metric::Euclidean {
                    return Err(Error::invalid("clusterer.metric", "ward linkage requires euclidean"));
                }
            }
            Clusterer::Hdbscan(p) => p.validate(n_samples).map_err(|e| prefixed("clusterer", e))?,
        }
        Ok(())
    }
}

fn prefixed(prefix: &str, e: Error) -> Error {
    match e {
        Error::Invalid { field, reason } => Error::Invalid { field: format!("{prefix}.{field}"), reason },
        other => other,
    }
}

/// Features plus optional label sets and the fingerprint binding runs to them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: FeatureTable,
    pub labels: Vec<LabelSet>,
    pub fingerprint: String,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Dataset {
    pub fn new(features: FeatureTable, labels: Vec<LabelSet>) -> Result<Self> {
        for l in &labels {
            if l.values.len() != features.len() {
                return Err(Error::DimensionMismatch { expected: features.len(), got: l.values.len() });
            }
        }
        let mut bytes = Vec::new();
        write_wide_csv(&features, &mut bytes)?;
        for l in &labels {
            bytes.extend_from_slice(format!("\n#{}\n", l.name).as_bytes());
            for (id, v) in features.section_ids.iter().zip(&l.values) {
                bytes.extend_from_slice(format!("{id},{}\n", v.as_deref().unwrap_or("")).as_bytes());
            }
        }
        Ok(Dataset { fingerprint: sha256_hex(&bytes), features, labels })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed { stage: String, cause: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub labels_csv: Option<String>,
    pub embedding_csv: Option<String>,
    pub tree_json: Option<String>,
    pub cdf_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub config: PipelineConfig,
    pub data_fingerprint: String,
    pub n_samples: usize,
    pub n_features: usize,
    /// Width of the clustered representation.
    pub n_components: usize,
    #[serde(flatten)]
    pub status: RunStatus,
    pub metrics: Option<MetricReport>,
    pub profiles: Vec<ClusterProfile>,
    pub alignment: Vec<Alignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_s: Option<BTreeMap<String, f64>>,
    pub artifacts: Artifacts,
}

impl RunRecord {
    pub fn is_retained(&self) -> bool {
        self.metrics.as_ref().is_some_and(|m| !m.verdict.excluded)
    }
}

/// A record plus the in-memory artifacts the registry persists.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub section_ids: Vec<String>,
    pub assignment: Option<ClusterAssignment>,
    pub embedding: Option<Array2<f64>>,
    pub tree: Option<serde_json::Value>,
    pub cdfs: Vec<(String, Vec<CdfSeries>)>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Wall-clock stage timings; off by default so records stay byte-stable.
    pub record_timings: bool,
}

pub fn run_id(cfg: &PipelineConfig, fingerprint: &str) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    sha256_hex(format!("{canonical}\n{fingerprint}\n{}", cfg.seed).as_bytes())
}

struct Timer {
    on: bool,
    start: Instant,
    laps: BTreeMap<String, f64>,
}

impl Timer {
    fn lap(&mut self, stage: &str) {
        if self.on {
            let now = Instant::now();
            self.laps.insert(stage.to_string(), (now - self.start).as_secs_f64());
            self.start = now;
        }
    }
}

fn stage_failure(e: Error) -> String {
    match e {
        Error::Stage { cause, .. } => cause,
        other => other.to_string(),
    }
}

/// Executes one pipeline. Invalid configs are errors; failures inside a
/// stage produce a failed record naming the stage.
pub fn run_pipeline(cfg: &PipelineConfig, data: &Dataset, opts: RunOptions) -> Result<RunOutput> {
    let cfg = cfg.seeded();
    let n = data.features.len();
    cfg.validate(n)?;
    let features = data.features.project(cfg.feature_set)?;
    let mut record = RunRecord {
        run_id: run_id(&cfg, &data.fingerprint),
        config: cfg.clone(),
        data_fingerprint: data.fingerprint.clone(),
        n_samples: n,
        n_features: features.values.ncols(),
        n_components: features.values.ncols(),
        status: RunStatus::Completed,
        metrics: None,
        profiles: Vec::new(),
        alignment: Vec::new(),
        timings_s: None,
        artifacts: Artifacts { labels_csv: None, embedding_csv: None, tree_json: None, cdf_csv: None },
    };
    let mut out = RunOutput {
        record: record.clone(),
        section_ids: features.section_ids.clone(),
        assignment: None,
        embedding: None,
        tree: None,
        cdfs: Vec::new(),
    };
    let mut timer = Timer { on: opts.record_timings, start: Instant::now(), laps: BTreeMap::new() };
    let fail = |mut record: RunRecord, out: RunOutput, stage: &str, e: Error| -> Result<RunOutput> {
        record.status = RunStatus::Failed { stage: stage.into(), cause: stage_failure(e) };
        Ok(RunOutput { record, ..out })
    };

    let scaled = match fit_scaler(features.values.view(), cfg.scaler).and_then(|s| s.transform(features.values.view())) {
        Ok(v) => v,
        Err(e) => return fail(record, out, "scale", e),
    };
    timer.lap("scale");
    let reduced = match &cfg.reducer {
        Reducer::None => Ok(scaled.clone()),
        Reducer::Pca { n_components } => fit_pca(scaled.view(), *n_components).and_then(|m| m.transform(scaled.view())),
        Reducer::Umap(p) => fit_umap(scaled.view(), p).map(|e| e.coordinates),
    };
    let reduced = match reduced {
        Ok(v) => v,
        Err(e) => return fail(record, out, "reduce", e),
    };
    timer.lap("reduce");
    record.n_components = reduced.ncols();

    let clustered = match &cfg.clusterer {
        Clusterer::Kmeans(p) => kmeans(reduced.view(), p).map(|r| (r.assignment, None)),
        Clusterer::Agglomerative(p) => {
            agglomerative(reduced.view(), p).map(|r| (r.assignment, Some(serde_json::to_value(&r.dendrogram).expect("serializable"))))
        }
        Clusterer::Hdbscan(p) => {
            hdbscan_cluster(reduced.view(), p).map(|r| (r.assignment, Some(serde_json::to_value(&r.tree).expect("serializable"))))
        }
    };
    let (assignment, tree) = match clustered {
        Ok(v) => v,
        Err(e) => return fail(record, out, "cluster", e),
    };
    timer.lap("cluster");

    let label_refs: Vec<LabelRef> = data.labels.iter().map(|l| LabelRef { name: &l.name, values: &l.values }).collect();
    let report = match evaluate(reduced.view(), &assignment, Metric::Euclidean, &label_refs, &cfg.exclusion) {
        Ok(r) => r,
        Err(e) => return fail(record, out, "score", e),
    };
    timer.lap("score");

    let scaled_table = FeatureTable { schema: features.schema, section_ids: features.section_ids.clone(), values: scaled };
    let mut params: Vec<ParameterId> = KEY_PARAMETERS.to_vec();
    if cfg.feature_set == FeatureSetId::All {
        params.push(ParameterId::Overburden);
    }
    let profiles = profile_clusters(&scaled_table, Some(&features), &assignment, &data.labels, &params)
        .and_then(|p| Ok((p, alignment_report(&assignment, &data.labels)?)))
        .and_then(|(p, a)| {
            let cdfs = params
                .iter()
                .map(|&k| Ok((k.name().to_string(), feature_cdf(&scaled_table, &assignment, parameter_column(&scaled_table, k)?)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((p, a, cdfs))
        });
    let (profiles, alignment, cdfs) = match profiles {
        Ok(v) => v,
        Err(e) => return fail(record, out, "characterize", e),
    };
    timer.lap("characterize");

    record.metrics = Some(report);
    record.profiles = profiles;
    record.alignment = alignment;
    if opts.record_timings {
        record.timings_s = Some(timer.laps);
    }
    out.record = record;
    out.assignment = Some(assignment);
    out.embedding = Some(reduced);
    out.tree = tree;
    out.cdfs = cdfs;
    Ok(out)
}

/// Header of the results table, one row per run.
pub const RESULTS_HEADER: [&str; 14] = [
    "id",
    "feature_set",
    "n_features",
    "dim_red",
    "cluster_alg",
    "n_clusters",
    "n_components",
    "n_unclustered",
    "gini",
    "silhouette",
    "davies_bouldin",
    "calinski_harabasz",
    "adjusted_rand",
    "excluded",
];

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.digits$}"))
}

/// The label set used for the adjusted-Rand column.
pub fn primary_label(record: &RunRecord) -> Option<&Alignment> {
    record.alignment.iter().find(|a| a.label_set == "rock_type").or_else(|| record.alignment.first())
}

pub fn results_row(id: &str, r: &RunRecord) -> Vec<String> {
    let m = r.metrics.as_ref();
    let ch = m.and_then(|m| if m.calinski_harabasz_infinite { Some(f64::INFINITY) } else { m.calinski_harabasz });
    vec![
        id.to_string(),
        r.config.feature_set.name().to_string(),
        r.n_features.to_string(),
        r.config.reducer.name().to_string(),
        r.config.clusterer.name().to_string(),
        m.map_or("NA".into(), |m| m.structure.n_clusters.to_string()),
        if matches!(r.config.reducer, Reducer::None) { "-".into() } else { r.n_components.to_string() },
        m.map_or("NA".into(), |m| m.structure.n_unclustered.to_string()),
        fmt_opt(m.and_then(|m| m.gini), 2),
        fmt_opt(m.and_then(|m| m.silhouette), 2),
        fmt_opt(m.and_then(|m| m.davies_bouldin), 2),
        fmt_opt(ch, 0),
        fmt_opt(primary_label(r).map(|a| a.scores.adjusted_rand), 2),
        m.map_or("NA".into(), |m| m.verdict.excluded.to_string()),
    ]
}

pub fn write_results_csv<'a, W: Write>(rows: impl IntoIterator<Item = (String, &'a RunRecord)>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for (id, r) in rows {
        w.write_record(results_row(&id, r))?;
    }
    w.flush().map_err(|e| Error::io("results.csv", e))?;
    Ok(())
}
