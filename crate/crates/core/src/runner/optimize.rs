//! MOTPE-driven pipeline search.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::registry::write_file;
use super::{run_pipeline, sha256_hex, Clusterer, Dataset, PipelineConfig, Reducer, Registry, RunOptions, RunRecord, RunStatus, CONFIG_VERSION};
use crate::error::{Error, Result};
use crate::motpe::{
    nondominated_sort, pick_final, run_study, to_minimization, Dimension, Direction, Evaluation, ParamValue, Params, ParetoFront,
    SearchSpace, Study, StudyConfig, Trial,
};

pub const OBJECTIVES: [&str; 3] = ["silhouette", "davies_bouldin", "calinski_harabasz"];
pub const DIRECTIONS: [Direction; 3] = [Direction::Maximize, Direction::Minimize, Direction::Maximize];

/// A study: the base pipeline, the dimensions to search (dotted paths into
/// the config, e.g. `reducer.n_neighbors`) and the study settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub version: u32,
    pub base: PipelineConfig,
    /// Defaults to [`default_space`] for the base pipeline.
    #[serde(default)]
    pub space: Option<SearchSpace>,
    #[serde(default)]
    pub study: StudyConfig,
}

impl OptimizeConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: OptimizeConfig = serde_json::from_str(text)?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::invalid("version", format!("unsupported config version {}, expected {CONFIG_VERSION}", cfg.version)));
        }
        Ok(cfg)
    }

    pub fn resolved_space(&self, n_samples: usize) -> SearchSpace {
        self.space.clone().unwrap_or_else(|| default_space(&self.base, n_samples))
    }
}

const METRICS: [&str; 4] = ["euclidean", "manhattan", "chebyshev", "cosine"];

/// Search ranges for the reducer and clusterer of `base`, narrowed where
/// a bound would exceed what `n_samples` rows allow.
pub fn default_space(base: &PipelineConfig, n_samples: usize) -> SearchSpace {
    let cap = |hi: i64, lo: i64, limit: usize| hi.min(limit as i64).max(lo);
    let mut dims = Vec::new();
    match &base.reducer {
        Reducer::None => {}
        Reducer::Pca { .. } => dims.push(Dimension::integer("reducer.n_components", 2, 15.min(base.feature_set.len() as i64))),
        Reducer::Umap(_) => dims.extend([
            Dimension::integer("reducer.n_neighbors", 2, cap(250, 2, n_samples.saturating_sub(1))),
            Dimension::real("reducer.min_dist", 0.0, 0.99),
            Dimension::integer("reducer.n_components", 2, 15),
            Dimension::categorical("reducer.metric", &METRICS),
        ]),
    }
    match &base.clusterer {
        Clusterer::Kmeans(_) => dims.push(Dimension::integer("clusterer.n_clusters", 2, cap(20, 2, n_samples.saturating_sub(1)))),
        Clusterer::Agglomerative(_) => dims.extend([
            Dimension::integer("clusterer.n_clusters", 2, cap(20, 2, n_samples.saturating_sub(1))),
            Dimension::categorical("clusterer.linkage", &["ward", "complete", "average", "single"]),
            Dimension::categorical("clusterer.metric", &["euclidean", "manhattan", "cosine"]),
        ]),
        Clusterer::Hdbscan(_) => dims.extend([
            Dimension::integer("clusterer.min_cluster_size", 5, cap(200, 5, n_samples / 2)),
            Dimension::integer("clusterer.min_samples", 1, cap(50, 1, n_samples.saturating_sub(1))),
            Dimension::real("clusterer.cluster_selection_epsilon", 0.0, 1.0),
            Dimension::categorical("clusterer.metric", &METRICS),
        ]),
    }
    SearchSpace { dimensions: dims }
}

/// Writes each parameter into `base` at its dotted path.
pub fn apply_params(base: &PipelineConfig, params: &Params) -> Result<PipelineConfig> {
    let mut v = serde_json::to_value(base)?;
    for (name, value) in params {
        let mut node = &mut v;
        let parts: Vec<&str> = name.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::invalid(name.as_str(), "path does not lead into the config"))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), serde_json::to_value(value)?);
                break;
            }
            node = obj.get_mut(*part).ok_or_else(|| Error::invalid(name.as_str(), "path does not lead into the config"))?;
        }
    }
    serde_json::from_value(v).map_err(|e| Error::invalid("space", e.to_string()))
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub study_id: String,
    pub study: Study,
    pub front: ParetoFront,
    /// Front hypervolume after each trial, against the final reference point.
    pub hypervolume_history: Vec<f64>,
    /// Pareto set of the trials that passed the exclusion rules.
    pub retained_front: Vec<usize>,
    pub best: Option<(usize, RunRecord)>,
    pub dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct FrontFile<'a> {
    objectives: [&'static str; 3],
    directions: [Direction; 3],
    front: &'a ParetoFront,
    retained_front: &'a [usize],
    hypervolume_history: &'a [f64],
    best_trial: Option<usize>,
    best_run_id: Option<&'a str>,
}

fn failure_modes(trials: &[Trial]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in trials {
        *counts.entry(t.error.as_deref().unwrap_or("unknown")).or_default() += 1;
    }
    counts.into_iter().map(|(m, c)| format!("{c}x {m}")).collect::<Vec<_>>().join("; ")
}

fn is_excluded(t: &Trial) -> bool {
    t.attrs.get("excluded").and_then(|v| v.as_bool()).unwrap_or(true)
}

/// Runs the study with `run_pipeline` as the evaluator. Every trial's run is
/// saved to the registry when one is given.
pub fn optimize_pipeline(cfg: &OptimizeConfig, data: &Dataset, registry: Option<&Registry>) -> Result<StudyOutcome> {
    if cfg.version != CONFIG_VERSION {
        return Err(Error::invalid("version", format!("unsupported config version {}, expected {CONFIG_VERSION}", cfg.version)));
    }
    let space = cfg.resolved_space(data.features.len());
    space.validate()?;
    // every dimension must land somewhere in the config
    let probe: Params = space.dimensions.iter().map(|d| (d.name.clone(), space_probe(d))).collect();
    apply_params(&cfg.base, &probe)?;

    let records: Mutex<BTreeMap<usize, RunRecord>> = Mutex::new(BTreeMap::new());
    let study = run_study(&space, &OBJECTIVES, &DIRECTIONS, &cfg.study, |trial_id, params| {
        let pipeline = apply_params(&cfg.base, params).map_err(|e| e.to_string())?;
        let out = run_pipeline(&pipeline, data, RunOptions::default()).map_err(|e| e.to_string())?;
        let record = match registry {
            Some(r) => r.save_run(&out).map_err(|e| e.to_string())?,
            None => out.record,
        };
        records.lock().expect("not poisoned").insert(trial_id, record.clone());
        if let RunStatus::Failed { stage, cause } = &record.status {
            return Err(format!("{stage}: {cause}"));
        }
        let metrics = record.metrics.as_ref().expect("completed runs carry metrics");
        let values = metrics.objectives().ok_or_else(|| {
            let reasons: Vec<String> = metrics.verdict.reasons.iter().map(|r| serde_json::to_string(r).unwrap_or_default()).collect();
            format!("undefined objective: {}", reasons.join(", "))
        })?;
        let mut attrs = BTreeMap::new();
        attrs.insert("run_id".to_string(), serde_json::Value::from(record.run_id.clone()));
        attrs.insert("excluded".to_string(), serde_json::Value::from(metrics.verdict.excluded));
        attrs.insert("n_clusters".to_string(), serde_json::Value::from(metrics.structure.n_clusters));
        if let Some(a) = super::primary_label(&record) {
            attrs.insert("adjusted_rand".to_string(), serde_json::Value::from(a.scores.adjusted_rand));
        }
        Ok(Evaluation { values: values.to_vec(), attrs })
    })?;

    let resolved = OptimizeConfig { space: Some(space), ..cfg.clone() };
    let study_id = sha256_hex(format!("{}\n{}", serde_json::to_string(&resolved)?, data.fingerprint).as_bytes());
    let write_log = |tmp: &std::path::Path| -> Result<()> {
        let mut config = serde_json::to_vec_pretty(&resolved)?;
        config.push(b'\n');
        write_file(&tmp.join("config.json"), &config)?;
        let mut trials = Vec::new();
        study.write_jsonl(&mut trials)?;
        write_file(&tmp.join("trials.jsonl"), &trials)
    };

    if !study.trials.iter().any(Trial::is_complete) {
        // keep the trial log so the failures can be inspected
        if let Some(r) = registry {
            r.save_study(&study_id, write_log)?;
        }
        return Err(Error::AllTrialsFailed { n: study.trials.len(), modes: failure_modes(&study.trials) });
    }
    let front = study.front()?;
    let hypervolume_history = study.hypervolume_history(&front.reference)?;

    let retained: Vec<&Trial> = study.trials.iter().filter(|t| t.is_complete() && !is_excluded(t)).collect();
    let points: Vec<Vec<f64>> = retained.iter().map(|t| to_minimization(t.values.as_ref().expect("complete"), &DIRECTIONS)).collect();
    let mut retained_front: Vec<usize> =
        nondominated_sort(&points).into_iter().next().unwrap_or_default().into_iter().map(|i| retained[i].trial_id).collect();
    retained_front.sort_unstable();
    let candidates: Vec<&Trial> = retained_front.iter().map(|&i| &study.trials[i]).collect();
    let records = records.into_inner().expect("not poisoned");
    let best = pick_final(&candidates).map(|t| (t.trial_id, records[&t.trial_id].clone()));

    let dir = match registry {
        Some(r) => Some(r.save_study(&study_id, |tmp| {
            write_log(tmp)?;
            let file = FrontFile {
                objectives: OBJECTIVES,
                directions: DIRECTIONS,
                front: &front,
                retained_front: &retained_front,
                hypervolume_history: &hypervolume_history,
                best_trial: best.as_ref().map(|b| b.0),
                best_run_id: best.as_ref().map(|b| b.1.run_id.as_str()),
            };
            let mut fj = serde_json::to_vec_pretty(&file)?;
            fj.push(b'\n');
            write_file(&tmp.join("front.json"), &fj)?;
            let mut pareto = Vec::new();
            study.write_pareto_csv(&mut pareto)?;
            write_file(&tmp.join("pareto.csv"), &pareto)?;
            let mut snapshots = Vec::new();
            for (i, ids) in study.snapshots.iter().enumerate() {
                writeln!(snapshots, "{i},{}", ids.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")).expect("vec write");
            }
            write_file(&tmp.join("snapshots.csv"), &snapshots)
        })?),
        None => None,
    };
    Ok(StudyOutcome { study_id, study, front, hypervolume_history, retained_front, best, dir })
}

fn space_probe(d: &Dimension) -> ParamValue {
    use crate::motpe::Domain;
    match &d.domain {
        Domain::Real { lo, .. } => ParamValue::Real(*lo),
        Domain::Integer { lo, .. } => ParamValue::Int(*lo),
        Domain::Categorical { choices } => ParamValue::Cat(choices[0].clone()),
    }
}
