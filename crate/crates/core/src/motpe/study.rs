//! Study loop, Pareto-front bookkeeping and persistence.

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pareto::{hypervolume, nondominated_sort, reference_point, to_minimization, Direction};
use super::parzen::{suggest, Observation, SamplerConfig};
use super::space::{Params, SearchSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialState {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: usize,
    pub params: Params,
    pub state: TrialState,
    /// Raw objective values in study order; `None` for failed trials.
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, serde_json::Value>,
}

impl Trial {
    pub fn is_complete(&self) -> bool {
        self.state == TrialState::Complete
    }
}

/// What an evaluator hands back for a successful trial.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub attrs: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n_trials: usize,
    pub seed: u64,
    pub n_startup: usize,
    pub gamma: f64,
    pub n_candidates: usize,
    /// Trials suggested and evaluated together; 1 is fully serial.
    pub parallel: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let s = SamplerConfig::default();
        StudyConfig { n_trials: 50, seed: 0, n_startup: s.n_startup, gamma: s.gamma, n_candidates: s.n_candidates, parallel: 1 }
    }
}

impl StudyConfig {
    fn sampler(&self) -> SamplerConfig {
        SamplerConfig { n_startup: self.n_startup, gamma: self.gamma, n_candidates: self.n_candidates }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub trial_ids: Vec<usize>,
    pub reference: Vec<f64>,
    pub hypervolume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub objective_names: Vec<String>,
    pub directions: Vec<Direction>,
    pub trials: Vec<Trial>,
    /// Front membership after each trial, by trial id.
    pub snapshots: Vec<Vec<usize>>,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "evaluator panicked".into())
}

pub fn run_study<F>(
    space: &SearchSpace,
    objective_names: &[&str],
    directions: &[Direction],
    cfg: &StudyConfig,
    evaluate: F,
) -> Result<Study>
where
    F: Fn(usize, &Params) -> std::result::Result<Evaluation, String> + Sync,
{
    space.validate()?;
    if objective_names.len() != directions.len() || directions.is_empty() {
        return Err(Error::invalid("directions", "one direction per objective is required"));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(Error::invalid("gamma", "must be in (0, 1]"));
    }
    let mut study = Study {
        objective_names: objective_names.iter().map(|s| s.to_string()).collect(),
        directions: directions.to_vec(),
        trials: Vec::with_capacity(cfg.n_trials),
        snapshots: Vec::with_capacity(cfg.n_trials),
    };
    let batch = cfg.parallel.max(1);
    let sampler = cfg.sampler();
    while study.trials.len() < cfg.n_trials {
        let start = study.trials.len();
        let end = (start + batch).min(cfg.n_trials);
        let suggestions: Vec<Params> = {
            let history: Vec<Observation> = study
                .trials
                .iter()
                .filter_map(|t| {
                    t.values.as_ref().map(|v| Observation { id: t.trial_id, params: &t.params, values: to_minimization(v, directions) })
                })
                .collect();
            (start..end)
                .map(|id| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(id as u64);
                    suggest(space, &history, &sampler, &mut rng)
                })
                .collect()
        };
        let run = |(id, params): (usize, Params)| -> Trial {
            let outcome = catch_unwind(AssertUnwindSafe(|| evaluate(id, &params)));
            let (state, values, error, attrs) = match outcome {
                Ok(Ok(e)) if e.values.len() == directions.len() && e.values.iter().all(|v| v.is_finite()) => {
                    (TrialState::Complete, Some(e.values), None, e.attrs)
                }
                Ok(Ok(e)) => (TrialState::Failed, None, Some("objective vector is malformed or non-finite".into()), e.attrs),
                Ok(Err(msg)) => (TrialState::Failed, None, Some(msg), BTreeMap::new()),
                Err(p) => (TrialState::Failed, None, Some(panic_message(p)), BTreeMap::new()),
            };
            Trial { trial_id: id, params, state, values, error, attrs }
        };
        let indexed: Vec<(usize, Params)> = (start..end).zip(suggestions).collect();
        let done: Vec<Trial> = if batch > 1 {
            indexed.into_par_iter().map(run).collect()
        } else {
            indexed.into_iter().map(run).collect()
        };
        for t in done {
            study.trials.push(t);
            study.snapshots.push(study.front_ids());
        }
    }
    Ok(study)
}

impl Study {
    fn completed(&self) -> Vec<&Trial> {
        self.trials.iter().filter(|t| t.is_complete()).collect()
    }

    fn normalized(&self, trials: &[&Trial]) -> Vec<Vec<f64>> {
        trials
            .iter()
            .map(|t| to_minimization(t.values.as_ref().expect("complete"), &self.directions))
            .collect()
    }

    /// Pareto set among completed trials, by trial id.
    pub fn front_ids(&self) -> Vec<usize> {
        let done = self.completed();
        let pts = self.normalized(&done);
        let mut ids: Vec<usize> = nondominated_sort(&pts)
            .into_iter()
            .next()
            .unwrap_or_default()
            .into_iter()
            .map(|i| done[i].trial_id)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Reference point from all completed trials (worst + 10% span).
    pub fn reference(&self) -> Vec<f64> {
        let done = self.completed();
        reference_point(&self.normalized(&done))
    }

    pub fn front(&self) -> Result<ParetoFront> {
        let reference = self.reference();
        let ids = self.front_ids();
        let hv = self.hypervolume_of(&ids, &reference)?;
        Ok(ParetoFront { trial_ids: ids, reference, hypervolume: hv })
    }

    fn hypervolume_of(&self, ids: &[usize], reference: &[f64]) -> Result<f64> {
        let members: Vec<&Trial> = ids.iter().map(|&i| &self.trials[i]).collect();
        if members.is_empty() {
            return Ok(0.0);
        }
        hypervolume(&self.normalized(&members), reference)
    }

    /// Front hypervolume after each trial, all against `reference`.
    pub fn hypervolume_history(&self, reference: &[f64]) -> Result<Vec<f64>> {
        self.snapshots.iter().map(|ids| self.hypervolume_of(ids, reference)).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.trials {
            serde_json::to_writer(&mut out, t)?;
            out.write_all(b"\n").map_err(|e| Error::io("trials.jsonl", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Vec<Trial>> {
        text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
    }

    /// `trial,<objectives...>,on_front` rows.
    pub fn write_pareto_csv<W: Write>(&self, out: W) -> Result<()> {
        let front = self.front_ids();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["trial".to_string()];
        header.extend(self.objective_names.iter().cloned());
        header.push("on_front".into());
        w.write_record(&header)?;
        for t in &self.trials {
            let Some(v) = &t.values else { continue };
            let mut rec = vec![t.trial_id.to_string()];
            rec.extend(v.iter().map(|x| x.to_string()));
            rec.push(front.binary_search(&t.trial_id).is_ok().to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("pareto.csv", e))?;
        Ok(())
    }
}

/// Highest silhouette (objective 0), then higher Calinski-Harabasz
/// (objective 2), then lower trial id.
pub fn pick_final<'a>(candidates: &[&'a Trial]) -> Option<&'a Trial> {
    let key = |t: &Trial| {
        let v = t.values.as_ref().expect("complete trial");
        (v[0], v.get(2).copied().unwrap_or(0.0))
    };
    candidates.iter().copied().filter(|t| t.is_complete()).reduce(|best, t| {
        let (a, b) = (key(best), key(t));
        if b.0 > a.0 || (b.0 == a.0 && (b.1 > a.1 || (b.1 == a.1 && t.trial_id < best.trial_id))) {
            t
        } else {
            best
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::space::{Dimension, ParamValue};
    use super::*;

    fn trial(id: usize, v: [f64; 3]) -> Trial {
        Trial { trial_id: id, params: Params::new(), state: TrialState::Complete, values: Some(v.to_vec()), error: None, attrs: BTreeMap::new() }
    }

    #[test]
    fn pick_final_rules() {
        let a = trial(3, [0.52, 0.5, 18316.0]);
        let b = trial(7, [0.41, 1.17, 13265.0]);
        assert_eq!(pick_final(&[&b, &a]).unwrap().trial_id, 3);
        let c = trial(1, [0.52, 0.4, 20000.0]);
        assert_eq!(pick_final(&[&a, &c]).unwrap().trial_id, 1);
        let d = trial(0, [0.52, 0.4, 20000.0]);
        assert_eq!(pick_final(&[&c, &d]).unwrap().trial_id, 0);
        assert_eq!(pick_final(&[&a]).unwrap().trial_id, 3);
    }

    fn toy_space() -> SearchSpace {
        SearchSpace::new(vec![Dimension::real("x", -5.0, 5.0)]).unwrap()
    }

    fn toy(_: usize, p: &Params) -> std::result::Result<Evaluation, String> {
        let x = p["x"].as_f64().unwrap();
        Ok(Evaluation { values: vec![x * x, (x - 2.0).powi(2)], ..Default::default() })
    }

    #[test]
    fn single_trial_study() {
        let cfg = StudyConfig { n_trials: 1, ..Default::default() };
        let s = run_study(&toy_space(), &["f1", "f2"], &[Direction::Minimize; 2], &cfg, toy).unwrap();
        assert_eq!(s.trials.len(), 1);
        assert_eq!(s.front_ids(), vec![0]);
    }

    #[test]
    fn failures_and_panics_are_recorded() {
        let cfg = StudyConfig { n_trials: 12, ..Default::default() };
        let s = run_study(&toy_space(), &["f1", "f2"], &[Direction::Minimize; 2], &cfg, |id, p| {
            if id == 2 {
                panic!("boom");
            }
            if id == 3 {
                return Err("bad".into());
            }
            toy(id, p)
        })
        .unwrap();
        assert_eq!(s.trials[2].state, TrialState::Failed);
        assert_eq!(s.trials[2].error.as_deref(), Some("boom"));
        assert_eq!(s.trials[3].error.as_deref(), Some("bad"));
        assert!(s.trials[2].values.is_none());
        assert_eq!(s.trials.iter().filter(|t| t.is_complete()).count(), 10);
    }

    #[test]
    fn serial_study_is_reproducible() {
        let cfg = StudyConfig { n_trials: 25, seed: 4, ..Default::default() };
        let dirs = [Direction::Minimize; 2];
        let a = run_study(&toy_space(), &["f1", "f2"], &dirs, &cfg, toy).unwrap();
        let b = run_study(&toy_space(), &["f1", "f2"], &dirs, &cfg, toy).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        let back = Study::read_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, a.trials);
        assert!(matches!(back[0].params["x"], ParamValue::Real(_)));
    }
}
