//! Append-only, file-per-run registry.
//!
//! ```text
//! <root>/runs/<run_id>/record.json, labels.csv, embedding.csv, tree.json, cdf.csv
//! <root>/studies/<study_id>/config.json, trials.jsonl, front.json, pareto.csv
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{RunOutput, RunRecord};
use crate::characterize::write_cdf_csv;
use crate::error::{Error, Result};
use crate::umap::write_embedding_csv;

pub const REGISTRY_ENV: &str = "ROCKCLUSTER_REGISTRY";

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

#[derive(Debug, Clone)]
pub struct Registry {
    root: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

impl Registry {
    /// `ROCKCLUSTER_REGISTRY` when set, otherwise `default`.
    pub fn resolve(default: impl Into<PathBuf>) -> PathBuf {
        std::env::var_os(REGISTRY_ENV).map(PathBuf::from).unwrap_or_else(|| default.into())
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["runs", "studies"] {
            let d = root.join(sub);
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        Ok(Registry { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join("runs").join(run_id)
    }

    pub fn study_dir(&self, study_id: &str) -> PathBuf {
        self.root.join("studies").join(study_id)
    }

    /// Builds the entry in a scratch directory and renames it into place, so
    /// readers never see half-written runs. An existing entry is kept as is.
    fn publish(&self, final_dir: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<bool> {
        if final_dir.exists() {
            return Ok(false);
        }
        let parent = final_dir.parent().expect("registry entries have a parent");
        let tmp = parent.join(format!(
            ".tmp-{}-{}-{}",
            final_dir.file_name().and_then(|s| s.to_str()).unwrap_or("entry"),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let filled = fill(&tmp);
        if let Err(e) = filled {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
        match fs::rename(&tmp, final_dir) {
            Ok(()) => Ok(true),
            Err(_) if final_dir.exists() => {
                let _ = fs::remove_dir_all(&tmp);
                Ok(false)
            }
            Err(e) => Err(Error::io(final_dir, e)),
        }
    }

    /// Persists a run and returns the record with its artifact names filled in.
    pub fn save_run(&self, out: &RunOutput) -> Result<RunRecord> {
        let mut record = out.record.clone();
        if out.assignment.is_some() {
            record.artifacts.labels_csv = Some("labels.csv".into());
        }
        if out.embedding.is_some() {
            record.artifacts.embedding_csv = Some("embedding.csv".into());
        }
        if out.tree.is_some() {
            record.artifacts.tree_json = Some("tree.json".into());
        }
        if !out.cdfs.is_empty() {
            record.artifacts.cdf_csv = Some("cdf.csv".into());
        }
        let dir = self.run_dir(&record.run_id);
        self.publish(&dir, |tmp| {
            if let Some(a) = &out.assignment {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(&tmp.join("labels.csv"))?);
                w.write_record(["section_id", "cluster"])?;
                for (id, l) in out.section_ids.iter().zip(&a.labels) {
                    w.write_record([id.as_str(), l.to_string().as_str()])?;
                }
                w.flush().map_err(|e| Error::io("labels.csv", e))?;
            }
            if let Some(y) = &out.embedding {
                write_embedding_csv(create(&tmp.join("embedding.csv"))?, &out.section_ids, y.view())?;
            }
            if let Some(t) = &out.tree {
                write_file(&tmp.join("tree.json"), &serde_json::to_vec(t)?)?;
            }
            if !out.cdfs.is_empty() {
                write_cdf_csv(&out.cdfs, create(&tmp.join("cdf.csv"))?)?;
            }
            let mut w = create(&tmp.join("record.json"))?;
            serde_json::to_writer_pretty(&mut w, &record)?;
            w.write_all(b"\n").map_err(|e| Error::io("record.json", e))?;
            w.flush().map_err(|e| Error::io("record.json", e))
        })?;
        self.load_run(&record.run_id)
    }

    pub fn load_run(&self, run_id: &str) -> Result<RunRecord> {
        let path = self.run_dir(run_id).join("record.json");
        if !path.exists() {
            return Err(Error::RunNotFound(run_id.to_string()));
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Full id, or the unique run whose id starts with `prefix`.
    pub fn find_run(&self, prefix: &str) -> Result<String> {
        let matches: Vec<String> = self.list_runs()?.into_iter().filter(|id| id.starts_with(prefix)).collect();
        match matches.as_slice() {
            [one] => Ok(one.clone()),
            _ => Err(Error::RunNotFound(prefix.to_string())),
        }
    }

    pub fn list_runs(&self) -> Result<Vec<String>> {
        let dir = self.root.join("runs");
        let mut ids: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| !n.starts_with('.'))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Writes a study directory through the same scratch-and-rename path.
    pub(crate) fn save_study(&self, study_id: &str, fill: impl FnOnce(&Path) -> Result<()>) -> Result<PathBuf> {
        let dir = self.study_dir(study_id);
        self.publish(&dir, fill)?;
        Ok(dir)
    }
}
