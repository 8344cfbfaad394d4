//! Command-line interface.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::characterize::write_profiles_csv;
use crate::data_model::{
    extract_features, ingest_sections_from_paths, read_label_sets, read_wide_csv, write_sections_csv, write_wide_csv, FeatureSetId,
    FeatureTable, LabelSet, LongCsvWriter,
};
use crate::error::{Error, Result};
use crate::runner::{
    optimize_pipeline, results_row, run_pipeline, write_results_csv, Dataset, OptimizeConfig, PipelineConfig, Registry, RunOptions,
    RunRecord, RunStatus, RESULTS_HEADER,
};
use crate::synth::{for_each_chunk, paper_desk, GeologyScenario};

/// Clustering of MWD rock-mass signatures.
#[derive(Debug, Parser)]
#[command(name = "rockcluster", version, about)]
pub struct Cli {
    /// Registry directory (overrides ROCKCLUSTER_REGISTRY; default `registry`).
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic MWD data: long.csv, sections.csv and manifest.json.
    Synth {
        /// Scenario JSON file, or `paper-desk` for the bundled scenario.
        #[arg(long)]
        scenario: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute per-section feature vectors from raw long.csv + sections.csv.
    Extract {
        /// Directory holding long.csv and sections.csv.
        #[arg(long)]
        raw: PathBuf,
        /// Feature set: all, mwd, mwd_rock or mwd_median.
        #[arg(long, default_value = "all")]
        feature_set: FeatureSetId,
        /// Output wide CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one pipeline configuration and record it in the registry.
    Run {
        /// Pipeline config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Wide feature CSV.
        #[arg(long)]
        features: PathBuf,
        /// Sections CSV with rock_type / q_class labels.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall-clock stage timings (makes the record non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Search pipeline hyperparameters with MOTPE.
    Optimize {
        /// Study config JSON (base pipeline, optional space, study settings).
        #[arg(long)]
        space: PathBuf,
        /// Wide feature CSV.
        #[arg(long)]
        features: PathBuf,
        /// Sections CSV with rock_type / q_class labels.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Number of trials (overrides the config).
        #[arg(long)]
        trials: Option<usize>,
        /// Study seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Trials evaluated concurrently; 1 keeps the study reproducible.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Print the summary row and cluster profile table of a run.
    Report {
        /// Run id or unique prefix.
        #[arg(long)]
        run: String,
    },
    /// Copy plot data of a run (embedding, CDFs) and optionally a study's Pareto CSV.
    ExportPlots {
        /// Run id or unique prefix.
        #[arg(long)]
        run: String,
        /// Study id whose pareto.csv is exported too.
        #[arg(long)]
        study: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn load_dataset(features: &Path, labels: Option<&Path>) -> Result<Dataset> {
    let table = read_wide_csv(fs::File::open(features).map_err(|e| Error::io(features, e))?)?;
    let sets: Vec<LabelSet> = match labels {
        Some(p) => read_label_sets(fs::File::open(p).map_err(|e| Error::io(p, e))?, &table.section_ids)?,
        None => Vec::new(),
    };
    Dataset::new(table, sets)
}

fn open_registry(cli_path: Option<&Path>) -> Result<Registry> {
    let root = match cli_path {
        Some(p) => p.to_path_buf(),
        None => Registry::resolve("registry"),
    };
    Registry::open(root)
}

fn print_table(out: &mut dyn Write, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| cells.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ");
    writeln!(out, "{}", line(header))?;
    for r in rows {
        writeln!(out, "{}", line(r))?;
    }
    Ok(())
}

fn print_summary(out: &mut dyn Write, r: &RunRecord) -> Result<()> {
    let header: Vec<String> = RESULTS_HEADER.iter().map(|s| s.to_string()).collect();
    let row = results_row(&r.run_id[..12], r);
    print_table(out, &header, &[row]).map_err(|e| Error::io("<stdout>", e))
}

fn print_profiles(out: &mut dyn Write, r: &RunRecord) -> Result<()> {
    let Some(first) = r.profiles.first() else { return Ok(()) };
    let params: Vec<String> = first.medians.keys().cloned().collect();
    let labels: Vec<String> = r.alignment.iter().map(|a| a.label_set.clone()).collect();
    let mut header = vec!["cluster".to_string(), "n_samples".to_string()];
    header.extend(params.iter().map(|p| format!("{p} median")));
    header.extend(labels.iter().cloned());
    let rows: Vec<Vec<String>> = r
        .profiles
        .iter()
        .map(|p| {
            let mut row = vec![p.cluster_id.to_string(), p.n_samples.to_string()];
            row.extend(params.iter().map(|k| format!("{:.2}", p.medians[k])));
            row.extend(labels.iter().map(|l| p.labels.get(l).map_or("-".into(), |m| format!("{} ({:.2})", m.label, m.fraction))));
            row
        })
        .collect();
    print_table(out, &header, &rows).map_err(|e| Error::io("<stdout>", e))
}

fn synth(scenario: &str, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut sc: GeologyScenario = if scenario == "paper-desk" && !Path::new(scenario).exists() {
        paper_desk()
    } else {
        serde_json::from_str(&read_text(Path::new(scenario))?)?
    };
    if let Some(s) = seed {
        sc.seed = s;
    }
    sc.validate()?;
    mkdir(out)?;
    let mut long = LongCsvWriter::new(create(&out.join("long.csv"))?)?;
    let mut meta = Vec::with_capacity(sc.n_sections());
    let manifest = for_each_chunk(&sc, 64, |batch| {
        for s in batch {
            long.push(s)?;
            let mut m = s.clone();
            m.readings.clear();
            meta.push(m);
        }
        Ok(())
    })?;
    long.finish()?;
    write_sections_csv(&meta, create(&out.join("sections.csv"))?)?;
    let mut m = serde_json::to_vec_pretty(&manifest)?;
    m.push(b'\n');
    fs::write(out.join("manifest.json"), m).map_err(|e| Error::io(out.join("manifest.json"), e))?;
    println!("wrote {} sections ({} readings per parameter) to {}", manifest.n_sections, manifest.readings_per_parameter, out.display());
    Ok(())
}

fn extract(raw: &Path, fs_id: FeatureSetId, out: &Path) -> Result<()> {
    let ing = ingest_sections_from_paths(&raw.join("long.csv"), &raw.join("sections.csv"))?;
    let vectors = ing.sections.iter().map(|s| extract_features(s, fs_id)).collect::<Result<Vec<_>>>()?;
    let table = FeatureTable::from_vectors(&vectors)?;
    write_wide_csv(&table, create(out)?)?;
    eprintln!(
        "extracted {} sections x {} features ({} rows and {} sections rejected)",
        table.len(),
        fs_id.len(),
        ing.rejected_rows,
        ing.rejected_sections.len()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Synth { scenario, out, seed } => synth(&scenario, &out, seed),
        Command::Extract { raw, feature_set, out } => extract(&raw, feature_set, &out),
        Command::Run { config, features, labels, seed, timings } => {
            let mut cfg = PipelineConfig::from_json(&read_text(&config)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let data = load_dataset(&features, labels.as_deref())?;
            let registry = open_registry(cli.registry.as_deref())?;
            let out = run_pipeline(&cfg, &data, RunOptions { record_timings: timings })?;
            let record = registry.save_run(&out)?;
            writeln!(stdout, "run {}", record.run_id).map_err(|e| Error::io("<stdout>", e))?;
            print_summary(&mut stdout, &record)?;
            if let RunStatus::Failed { stage, cause } = &record.status {
                return Err(Error::Stage { stage: "pipeline", cause: format!("{stage}: {cause}") });
            }
            Ok(())
        }
        Command::Optimize { space, features, labels, trials, seed, parallel } => {
            let mut cfg = OptimizeConfig::from_json(&read_text(&space)?)?;
            if let Some(n) = trials {
                cfg.study.n_trials = n;
            }
            if let Some(s) = seed {
                cfg.study.seed = s;
            }
            if let Some(p) = parallel {
                cfg.study.parallel = p;
            }
            let data = load_dataset(&features, labels.as_deref())?;
            let registry = open_registry(cli.registry.as_deref())?;
            let out = optimize_pipeline(&cfg, &data, Some(&registry))?;
            let io_err = |e| Error::io("<stdout>", e);
            for t in &out.study.trials {
                match &t.values {
                    Some(v) => writeln!(stdout, "trial {:>3}  sc {:.4}  dbi {:.4}  chi {:.1}", t.trial_id, v[0], v[1], v[2]),
                    None => writeln!(stdout, "trial {:>3}  failed: {}", t.trial_id, t.error.as_deref().unwrap_or("")),
                }
                .map_err(io_err)?;
            }
            writeln!(stdout, "study {}", out.study_id).map_err(io_err)?;
            writeln!(stdout, "front {:?}  hypervolume {:.6}", out.front.trial_ids, out.front.hypervolume).map_err(io_err)?;
            match &out.best {
                Some((id, r)) => {
                    writeln!(stdout, "best trial {id}, run {}", r.run_id).map_err(io_err)?;
                    print_summary(&mut stdout, r)?;
                }
                None => writeln!(stdout, "no trial passed the exclusion rules").map_err(io_err)?,
            }
            Ok(())
        }
        Command::Report { run } => {
            let registry = open_registry(cli.registry.as_deref())?;
            let record = registry.load_run(&registry.find_run(&run)?)?;
            writeln!(stdout, "run {}", record.run_id).map_err(|e| Error::io("<stdout>", e))?;
            print_summary(&mut stdout, &record)?;
            writeln!(stdout).map_err(|e| Error::io("<stdout>", e))?;
            print_profiles(&mut stdout, &record)?;
            if let Some(m) = &record.metrics {
                for r in &m.verdict.reasons {
                    writeln!(stdout, "excluded: {}", serde_json::to_string(r)?).map_err(|e| Error::io("<stdout>", e))?;
                }
            }
            Ok(())
        }
        Command::ExportPlots { run, study, out } => {
            let registry = open_registry(cli.registry.as_deref())?;
            let id = registry.find_run(&run)?;
            let record = registry.load_run(&id)?;
            mkdir(&out)?;
            let dir = registry.run_dir(&id);
            for name in [&record.artifacts.embedding_csv, &record.artifacts.cdf_csv, &record.artifacts.labels_csv].into_iter().flatten() {
                fs::copy(dir.join(name), out.join(name)).map_err(|e| Error::io(dir.join(name), e))?;
            }
            let labels: Vec<&str> = record.alignment.iter().map(|a| a.label_set.as_str()).collect();
            write_profiles_csv(&record.profiles, &labels, create(&out.join("profiles.csv"))?)?;
            write_results_csv([(record.run_id[..12].to_string(), &record)], create(&out.join("results.csv"))?)?;
            if let Some(s) = study {
                let src = registry.study_dir(&s).join("pareto.csv");
                fs::copy(&src, out.join("pareto.csv")).map_err(|e| Error::io(&src, e))?;
            }
            writeln!(stdout, "exported plot data for run {id} to {}", out.display()).map_err(|e| Error::io("<stdout>", e))?;
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code
/// (0 ok, 1 domain error, 2 usage error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
