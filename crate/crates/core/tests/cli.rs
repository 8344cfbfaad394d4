mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clap::CommandFactory;
use rockcluster::cli::Cli;

use common::criteria::small_scenario_json;
use common::repo_root;

fn rockcluster(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rockcluster"))
        .current_dir(dir)
        .env_remove("ROCKCLUSTER_REGISTRY")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = rockcluster(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Synthesizes a small scenario and extracts `mwd` features into `dir`.
fn prepare(dir: &Path, sections: usize) {
    fs::write(dir.join("scenario.json"), small_scenario_json(sections)).unwrap();
    ok(dir, &["synth", "--scenario", "scenario.json", "--out", "raw"]);
    ok(dir, &["extract", "--raw", "raw", "--feature-set", "mwd", "--out", "features.csv"]);
}

#[test]
fn help_lists_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::command();
    for sub in cli.get_subcommands() {
        let help = ok(dir.path(), &[sub.get_name(), "--help"]);
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "`{} --help` does not mention --{long}", sub.get_name());
            }
        }
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rockcluster(dir.path(), &["run", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path(), 10);
    fs::write(
        dir.path().join("bad.json"),
        r#"{"version":1,"feature_set":"mwd","scaler":"minmax","reducer":{"kind":"none"},"clusterer":{"kind":"hdbscan","min_cluster_size":1},"seed":0}"#,
    )
    .unwrap();
    let out = rockcluster(dir.path(), &["--registry", "reg", "run", "--config", "bad.json", "--features", "features.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("clusterer.min_cluster_size"));
}

#[test]
fn extract_median_set_has_nine_columns() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("scenario.json"), small_scenario_json(5)).unwrap();
    ok(dir.path(), &["synth", "--scenario", "scenario.json", "--out", "raw"]);
    ok(dir.path(), &["extract", "--raw", "raw", "--feature-set", "mwd_median", "--out", "median.csv"]);
    let text = fs::read_to_string(dir.path().join("median.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 9);
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn run_report_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d, 30);
    let cfg = repo_root().join("configs/experiment7.json");
    let stdout = ok(d, &["--registry", "reg", "run", "--config", cfg.to_str().unwrap(), "--features", "features.csv", "--labels", "raw/sections.csv"]);
    let header = stdout.lines().nth(1).unwrap();
    for col in ["silhouette", "davies_bouldin", "calinski_harabasz", "gini", "adjusted_rand"] {
        assert!(header.contains(col), "summary header lacks {col}: {header}");
    }
    let run_id = stdout.lines().next().unwrap().strip_prefix("run ").unwrap().to_string();
    assert!(d.join("reg/runs").join(&run_id).join("record.json").exists());

    let report = ok(d, &["--registry", "reg", "report", "--run", &run_id[..10]]);
    assert!(report.contains("PenetrNorm median"), "{report}");
    ok(d, &["--registry", "reg", "export-plots", "--run", &run_id, "--out", "plots"]);
    for f in ["embedding.csv", "cdf.csv", "labels.csv", "profiles.csv", "results.csv"] {
        assert!(d.join("plots").join(f).exists(), "{f} not exported");
    }
}

#[test]
fn one_trial_study_leaves_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d, 15);
    fs::write(
        d.join("study.json"),
        r#"{"version":1,"base":{"version":1,"feature_set":"mwd","scaler":"minmax","reducer":{"kind":"pca","n_components":5},"clusterer":{"kind":"kmeans"},"seed":0},
           "space":{"dimensions":[{"name":"clusterer.n_clusters","type":"integer","lo":4,"hi":6}]}}"#,
    )
    .unwrap();
    let stdout = ok(d, &["--registry", "reg", "optimize", "--space", "study.json", "--features", "features.csv", "--trials", "1"]);
    let study_id = stdout.lines().find_map(|l| l.strip_prefix("study ")).unwrap().to_string();
    let sdir = d.join("reg/studies").join(&study_id);
    for f in ["config.json", "trials.jsonl", "front.json", "pareto.csv", "snapshots.csv"] {
        assert!(sdir.join(f).exists(), "{f} missing");
    }
    assert_eq!(fs::read_to_string(sdir.join("trials.jsonl")).unwrap().lines().count(), 1);
    assert_eq!(fs::read_dir(d.join("reg/runs")).unwrap().count(), 1);
}

#[test]
fn bundled_configs_parse() {
    for name in ["experiment0", "experiment3", "experiment7"] {
        let text = fs::read_to_string(repo_root().join(format!("configs/{name}.json"))).unwrap();
        rockcluster::runner::PipelineConfig::from_json(&text).unwrap();
    }
    let text = fs::read_to_string(repo_root().join("configs/umap_hdbscan_study.json")).unwrap();
    rockcluster::runner::OptimizeConfig::from_json(&text).unwrap();
}
