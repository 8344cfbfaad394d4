//! The acceptance criteria as plain functions: `Ok(detail)` on success,
//! `Err(detail)` with the measured values otherwise.

use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rockcluster::assignment::ClusterAssignment;
use rockcluster::data_model::{extract_features, FeatureSetId, FeatureTable, LabelSet};
use rockcluster::distance::Metric;
use rockcluster::hdbscan::{hdbscan_cluster, minimum_spanning_tree, mutual_reachability, HdbscanParams};
use rockcluster::metrics::{
    adjusted_mutual_info, adjusted_rand, apply_exclusion_rules, calinski_harabasz, davies_bouldin, gini_index, silhouette,
    ExclusionConfig, ExclusionReason, Structure,
};
use rockcluster::motpe::{hypervolume, nondominated_sort, run_study, Dimension, Direction, Evaluation, SearchSpace, StudyConfig};
use rockcluster::partition::{kmeans, linkage_tree, KmeansParams, Linkage};
use rockcluster::pca::fit_pca;
use rockcluster::runner::{optimize_pipeline, primary_label, run_pipeline, Dataset, OptimizeConfig, PipelineConfig, Registry, RunOptions};
use tempfile::TempDir;
use rockcluster::synth::{generate_with, paper_desk};
use rockcluster::umap::{fit_umap, UmapParams};

use super::oracles::{self, Points};
use super::{dataset, gaussian_blobs, labelled_instance, rel_close, repo_root, rng, to_array, tree_bytes};

pub type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(started: Instant, limit_s: f64) -> Outcome {
    let s = started.elapsed().as_secs_f64();
    check!(s < limit_s, "took {s:.1}s, limit {limit_s}s");
    Ok(format!("{s:.1}s"))
}

pub fn metric_oracles() -> Outcome {
    let t0 = Instant::now();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) + 1e-15;
    for inst in 0..200u64 {
        let mut r = rng(1000 + inst);
        let k = r.random_range(2..=6);
        let n = r.random_range(2 * k..=60);
        let d = r.random_range(1..=5);
        let (x, labels) = labelled_instance(&mut r, n, k, d, inst % 4 == 0);
        let xa = to_array(&x);
        let metric = Metric::ALL[inst as usize % 4];

        let s = silhouette(xa.view(), &labels, metric).map_err(|e| e.to_string())?;
        let so = oracles::silhouette(&x, &labels, metric.name());
        check!((s - so).abs() <= 1e-12, "instance {inst}: silhouette {s} vs oracle {so}");

        let db = davies_bouldin(xa.view(), &labels).map_err(|e| e.to_string())?;
        let dbo = oracles::davies_bouldin(&x, &labels);
        check!(rel_close(db, dbo, 1e-9), "instance {inst}: davies_bouldin {db} vs oracle {dbo}");

        let ch = calinski_harabasz(xa.view(), &labels).map_err(|e| e.to_string())?;
        let cho = oracles::calinski_harabasz(&x, &labels);
        check!(rel_close(ch, cho, 1e-9), "instance {inst}: calinski_harabasz {ch} vs oracle {cho}");

        let k2 = r.random_range(2..=6);
        let mut other: Vec<i32> = (0..n).map(|i| if i < k2 { i as i32 } else { r.random_range(-1..k2 as i32) }).collect();
        // half the instances compare against a noisy copy of the truth
        if inst % 2 == 1 {
            other = labels.iter().map(|&l| if r.random_bool(0.2) { r.random_range(0..k as i32) } else { l }).collect();
        }
        let ari = adjusted_rand(&labels, &other).map_err(|e| e.to_string())?;
        let ario = oracles::adjusted_rand(&labels, &other);
        check!((ari - ario).abs() <= 1e-12, "instance {inst}: adjusted_rand {ari} vs oracle {ario}");

        let ami = adjusted_mutual_info(&labels, &other).map_err(|e| e.to_string())?.raw;
        let amio = oracles::adjusted_mutual_info(&labels, &other);
        check!(close(ami, amio), "instance {inst}: adjusted_mutual_info {ami} vs oracle {amio}");

        let sizes = ClusterAssignment::new(labels.clone()).map_err(|e| e.to_string())?.sizes();
        let g = gini_index(&sizes).map_err(|e| e.to_string())?;
        let go = oracles::gini(&sizes);
        check!(close(g, go), "instance {inst}: gini {g} vs oracle {go}");
    }
    Ok(format!("200 instances agree; {}", within(t0, 60.0)?))
}

fn merge_sets(d: &rockcluster::partition::Dendrogram) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let n = d.n_leaves;
    let mut nodes: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    for m in &d.merges {
        let (a, b) = (nodes[m.left].clone(), nodes[m.right].clone());
        let mut u = [a.clone(), b.clone()].concat();
        u.sort();
        nodes.push(u);
        let (a, b) = if a[0] < b[0] { (a, b) } else { (b, a) };
        out.push((a, b, m.height));
    }
    out
}

pub fn algorithm_oracles() -> Outcome {
    let t0 = Instant::now();

    let mut merges_checked = 0;
    for inst in 0..60u64 {
        let mut r = rng(2000 + inst);
        let n = r.random_range(3..=12);
        let d = r.random_range(1..=4);
        let x: Points = (0..n).map(|_| (0..d).map(|_| r.random_range(-3.0..3.0)).collect()).collect();
        for linkage in Linkage::ALL {
            let metric = if linkage == Linkage::Ward { Metric::Euclidean } else { [Metric::Euclidean, Metric::Manhattan, Metric::Cosine][inst as usize % 3] };
            let name = serde_json::to_value(linkage).unwrap().as_str().unwrap().to_string();
            let got = merge_sets(&linkage_tree(to_array(&x).view(), linkage, metric).map_err(|e| e.to_string())?);
            let want = oracles::agglomerative(&x, &name, metric.name());
            for (step, (g, w)) in got.iter().zip(&want).enumerate() {
                let (wa, wb) = if w.a[0] < w.b[0] { (&w.a, &w.b) } else { (&w.b, &w.a) };
                check!(&g.0 == wa && &g.1 == wb, "instance {inst} {name}/{metric}: merge {step} joins {:?}+{:?}, oracle {:?}+{:?}", g.0, g.1, wa, wb);
                check!(rel_close(g.2, w.height, 1e-9), "instance {inst} {name}/{metric}: merge {step} height {} vs oracle {}", g.2, w.height);
                merges_checked += 1;
            }
        }
    }

    for inst in 0..40u64 {
        let mut r = rng(3000 + inst);
        let k = r.random_range(2..=6);
        let n = r.random_range(2 * k..=80);
        let d = r.random_range(1..=4);
        let (x, _) = labelled_instance(&mut r, n, k, d, false);
        let fit_k = r.random_range(1..=k + 1);
        let p = KmeansParams { n_clusters: fit_k, seed: inst * 7, ..Default::default() };
        let got = kmeans(to_array(&x).view(), &p).map_err(|e| e.to_string())?.inertia;
        let want = oracles::kmeans_inertia(&x, fit_k, p.n_init, p.max_iter, p.tol, p.seed);
        check!(rel_close(got, want, 1e-9) || (got == 0.0 && want == 0.0), "instance {inst}: k-means inertia {got} vs oracle {want}");
    }

    for inst in 0..30u64 {
        let mut r = rng(4000 + inst);
        let n = r.random_range(5..=200);
        let d = r.random_range(1..=5);
        let x: Points = (0..n).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let ms = r.random_range(1..=10);
        let metric = Metric::ALL[inst as usize % 4];
        let mr = mutual_reachability(to_array(&x).view(), ms, metric).map_err(|e| e.to_string())?;
        let mut got: Vec<f64> = minimum_spanning_tree(&mr).iter().map(|e| e.weight).collect();
        got.sort_by(f64::total_cmp);
        let want = oracles::kruskal_weights(&oracles::mutual_reachability(&x, ms, metric.name()));
        check!(got == want, "instance {inst}: MST weights differ (total {} vs oracle {})", got.iter().sum::<f64>(), want.iter().sum::<f64>());
        if n >= 5 {
            let p = HdbscanParams { min_cluster_size: 5.min(n), min_samples: Some(ms.min(n)), metric, ..Default::default() };
            let res = hdbscan_cluster(to_array(&x).view(), &p).map_err(|e| e.to_string())?;
            let total: f64 = res.mst.iter().map(|e| e.weight).sum::<f64>();
            let mut sorted: Vec<f64> = res.mst.iter().map(|e| e.weight).collect();
            sorted.sort_by(f64::total_cmp);
            check!(sorted == want, "instance {inst}: hdbscan MST total {total} vs oracle {}", want.iter().sum::<f64>());
        }
    }

    for inst in 0..30u64 {
        let mut r = rng(5000 + inst);
        let d = r.random_range(2..=8);
        let n = r.random_range(d + 2..=50);
        let mix: Points = (0..d).map(|_| (0..d).map(|_| r.random_range(-0.3..0.3)).collect()).collect();
        let x: Points = (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|j| r.random_range(-1.0..1.0) * 1.8f64.powi(j as i32)).collect();
                (0..d).map(|j| z[j] + (0..d).map(|i| mix[j][i] * z[i]).sum::<f64>()).collect()
            })
            .collect();
        let model = fit_pca(to_array(&x).view(), d).map_err(|e| e.to_string())?;
        let eig = oracles::jacobi_eigen(oracles::covariance(&x));
        for (c, (val, vec)) in eig.iter().enumerate() {
            check!(rel_close(model.explained_variance[c], *val, 1e-8), "instance {inst}: variance {c} {} vs oracle {val}", model.explained_variance[c]);
            let got = &model.components[c];
            let plus = got.iter().zip(vec).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let minus = got.iter().zip(vec).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
            check!(plus.min(minus) < 1e-8, "instance {inst}: component {c} off by {}", plus.min(minus));
        }
    }
    Ok(format!("{merges_checked} merges, 40 k-means, 30 MST, 30 PCA instances agree; {}", within(t0, 120.0)?))
}

pub fn umap_planted() -> Outcome {
    let t0 = Instant::now();
    let mut centers = vec![vec![0.0; 10]; 3];
    centers[1][0] = 6.0;
    centers[2][1] = 6.0;
    let (x, truth) = gaussian_blobs(&mut rng(7), &centers, 100, 0.2);
    let emb = fit_umap(to_array(&x).view(), &UmapParams::default()).map_err(|e| e.to_string())?;
    let km = kmeans(emb.coordinates.view(), &KmeansParams { n_clusters: 3, ..Default::default() }).map_err(|e| e.to_string())?;
    let ari = adjusted_rand(&km.assignment.labels, &truth).map_err(|e| e.to_string())?;
    let (first, last) = (emb.initial_objective(), emb.final_objective());
    check!(ari == 1.0, "k-means ARI on the embedding is {ari}");
    check!(last < first, "objective went from {first} to {last}");
    Ok(format!("ARI {ari}, objective {first:.1} -> {last:.1}; {}", within(t0, 60.0)?))
}

pub fn hdbscan_planted() -> Outcome {
    let t0 = Instant::now();
    let (mut x, _) = gaussian_blobs(&mut rng(11), &vec![vec![0.0, 0.0], vec![10.0, 10.0]], 50, 0.5);
    let isolated = [[30.0, -5.0], [-20.0, 12.0], [5.0, 40.0], [40.0, 35.0], [-15.0, -25.0]];
    x.extend(isolated.iter().map(|p| p.to_vec()));
    let p = HdbscanParams { min_cluster_size: 10, min_samples: Some(5), ..Default::default() };
    let res = hdbscan_cluster(to_array(&x).view(), &p).map_err(|e| e.to_string())?;
    let a = &res.assignment;
    let noise: Vec<usize> = (0..a.len()).filter(|&i| a.labels[i] == -1).collect();
    check!(a.n_clusters == 2, "{} clusters", a.n_clusters);
    check!(noise == (100..105).collect::<Vec<_>>(), "noise points {noise:?}");
    Ok(format!("2 clusters, noise exactly the 5 isolated points; {}", within(t0, 5.0)?))
}

pub fn motpe() -> Outcome {
    let t0 = Instant::now();
    for inst in 0..20u64 {
        let mut r = rng(6000 + inst);
        // half the instances sit on a coarse grid so ties and duplicates occur
        let pts: Points = (0..50)
            .map(|_| (0..3).map(|_| if inst % 2 == 0 { r.random_range(0.0..1.0) } else { r.random_range(0..4) as f64 }).collect())
            .collect();
        let mut got = nondominated_sort(&pts);
        let mut want = oracles::peel_fronts(&pts);
        got.iter_mut().for_each(|f| f.sort());
        want.iter_mut().for_each(|f| f.sort());
        check!(got == want, "instance {inst}: fronts {got:?} vs oracle {want:?}");
    }

    let mut worst: f64 = 0.0;
    for inst in 0..5u64 {
        let mut r = rng(7000 + inst);
        let pts: Points = (0..50).map(|_| (0..3).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let front: Points = nondominated_sort(&pts)[0].iter().map(|&i| pts[i].clone()).collect();
        let reference = [1.1, 1.2, 1.05];
        let hv = hypervolume(&front, &reference).map_err(|e| e.to_string())?;
        let mc = oracles::hypervolume_mc(&front, &reference, 1_000_000, inst);
        let err = (hv - mc).abs() / mc;
        worst = worst.max(err);
        check!(err < 0.01, "instance {inst}: hypervolume {hv} vs Monte-Carlo {mc}");
    }

    let space = SearchSpace::new(vec![Dimension::real("x", -5.0, 5.0)]).map_err(|e| e.to_string())?;
    let cfg = StudyConfig { n_trials: 100, seed: 0, ..Default::default() };
    let study = run_study(&space, &["f1", "f2"], &[Direction::Minimize; 2], &cfg, |_, p| {
        let x = p["x"].as_f64().unwrap();
        Ok(Evaluation { values: vec![x * x, (x - 2.0).powi(2)], ..Default::default() })
    })
    .map_err(|e| e.to_string())?;
    let hv = *study.hypervolume_history(&[25.0, 49.0]).map_err(|e| e.to_string())?.last().unwrap();
    let optimum = oracles::toy_front_hypervolume((25.0, 49.0));
    check!(hv >= 0.95 * optimum, "toy front hypervolume {hv} is {:.2}% of {optimum}", 100.0 * hv / optimum);
    Ok(format!(
        "sort agrees on 20 sets; HV within {:.3}% of Monte-Carlo; toy front at {:.2}% of optimum; {}",
        100.0 * worst,
        100.0 * hv / optimum,
        within(t0, 120.0)?
    ))
}

pub fn paper_desk_dataset() -> Dataset {
    let sc = paper_desk();
    let (rows, _) = generate_with(&sc, |s| (extract_features(&s, FeatureSetId::Mwd).unwrap(), s.rock_type.clone())).unwrap();
    let (vectors, rock): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let table = FeatureTable::from_vectors(&vectors).unwrap();
    Dataset::new(table, vec![LabelSet { name: "rock_type".into(), values: rock }]).unwrap()
}

/// Registry left behind by the end-to-end study, compared again by the reproducibility check.
static STUDY_REGISTRY: Mutex<Option<TempDir>> = Mutex::new(None);

fn paper_desk_study(data: &Dataset) -> Result<(TempDir, rockcluster::runner::StudyOutcome), String> {
    let text = std::fs::read_to_string(repo_root().join("configs/umap_hdbscan_study.json")).map_err(|e| e.to_string())?;
    let cfg = OptimizeConfig::from_json(&text).map_err(|e| e.to_string())?;
    check!(cfg.study.n_trials == 50, "study config asks for {} trials", cfg.study.n_trials);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let reg = Registry::open(dir.path()).map_err(|e| e.to_string())?;
    let out = optimize_pipeline(&cfg, data, Some(&reg)).map_err(|e| e.to_string())?;
    Ok((dir, out))
}

pub fn end_to_end() -> Outcome {
    let t0 = Instant::now();
    let data = paper_desk_dataset();
    check!(data.features.len() == 2000, "scenario has {} sections", data.features.len());
    let (dir, out) = paper_desk_study(&data)?;
    *STUDY_REGISTRY.lock().unwrap() = Some(dir);
    let Some((trial, best)) = &out.best else { return Err("no retained run".into()) };
    let sc = best.metrics.as_ref().and_then(|m| m.silhouette).unwrap_or(f64::NAN);
    let ari = primary_label(best).map(|a| a.scores.adjusted_rand).unwrap_or(f64::NAN);
    let h = &out.hypervolume_history;
    let window = (h[h.len() - 1] - h[h.len() - 11]) / h[h.len() - 1];
    let detail = format!("best trial {trial}: silhouette {sc:.3}, ARI {ari:.3}; HV gain over last 10 trials {:.2}%", 100.0 * window);
    check!(sc >= 0.40, "{detail}; silhouette below 0.40");
    check!(ari >= 0.60, "{detail}; ARI below 0.60");
    check!(window < 0.01, "{detail}; not below 1%");
    let time = within(t0, 1800.0).map_err(|e| format!("{detail}; {e}"))?;
    Ok(format!("{detail}; {time}"))
}

pub fn exclusion_fixtures() -> Outcome {
    let t0 = Instant::now();
    let cfg = ExclusionConfig::default();
    let fixture = |n: usize, unclustered: usize, sizes: Vec<usize>| {
        let largest = *sizes.iter().max().unwrap();
        Structure {
            n_samples: n,
            n_clusters: sizes.len(),
            n_unclustered: unclustered,
            unclustered_fraction: unclustered as f64 / n as f64,
            largest_cluster_fraction: largest as f64 / n as f64,
            cluster_sizes: sizes,
        }
    };
    // 23,277 sections with 6,140 unclustered
    let sizes = vec![4000, 3000, 2500, 2200, 1900, 1500, 1137, 500, 400];
    let v = apply_exclusion_rules(&fixture(23_277, 6_140, sizes), &cfg);
    check!(v.excluded && matches!(v.reasons.as_slice(), [ExclusionReason::TooManyUnclustered { .. }]), "26% unclustered: {v:?}");
    let v = apply_exclusion_rules(&fixture(1000, 0, vec![360, 200, 100, 90, 80, 60, 50, 40, 20]), &cfg);
    check!(!v.excluded, "9 clusters, largest 36%: {v:?}");

    // a reducer-free run where one cluster swallows nearly everything
    let mut r = rng(21);
    let mut rows: Points = (0..2000).map(|_| (0..8).map(|_| r.random_range(0.0..1.0)).collect()).collect();
    for far in [40.0, 80.0, 120.0] {
        rows.push(vec![far; 8]);
    }
    let pc = PipelineConfig::from_json(
        r#"{"version":1,"feature_set":"mwd_median","scaler":"minmax","reducer":{"kind":"none"},"clusterer":{"kind":"kmeans","n_clusters":4},"seed":0}"#,
    )
    .map_err(|e| e.to_string())?;
    let run = run_pipeline(&pc, &dataset(&rows, None), RunOptions::default()).map_err(|e| e.to_string())?.record;
    let m = run.metrics.as_ref().ok_or("reducer-free run has no metrics")?;
    check!(
        !run.is_retained() && matches!(m.verdict.reasons.as_slice(), [ExclusionReason::DominantCluster { .. }]),
        "reducer-free run: {:?}",
        m.verdict
    );

    let equal: Vec<i32> = (0..400).map(|i| i % 8).collect();
    let g = gini_index(&ClusterAssignment::new(equal).map_err(|e| e.to_string())?.sizes()).map_err(|e| e.to_string())?;
    check!(g < 0.3, "equal sizes give Gini {g}");
    let mut centers = vec![vec![0.0; 8]; 4];
    for (c, v) in centers.iter_mut().enumerate() {
        v[c] = 10.0;
    }
    let (rows, truth) = gaussian_blobs(&mut rng(22), &centers, 50, 0.5);
    let pc = PipelineConfig::from_json(
        r#"{"version":1,"feature_set":"mwd_median","scaler":"standard","reducer":{"kind":"none"},"clusterer":{"kind":"kmeans","n_clusters":4},"seed":0}"#,
    )
    .map_err(|e| e.to_string())?;
    let run = run_pipeline(&pc, &dataset(&rows, Some(&truth)), RunOptions::default()).map_err(|e| e.to_string())?.record;
    let kg = run.metrics.as_ref().and_then(|m| m.gini).unwrap_or(f64::NAN);
    check!(kg < 0.3, "k-means on equal blobs gives Gini {kg}");
    Ok(format!("26% unclustered excluded, dominant cluster excluded, equal-size Gini {g:.3} / k-means {kg:.3}; {}", within(t0, 10.0)?))
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rockcluster"))
        .current_dir(dir)
        .env_remove("ROCKCLUSTER_REGISTRY")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("`rockcluster {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

/// A reduced copy of the bundled scenario, small enough for repeated runs.
pub fn small_scenario_json(sections: usize) -> String {
    let mut sc = paper_desk();
    sc.name = "paper-desk-small".into();
    for a in &mut sc.archetypes {
        a.sections = sections;
    }
    sc.holes_per_section = 12;
    sc.values_per_hole = 10;
    serde_json::to_string_pretty(&sc).unwrap()
}

/// Runs synth, extract, run and optimize through the binary in `dir`.
pub fn full_workflow(dir: &Path) -> Result<(), String> {
    let configs = repo_root().join("configs");
    let cfg3 = configs.join("experiment3.json");
    let study = configs.join("umap_hdbscan_study.json");
    std::fs::write(dir.join("scenario.json"), small_scenario_json(40)).map_err(|e| e.to_string())?;
    cli(dir, &["synth", "--scenario", "scenario.json", "--out", "raw", "--seed", "5"])?;
    cli(dir, &["extract", "--raw", "raw", "--feature-set", "mwd", "--out", "features.csv"])?;
    cli(dir, &["--registry", "reg", "run", "--config", cfg3.to_str().unwrap(), "--features", "features.csv", "--labels", "raw/sections.csv"])?;
    cli(
        dir,
        &["--registry", "reg", "optimize", "--space", study.to_str().unwrap(), "--features", "features.csv", "--labels", "raw/sections.csv", "--trials", "4", "--seed", "3"],
    )
}

pub fn reproducibility() -> Outcome {
    let t0 = Instant::now();
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    full_workflow(a.path())?;
    full_workflow(b.path())?;
    let (ta, tb) = (tree_bytes(a.path()), tree_bytes(b.path()));
    check!(ta.keys().eq(tb.keys()), "file sets differ: {:?} vs {:?}", ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (path, bytes) in &ta {
        check!(&tb[path] == bytes, "{path} differs between runs");
    }
    let runs = ta.keys().filter(|k| k.ends_with("record.json")).count();
    check!(runs >= 2, "only {runs} runs were recorded");

    let data = paper_desk_dataset();
    let first = match STUDY_REGISTRY.lock().unwrap().take() {
        Some(dir) => dir,
        None => paper_desk_study(&data)?.0,
    };
    let second = paper_desk_study(&data)?.0;
    let (sa, sb) = (tree_bytes(first.path()), tree_bytes(second.path()));
    check!(sa.keys().eq(sb.keys()), "50-trial registries hold different files");
    for (path, bytes) in &sa {
        check!(&sb[path] == bytes, "50-trial registry: {path} differs between runs");
    }
    Ok(format!(
        "CLI workflow: {} files identical ({runs} run records); 50-trial study registry: {} files identical; {:.1}s",
        ta.len(),
        sa.len(),
        t0.elapsed().as_secs_f64()
    ))
}
