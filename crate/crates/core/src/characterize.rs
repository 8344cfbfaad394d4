//! Cluster profiles, per-cluster CDFs and label alignment.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assignment::{ClusterAssignment, NOISE};
use crate::data_model::stats::{median_sorted, sorted_copy};
use crate::data_model::{FeatureKey, FeatureTable, LabelSet, ParameterId, StatKind};
use crate::error::{Error, Result};
use crate::metrics::{adjusted_mutual_info, adjusted_rand, ExternalScores};

/// Parameters shown in the profile tables; ordering uses `PenetrNorm`.
pub const KEY_PARAMETERS: [ParameterId; 3] = [ParameterId::FeedPressNorm, ParameterId::PenetrNorm, ParameterId::RotaPressNorm];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityLabel {
    pub label: String,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster_id: i32,
    pub n_samples: usize,
    /// Medians of the clustered (scaled) values, keyed by parameter name.
    pub medians: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub raw_medians: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, MajorityLabel>,
}

/// Column carrying a parameter in a table: the section mean for MWD
/// parameters (the median when the schema has no means), the value itself
/// for geometric ones.
pub fn parameter_column(table: &FeatureTable, p: ParameterId) -> Result<usize> {
    let found = if p.is_mwd() {
        table
            .column_index(FeatureKey::Mwd(p, StatKind::Mean))
            .or_else(|| table.column_index(FeatureKey::Mwd(p, StatKind::Median)))
    } else {
        table.column_index(FeatureKey::Geometric(p))
    };
    found.ok_or_else(|| Error::MissingParameter(format!("{p} (feature set {})", table.schema)))
}

fn members(assignment: &ClusterAssignment) -> BTreeMap<i32, Vec<usize>> {
    let mut m: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in assignment.labels.iter().enumerate() {
        m.entry(l).or_default().push(i);
    }
    m
}

fn majority(values: &[Option<String>], rows: &[usize]) -> Option<MajorityLabel> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &r in rows {
        if let Some(v) = &values[r] {
            *counts.entry(v.as_str()).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    // BTreeMap order makes the first maximum the lexicographically smallest
    let (label, n) = counts.into_iter().fold(None, |best: Option<(&str, usize)>, (k, c)| match best {
        Some((_, b)) if b >= c => best,
        _ => Some((k, c)),
    })?;
    Some(MajorityLabel { label: label.to_string(), fraction: n as f64 / total as f64 })
}

fn medians_of(table: &FeatureTable, cols: &[(ParameterId, usize)], rows: &[usize]) -> BTreeMap<String, f64> {
    cols.iter()
        .map(|&(p, c)| {
            let vals: Vec<f64> = rows.iter().map(|&r| table.values[[r, c]]).collect();
            (p.name().to_string(), median_sorted(&sorted_copy(&vals)))
        })
        .collect()
}

/// One profile per cluster (noise included), sorted by the `PenetrNorm`
/// median, ties by cluster id. `PenetrNorm` is always profiled.
pub fn profile_clusters(
    scaled: &FeatureTable,
    raw: Option<&FeatureTable>,
    assignment: &ClusterAssignment,
    labels: &[LabelSet],
    parameters: &[ParameterId],
) -> Result<Vec<ClusterProfile>> {
    if assignment.len() != scaled.len() {
        return Err(Error::DimensionMismatch { expected: scaled.len(), got: assignment.len() });
    }
    if let Some(r) = raw {
        if r.len() != scaled.len() {
            return Err(Error::DimensionMismatch { expected: scaled.len(), got: r.len() });
        }
    }
    let mut params = parameters.to_vec();
    if !params.contains(&ParameterId::PenetrNorm) {
        params.push(ParameterId::PenetrNorm);
    }
    let cols: Vec<(ParameterId, usize)> = params.iter().map(|&p| Ok((p, parameter_column(scaled, p)?))).collect::<Result<_>>()?;
    let raw_cols: Option<Vec<(ParameterId, usize)>> = raw
        .map(|r| params.iter().map(|&p| Ok((p, parameter_column(r, p)?))).collect::<Result<_>>())
        .transpose()?;

    let mut profiles: Vec<ClusterProfile> = members(assignment)
        .into_iter()
        .map(|(cluster_id, rows)| ClusterProfile {
            cluster_id,
            n_samples: rows.len(),
            medians: medians_of(scaled, &cols, &rows),
            raw_medians: match (raw, &raw_cols) {
                (Some(r), Some(c)) => medians_of(r, c, &rows),
                _ => BTreeMap::new(),
            },
            labels: labels
                .iter()
                .filter_map(|set| majority(&set.values, &rows).map(|m| (set.name.clone(), m)))
                .collect(),
        })
        .collect();
    let key = ParameterId::PenetrNorm.name();
    profiles.sort_by(|a, b| a.medians[key].total_cmp(&b.medians[key]).then(a.cluster_id.cmp(&b.cluster_id)));
    Ok(profiles)
}

/// `cluster,n_samples,<parameter medians...>,<label>,<label>_fraction...`
pub fn write_profiles_csv<W: Write>(profiles: &[ClusterProfile], label_names: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let params: Vec<String> = profiles.first().map(|p| p.medians.keys().cloned().collect()).unwrap_or_default();
    let raw: Vec<String> = profiles.first().map(|p| p.raw_medians.keys().cloned().collect()).unwrap_or_default();
    let mut header = vec!["cluster".to_string(), "n_samples".to_string()];
    header.extend(params.iter().cloned());
    header.extend(raw.iter().map(|p| format!("{p}_raw")));
    for l in label_names {
        header.push(l.to_string());
        header.push(format!("{l}_fraction"));
    }
    w.write_record(&header)?;
    for p in profiles {
        let mut rec = vec![p.cluster_id.to_string(), p.n_samples.to_string()];
        rec.extend(params.iter().map(|k| p.medians[k].to_string()));
        rec.extend(raw.iter().map(|k| p.raw_medians[k].to_string()));
        for l in label_names {
            match p.labels.get(*l) {
                Some(m) => {
                    rec.push(m.label.clone());
                    rec.push(m.fraction.to_string());
                }
                None => rec.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("profiles.csv", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSeries {
    pub cluster_id: i32,
    /// `(value, quantile)` at every distinct value, quantile = P(X <= value).
    pub points: Vec<(f64, f64)>,
}

pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let sorted = sorted_copy(values);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let q = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = q,
            _ => out.push((*v, q)),
        }
    }
    out
}

pub fn feature_cdf(table: &FeatureTable, assignment: &ClusterAssignment, column: usize) -> Result<Vec<CdfSeries>> {
    if assignment.len() != table.len() {
        return Err(Error::DimensionMismatch { expected: table.len(), got: assignment.len() });
    }
    if column >= table.values.ncols() {
        return Err(Error::invalid("column", format!("{column} is out of range")));
    }
    Ok(members(assignment)
        .into_iter()
        .map(|(cluster_id, rows)| {
            let vals: Vec<f64> = rows.iter().map(|&r| table.values[[r, column]]).collect();
            CdfSeries { cluster_id, points: empirical_cdf(&vals) }
        })
        .collect())
}

/// Long CSV `cluster,feature,value,quantile`.
pub fn write_cdf_csv<W: Write>(series: &[(String, Vec<CdfSeries>)], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["cluster", "feature", "value", "quantile"])?;
    for (feature, per_cluster) in series {
        for s in per_cluster {
            for (v, q) in &s.points {
                w.write_record([s.cluster_id.to_string(), feature.clone(), v.to_string(), q.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("cdf.csv", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    pub clusters: Vec<i32>,
    pub labels: Vec<String>,
    /// `counts[cluster][label]`
    pub counts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub label_set: String,
    pub scores: ExternalScores,
    pub contingency: Contingency,
}

/// Agreement of the clustering with each label set, over labelled sections.
/// Noise counts as its own group.
pub fn alignment_report(assignment: &ClusterAssignment, labels: &[LabelSet]) -> Result<Vec<Alignment>> {
    let mut out = Vec::new();
    for set in labels {
        if set.values.len() != assignment.len() {
            return Err(Error::DimensionMismatch { expected: assignment.len(), got: set.values.len() });
        }
        let (truth, pred): (Vec<&str>, Vec<i32>) = set
            .values
            .iter()
            .zip(&assignment.labels)
            .filter_map(|(t, &p)| t.as_deref().map(|t| (t, p)))
            .unzip();
        if truth.len() < 2 {
            continue;
        }
        let ami = adjusted_mutual_info(&truth, &pred)?;
        let scores = ExternalScores {
            n_labelled: truth.len(),
            adjusted_rand: adjusted_rand(&truth, &pred)?,
            adjusted_mutual_info: ami.value,
            adjusted_mutual_info_raw: ami.raw,
        };
        let mut clusters: Vec<i32> = pred.clone();
        clusters.sort_unstable();
        clusters.dedup();
        let mut names: Vec<String> = truth.iter().map(|s| s.to_string()).collect();
        names.sort();
        names.dedup();
        let mut counts = vec![vec![0usize; names.len()]; clusters.len()];
        for (t, p) in truth.iter().zip(&pred) {
            let ci = clusters.binary_search(p).expect("present");
            let li = names.binary_search_by(|n| n.as_str().cmp(t)).expect("present");
            counts[ci][li] += 1;
        }
        out.push(Alignment { label_set: set.name.clone(), scores, contingency: Contingency { clusters, labels: names, counts } });
    }
    Ok(out)
}

/// `cluster,<label columns...>` with counts.
pub fn write_contingency_csv<W: Write>(c: &Contingency, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["cluster".to_string()];
    header.extend(c.labels.iter().cloned());
    w.write_record(&header)?;
    for (cl, row) in c.clusters.iter().zip(&c.counts) {
        let mut rec = vec![cl.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("contingency.csv", e))?;
    Ok(())
}

/// Whether any profile row is the noise group.
pub fn has_noise_row(profiles: &[ClusterProfile]) -> bool {
    profiles.iter().any(|p| p.cluster_id == NOISE)
}
