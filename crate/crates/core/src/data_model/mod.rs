//! MWD schema, raw section ingestion and per-section statistical signatures.
//!
//! A section is one metre of tunnel. All readings of a parameter across every
//! drillhole in the section are pooled before the six statistics are taken.
//! Feature columns are ordered parameter-major (all six statistics of
//! `PenetrNorm`, then `PenetrRMS`, ...) with the geometric entries last.

mod ingest;
pub mod stats;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{ingest_sections, ingest_sections_from_paths, write_long_csv, write_sections_csv, Ingested, LongCsvWriter};
pub use table::{read_label_sets, read_wide_csv, write_wide_csv, FeatureTable, LabelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParameterId {
    PenetrNorm,
    PenetrRMS,
    RotaPressNorm,
    RotaPressRMS,
    FeedPressNorm,
    HammerPressNorm,
    WaterflowNorm,
    WaterflowRMS,
    /// Rock cover above the tunnel, metres.
    Overburden,
    /// Tunnel width, metres.
    TunnelWidth,
}

impl ParameterId {
    pub const MWD: [ParameterId; 8] = [
        ParameterId::PenetrNorm,
        ParameterId::PenetrRMS,
        ParameterId::RotaPressNorm,
        ParameterId::RotaPressRMS,
        ParameterId::FeedPressNorm,
        ParameterId::HammerPressNorm,
        ParameterId::WaterflowNorm,
        ParameterId::WaterflowRMS,
    ];

    pub const GEOMETRIC: [ParameterId; 2] = [ParameterId::Overburden, ParameterId::TunnelWidth];

    pub fn name(self) -> &'static str {
        match self {
            ParameterId::PenetrNorm => "PenetrNorm",
            ParameterId::PenetrRMS => "PenetrRMS",
            ParameterId::RotaPressNorm => "RotaPressNorm",
            ParameterId::RotaPressRMS => "RotaPressRMS",
            ParameterId::FeedPressNorm => "FeedPressNorm",
            ParameterId::HammerPressNorm => "HammerPressNorm",
            ParameterId::WaterflowNorm => "WaterflowNorm",
            ParameterId::WaterflowRMS => "WaterflowRMS",
            ParameterId::Overburden => "Overburden",
            ParameterId::TunnelWidth => "TunnelWidth",
        }
    }

    pub fn is_mwd(self) -> bool {
        !matches!(self, ParameterId::Overburden | ParameterId::TunnelWidth)
    }

    pub fn is_waterflow(self) -> bool {
        matches!(self, ParameterId::WaterflowNorm | ParameterId::WaterflowRMS)
    }
}

impl fmt::Display for ParameterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParameterId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParameterId::MWD
            .iter()
            .chain(ParameterId::GEOMETRIC.iter())
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "parameter",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StatKind {
    Mean,
    Median,
    StdDev,
    Variance,
    Skewness,
    Kurtosis,
}

impl StatKind {
    pub const ALL: [StatKind; 6] = [
        StatKind::Mean,
        StatKind::Median,
        StatKind::StdDev,
        StatKind::Variance,
        StatKind::Skewness,
        StatKind::Kurtosis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatKind::Mean => "mean",
            StatKind::Median => "median",
            StatKind::StdDev => "stdDev",
            StatKind::Variance => "variance",
            StatKind::Skewness => "skewness",
            StatKind::Kurtosis => "kurtosis",
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One column of a feature schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKey {
    Mwd(ParameterId, StatKind),
    Geometric(ParameterId),
}

impl FeatureKey {
    pub fn parameter(self) -> ParameterId {
        match self {
            FeatureKey::Mwd(p, _) | FeatureKey::Geometric(p) => p,
        }
    }

    /// Column header, e.g. `PenetrNorm_mean` or `Overburden`.
    pub fn column_name(self) -> String {
        match self {
            FeatureKey::Mwd(p, s) => format!("{}_{}", p.name(), s.name()),
            FeatureKey::Geometric(p) => p.name().to_string(),
        }
    }

    pub fn parse_column(name: &str) -> Result<Self> {
        if let Some((p, s)) = name.rsplit_once('_') {
            if let Some(stat) = StatKind::ALL.into_iter().find(|k| k.name() == s) {
                let param: ParameterId = p.parse()?;
                if param.is_mwd() {
                    return Ok(FeatureKey::Mwd(param, stat));
                }
            }
        }
        let param: ParameterId = name.parse()?;
        if param.is_mwd() {
            return Err(Error::UnknownName {
                kind: "feature column",
                value: name.to_string(),
            });
        }
        Ok(FeatureKey::Geometric(param))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSetId {
    #[default]
    All,
    Mwd,
    MwdRock,
    MwdMedian,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 4] = [
        FeatureSetId::All,
        FeatureSetId::Mwd,
        FeatureSetId::MwdRock,
        FeatureSetId::MwdMedian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSetId::All => "all",
            FeatureSetId::Mwd => "mwd",
            FeatureSetId::MwdRock => "mwd_rock",
            FeatureSetId::MwdMedian => "mwd_median",
        }
    }

    pub fn schema(self) -> Vec<FeatureKey> {
        let mwd = ParameterId::MWD
            .into_iter()
            .flat_map(|p| StatKind::ALL.into_iter().map(move |s| FeatureKey::Mwd(p, s)));
        match self {
            FeatureSetId::All => mwd
                .chain(ParameterId::GEOMETRIC.into_iter().map(FeatureKey::Geometric))
                .collect(),
            FeatureSetId::Mwd => mwd.collect(),
            FeatureSetId::MwdRock => mwd
                .filter(|k| match k {
                    FeatureKey::Mwd(p, s) => !p.is_waterflow() && *s != StatKind::StdDev,
                    FeatureKey::Geometric(_) => false,
                })
                .collect(),
            FeatureSetId::MwdMedian => ParameterId::MWD
                .into_iter()
                .map(|p| FeatureKey::Mwd(p, StatKind::Median))
                .collect(),
        }
    }

    pub fn len(self) -> usize {
        match self {
            FeatureSetId::All => 50,
            FeatureSetId::Mwd => 48,
            FeatureSetId::MwdRock => 30,
            FeatureSetId::MwdMedian => 8,
        }
    }

    /// MWD parameters whose readings are needed to fill this schema.
    pub fn required_parameters(self) -> Vec<ParameterId> {
        let mut ps: Vec<ParameterId> = self
            .schema()
            .into_iter()
            .map(FeatureKey::parameter)
            .filter(|p| p.is_mwd())
            .collect();
        ps.dedup();
        ps
    }

    /// Identifies the feature set whose schema equals the given header columns.
    pub fn from_columns(cols: &[FeatureKey]) -> Option<FeatureSetId> {
        FeatureSetId::ALL.into_iter().find(|fs| fs.schema() == cols)
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSetId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "feature set",
                value: s.to_string(),
            })
    }
}

/// Raw readings of one tunnel section, pooled over all its drillholes.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSample {
    pub section_id: String,
    pub tunnel_id: String,
    pub chainage_m: f64,
    pub readings: BTreeMap<ParameterId, Vec<f64>>,
    pub overburden_m: f64,
    pub tunnel_width_m: f64,
    pub rock_type: Option<String>,
    pub q_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub section_id: String,
    pub schema: FeatureSetId,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, key: FeatureKey) -> Option<f64> {
        self.schema
            .schema()
            .iter()
            .position(|k| *k == key)
            .map(|i| self.values[i])
    }
}

/// Computes the statistical signature of one section.
pub fn extract_features(s: &SectionSample, fs: FeatureSetId) -> Result<FeatureVector> {
    let mut per_param: BTreeMap<ParameterId, stats::Summary> = BTreeMap::new();
    for p in fs.required_parameters() {
        let values = s
            .readings
            .get(&p)
            .ok_or_else(|| Error::MissingParameter(p.name().to_string()))?;
        if values.len() < 2 {
            return Err(Error::invalid(
                format!("{}.{}", s.section_id, p),
                format!("needs at least 2 readings, got {}", values.len()),
            ));
        }
        per_param.insert(p, stats::summarize(values));
    }
    let values = fs
        .schema()
        .into_iter()
        .map(|key| match key {
            FeatureKey::Mwd(p, stat) => per_param[&p].get(stat),
            FeatureKey::Geometric(ParameterId::Overburden) => s.overburden_m,
            FeatureKey::Geometric(_) => s.tunnel_width_m,
        })
        .collect();
    Ok(FeatureVector {
        section_id: s.section_id.clone(),
        schema: fs,
        values,
    })
}

/// Selects the columns of `fs` out of a vector with the `all` schema.
pub fn project_feature_set(v: &FeatureVector, fs: FeatureSetId) -> Result<FeatureVector> {
    if v.schema != FeatureSetId::All {
        return Err(Error::invalid(
            "schema",
            format!("projection needs an `all` vector, got `{}`", v.schema),
        ));
    }
    let idx = projection_indices(FeatureSetId::All, fs)?;
    Ok(FeatureVector {
        section_id: v.section_id.clone(),
        schema: fs,
        values: idx.into_iter().map(|i| v.values[i]).collect(),
    })
}

/// Positions of the `to` schema columns inside the `from` schema.
pub fn projection_indices(from: FeatureSetId, to: FeatureSetId) -> Result<Vec<usize>> {
    let src = from.schema();
    to.schema()
        .into_iter()
        .map(|k| {
            src.iter().position(|s| *s == k).ok_or_else(|| {
                Error::invalid(
                    "feature_set",
                    format!("`{to}` cannot be projected from `{from}` (missing {})", k.column_name()),
                )
            })
        })
        .collect()
}
