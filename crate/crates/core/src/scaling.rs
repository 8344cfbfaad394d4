//! Column-wise feature scaling.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data_model::stats::{median_sorted, quantile_sorted, sorted_copy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    #[default]
    MinMax,
    Standard,
    Robust,
}

impl ScalerKind {
    pub const ALL: [ScalerKind; 3] = [ScalerKind::MinMax, ScalerKind::Standard, ScalerKind::Robust];

    pub fn name(self) -> &'static str {
        match self {
            ScalerKind::MinMax => "minmax",
            ScalerKind::Standard => "standard",
            ScalerKind::Robust => "robust",
        }
    }
}

impl fmt::Display for ScalerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScalerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName { kind: "scaler", value: s.to_string() })
    }
}

/// Per-column affine map `x -> (x - center) / spread`.
///
/// `center`/`spread` are min/range, mean/population std or median/IQR
/// depending on the scaler. A zero spread is stored as 1, so the fitted
/// column maps to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub center: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerSpec {
    pub kind: ScalerKind,
    pub columns: Vec<ColumnScale>,
}

fn nonzero(spread: f64) -> f64 {
    if spread > 0.0 && spread.is_finite() {
        spread
    } else {
        1.0
    }
}

pub fn fit_scaler(x: ArrayView2<'_, f64>, kind: ScalerKind) -> Result<ScalerSpec> {
    let n = x.nrows();
    if n == 0 || x.ncols() == 0 {
        return Err(Error::Empty("scaler input"));
    }
    if n < 2 {
        return Err(Error::invalid("scaler input", "at least 2 rows are required"));
    }
    let columns = x
        .axis_iter(Axis(1))
        .map(|col| match kind {
            ScalerKind::MinMax => {
                let (lo, hi) = col
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                ColumnScale { center: lo, spread: nonzero(hi - lo) }
            }
            ScalerKind::Standard => {
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                ColumnScale { center: mean, spread: nonzero(var.sqrt()) }
            }
            ScalerKind::Robust => {
                let sorted = sorted_copy(&col.to_vec());
                let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
                ColumnScale { center: median_sorted(&sorted), spread: nonzero(iqr) }
            }
        })
        .collect();
    Ok(ScalerSpec { kind, columns })
}

impl ScalerSpec {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.ncols() });
        }
        let mut out = x.to_owned();
        for (mut col, c) in out.axis_iter_mut(Axis(1)).zip(&self.columns) {
            col.mapv_inplace(|v| (v - c.center) / c.spread);
        }
        Ok(out)
    }
}
