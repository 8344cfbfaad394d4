//! Wide feature tables: one row per section, one column per schema entry.

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::Array2;

use super::{projection_indices, FeatureKey, FeatureSetId, FeatureVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub schema: FeatureSetId,
    pub section_ids: Vec<String>,
    /// `n_sections x schema.len()`.
    pub values: Array2<f64>,
}

/// A named categorical label per row, e.g. `rock_type`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub name: String,
    pub values: Vec<Option<String>>,
}

impl FeatureTable {
    pub fn from_vectors(vectors: &[FeatureVector]) -> Result<Self> {
        let first = vectors.first().ok_or(Error::Empty("feature vectors"))?;
        let schema = first.schema;
        let d = schema.len();
        let mut values = Array2::zeros((vectors.len(), d));
        for (i, v) in vectors.iter().enumerate() {
            if v.schema != schema {
                return Err(Error::invalid(
                    "schema",
                    format!("mixed schemas `{}` and `{}`", schema, v.schema),
                ));
            }
            values.row_mut(i).assign(&ndarray::ArrayView1::from(&v.values));
        }
        Ok(FeatureTable {
            schema,
            section_ids: vectors.iter().map(|v| v.section_id.clone()).collect(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.section_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.section_ids.is_empty()
    }

    pub fn columns(&self) -> Vec<FeatureKey> {
        self.schema.schema()
    }

    pub fn column_index(&self, key: FeatureKey) -> Option<usize> {
        self.columns().iter().position(|k| *k == key)
    }

    /// Restricts columns to `fs`; identity when the schema already matches.
    pub fn project(&self, fs: FeatureSetId) -> Result<FeatureTable> {
        if fs == self.schema {
            return Ok(self.clone());
        }
        let idx = projection_indices(self.schema, fs)?;
        Ok(FeatureTable {
            schema: fs,
            section_ids: self.section_ids.clone(),
            values: self.values.select(ndarray::Axis(1), &idx),
        })
    }
}

pub fn write_wide_csv<W: Write>(table: &FeatureTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["section_id".to_string()];
    header.extend(table.columns().into_iter().map(FeatureKey::column_name));
    w.write_record(&header)?;
    for (i, id) in table.section_ids.iter().enumerate() {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(id.clone());
        rec.extend(table.values.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<wide csv>", e))?;
    Ok(())
}

pub fn read_wide_csv<R: Read>(src: R) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(src);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("section_id") {
        return Err(Error::MalformedRow { row: 1, reason: "first column must be `section_id`".into() });
    }
    let keys = header
        .iter()
        .skip(1)
        .map(FeatureKey::parse_column)
        .collect::<Result<Vec<_>>>()?;
    let schema = FeatureSetId::from_columns(&keys).ok_or_else(|| Error::MalformedRow {
        row: 1,
        reason: "header does not match any feature set schema".into(),
    })?;
    let d = keys.len();
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map_or(i + 2, |p| p.line() as usize);
        if rec.len() != d + 1 {
            return Err(Error::MalformedRow { row, reason: format!("expected {} columns, got {}", d + 1, rec.len()) });
        }
        ids.push(rec[0].to_string());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::MalformedRow {
                row,
                reason: format!("column `{}`: `{cell}` is not a number", keys[j].column_name()),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow { row, reason: format!("non-finite value in `{}`", keys[j].column_name()) });
            }
            flat.push(v);
        }
    }
    let values = Array2::from_shape_vec((ids.len(), d), flat).expect("shape checked per row");
    Ok(FeatureTable { schema, section_ids: ids, values })
}

/// Reads `rock_type` and `q_class` from a sections sidecar, aligned to `section_ids`.
/// Sections absent from the file get no label.
pub fn read_label_sets<R: Read>(src: R, section_ids: &[String]) -> Result<Vec<LabelSet>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(src);
    let header = rdr.headers()?.clone();
    let label_cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| matches!(*h, "rock_type" | "q_class"))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let mut by_id: HashMap<String, Vec<Option<String>>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let labels = label_cols
            .iter()
            .map(|(i, _)| rec.get(*i).map(str::trim).filter(|s| !s.is_empty()).map(str::to_string))
            .collect();
        by_id.insert(rec[0].trim().to_string(), labels);
    }
    Ok(label_cols
        .iter()
        .enumerate()
        .map(|(k, (_, name))| LabelSet {
            name: name.clone(),
            values: section_ids
                .iter()
                .map(|id| by_id.get(id).and_then(|l| l[k].clone()))
                .collect(),
        })
        .collect())
}
