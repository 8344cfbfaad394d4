//! Long-format raw CSV ingestion.
//!
//! Raw file columns: `tunnel_id,section_id,chainage_m,parameter,value`.
//! Sidecar sections file: `section_id,overburden_m,tunnel_width_m,rock_type,q_class`
//! with empty label cells meaning "no label".

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{ParameterId, SectionSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    /// Accepted sections ordered by `(tunnel_id, chainage_m, section_id)`.
    pub sections: Vec<SectionSample>,
    /// Rows dropped because the value was NaN or infinite.
    pub rejected_rows: usize,
    /// `(section_id, reason)` for every section that was dropped.
    pub rejected_sections: Vec<(String, String)>,
}

struct SectionMeta {
    overburden_m: f64,
    tunnel_width_m: f64,
    rock_type: Option<String>,
    q_class: Option<String>,
}

struct Partial {
    tunnel_id: String,
    chainage_m: f64,
    readings: BTreeMap<ParameterId, Vec<f64>>,
}

fn line_of(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map_or(fallback, |p| p.line() as usize)
}

fn parse_f64(s: &str, row: usize, col: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
        row,
        reason: format!("column `{col}`: `{s}` is not a number"),
    })
}

fn non_empty(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

fn read_sections_meta<R: Read>(src: R) -> Result<BTreeMap<String, SectionMeta>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(src);
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, i + 2);
        if rec.len() < 3 {
            return Err(Error::MalformedRow {
                row,
                reason: format!("sections file expects at least 3 columns, got {}", rec.len()),
            });
        }
        let overburden_m = parse_f64(&rec[1], row, "overburden_m")?;
        let tunnel_width_m = parse_f64(&rec[2], row, "tunnel_width_m")?;
        if !(overburden_m.is_finite() && overburden_m >= 0.0) {
            return Err(Error::MalformedRow { row, reason: "overburden_m must be finite and >= 0".into() });
        }
        if !(tunnel_width_m.is_finite() && tunnel_width_m > 0.0) {
            return Err(Error::MalformedRow { row, reason: "tunnel_width_m must be finite and > 0".into() });
        }
        out.insert(
            rec[0].trim().to_string(),
            SectionMeta {
                overburden_m,
                tunnel_width_m,
                rock_type: rec.get(3).and_then(non_empty),
                q_class: rec.get(4).and_then(non_empty),
            },
        );
    }
    Ok(out)
}

/// Groups long-format readings into sections and attaches the sidecar metadata.
pub fn ingest_sections<R1: Read, R2: Read>(long: R1, sections: R2) -> Result<Ingested> {
    let meta = read_sections_meta(sections)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(long);
    let mut partial: BTreeMap<String, Partial> = BTreeMap::new();
    let mut rejected_rows = 0;

    let mut rec = csv::StringRecord::new();
    let mut i = 0;
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let row = e.position().map_or(i + 2, |p| p.line() as usize);
                return Err(Error::MalformedRow { row, reason: e.to_string() });
            }
        }
        i += 1;
        let row = line_of(&rec, i + 1);
        if rec.len() != 5 {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected 5 columns, got {}", rec.len()),
            });
        }
        let param: ParameterId = rec[3].trim().parse().map_err(|_| Error::MalformedRow {
            row,
            reason: format!("unknown parameter `{}`", &rec[3]),
        })?;
        if !param.is_mwd() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("`{param}` is geometric and belongs in the sections file"),
            });
        }
        let chainage_m = parse_f64(&rec[2], row, "chainage_m")?;
        let value = parse_f64(&rec[4], row, "value")?;
        if !value.is_finite() || !chainage_m.is_finite() {
            rejected_rows += 1;
            continue;
        }
        let section_id = rec[1].trim();
        let tunnel_id = rec[0].trim();
        let entry = partial.entry(section_id.to_string()).or_insert_with(|| Partial {
            tunnel_id: tunnel_id.to_string(),
            chainage_m,
            readings: BTreeMap::new(),
        });
        if entry.tunnel_id != tunnel_id || entry.chainage_m != chainage_m {
            return Err(Error::MalformedRow {
                row,
                reason: format!("section `{section_id}` changes tunnel or chainage"),
            });
        }
        entry.readings.entry(param).or_default().push(value);
    }

    let mut sections = Vec::with_capacity(partial.len());
    let mut rejected_sections = Vec::new();
    for (section_id, p) in partial {
        if let Some((param, vals)) = p.readings.iter().find(|(_, v)| v.len() < 2) {
            rejected_sections.push((
                section_id,
                format!("{param} has {} reading(s); at least 2 required", vals.len()),
            ));
            continue;
        }
        let Some(m) = meta.get(&section_id) else {
            rejected_sections.push((section_id, "no entry in sections file".into()));
            continue;
        };
        sections.push(SectionSample {
            section_id,
            tunnel_id: p.tunnel_id,
            chainage_m: p.chainage_m,
            readings: p.readings,
            overburden_m: m.overburden_m,
            tunnel_width_m: m.tunnel_width_m,
            rock_type: m.rock_type.clone(),
            q_class: m.q_class.clone(),
        });
    }
    sections.sort_by(|a, b| {
        a.tunnel_id
            .cmp(&b.tunnel_id)
            .then(a.chainage_m.total_cmp(&b.chainage_m))
            .then_with(|| a.section_id.cmp(&b.section_id))
    });
    Ok(Ingested { sections, rejected_rows, rejected_sections })
}

/// Reads `raw.csv` and `sections.csv` from a directory.
pub fn ingest_sections_from_paths(long: &Path, sections: &Path) -> Result<Ingested> {
    let l = File::open(long).map_err(|e| Error::io(long, e))?;
    let s = File::open(sections).map_err(|e| Error::io(sections, e))?;
    ingest_sections(std::io::BufReader::new(l), std::io::BufReader::new(s))
}

/// Incremental long-CSV writer, for sections produced one batch at a time.
pub struct LongCsvWriter<W: Write> {
    w: csv::Writer<W>,
}

impl<W: Write> LongCsvWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tunnel_id", "section_id", "chainage_m", "parameter", "value"])?;
        Ok(LongCsvWriter { w })
    }

    pub fn push(&mut self, s: &SectionSample) -> Result<()> {
        let chainage = s.chainage_m.to_string();
        for (p, vals) in &s.readings {
            for v in vals {
                self.w.write_record([
                    s.tunnel_id.as_str(),
                    s.section_id.as_str(),
                    chainage.as_str(),
                    p.name(),
                    v.to_string().as_str(),
                ])?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io("<long csv>", e))
    }
}

pub fn write_long_csv<'a, W: Write>(
    sections: impl IntoIterator<Item = &'a SectionSample>,
    out: W,
) -> Result<()> {
    let mut w = LongCsvWriter::new(out)?;
    for s in sections {
        w.push(s)?;
    }
    w.finish()
}

pub fn write_sections_csv<'a, W: Write>(
    sections: impl IntoIterator<Item = &'a SectionSample>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["section_id", "overburden_m", "tunnel_width_m", "rock_type", "q_class"])?;
    for s in sections {
        w.write_record([
            s.section_id.clone(),
            s.overburden_m.to_string(),
            s.tunnel_width_m.to_string(),
            s.rock_type.clone().unwrap_or_default(),
            s.q_class.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sections csv>", e))?;
    Ok(())
}
