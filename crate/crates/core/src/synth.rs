//! Synthetic MWD sections with planted rock-type signatures.
//!
//! Every reading is skew-normal around `mean + section offset + hole offset`,
//! where the offsets are Gaussian with standard deviation
//! `section_jitter * spread` and `hole_jitter * spread`. The skew-normal
//! location is shifted so that `mean` is the distribution mean.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, SkewNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{ParameterId, SectionSample};
use crate::error::{Error, Result};

pub const OUTLIER_TAG: &str = "outlier";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueDistribution {
    pub mean: f64,
    pub spread: f64,
    #[serde(default)]
    pub skew: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub name: String,
    pub sections: usize,
    pub parameters: BTreeMap<ParameterId, ValueDistribution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeologyScenario {
    pub name: String,
    pub seed: u64,
    pub tunnel_id: String,
    pub archetypes: Vec<Archetype>,
    pub holes_per_section: usize,
    pub values_per_hole: usize,
    #[serde(default = "default_section_jitter")]
    pub section_jitter: f64,
    #[serde(default = "default_hole_jitter")]
    pub hole_jitter: f64,
    pub overburden_m: UniformRange,
    pub tunnel_width_m: UniformRange,
    #[serde(default)]
    pub noise_fraction: f64,
    /// Minimum pooled-spread separation demanded between every archetype pair.
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
    /// Number of parameters on which each pair must be that far apart.
    #[serde(default = "default_min_separating_parameters")]
    pub min_separating_parameters: usize,
}

fn default_section_jitter() -> f64 {
    0.3
}
fn default_hole_jitter() -> f64 {
    0.2
}
fn default_min_separation() -> f64 {
    2.0
}
fn default_min_separating_parameters() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub section_id: String,
    pub archetype: String,
    pub outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub seed: u64,
    pub n_sections: usize,
    pub readings_per_parameter: usize,
    pub sections_per_archetype: BTreeMap<String, usize>,
    pub outliers: Vec<String>,
    pub sections: Vec<ManifestEntry>,
}

fn dist(mean: f64, spread: f64, skew: f64) -> SkewNormal<f64> {
    let delta = skew / (1.0 + skew * skew).sqrt();
    let location = mean - spread * delta * (2.0 / std::f64::consts::PI).sqrt();
    SkewNormal::new(location, spread, skew).expect("validated spread")
}

impl GeologyScenario {
    pub fn n_sections(&self) -> usize {
        self.archetypes.iter().map(|a| a.sections).sum()
    }

    pub fn readings_per_parameter(&self) -> usize {
        self.holes_per_section * self.values_per_hole
    }

    pub fn validate(&self) -> Result<()> {
        if self.archetypes.is_empty() {
            return Err(Error::invalid("archetypes", "at least one archetype is required"));
        }
        if self.readings_per_parameter() < 2 {
            return Err(Error::invalid("values_per_hole", "each section needs at least 2 readings per parameter"));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::invalid("noise_fraction", "must be in [0, 1)"));
        }
        for (field, v) in [("section_jitter", self.section_jitter), ("hole_jitter", self.hole_jitter)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, "must be finite and non-negative"));
            }
        }
        for (field, r) in [("overburden_m", self.overburden_m), ("tunnel_width_m", self.tunnel_width_m)] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return Err(Error::invalid(field, "needs finite lo <= hi"));
            }
        }
        for a in &self.archetypes {
            for p in ParameterId::MWD {
                let d = a
                    .parameters
                    .get(&p)
                    .ok_or_else(|| Error::invalid(format!("{}.{}", a.name, p), "distribution missing"))?;
                if !(d.spread > 0.0 && d.spread.is_finite() && d.mean.is_finite() && d.skew.is_finite()) {
                    return Err(Error::invalid(format!("{}.{}", a.name, p), "needs finite mean/skew and positive spread"));
                }
            }
            if a.name == OUTLIER_TAG {
                return Err(Error::invalid("archetypes", "`outlier` is reserved"));
            }
        }
        for (i, a) in self.archetypes.iter().enumerate() {
            for b in &self.archetypes[i + 1..] {
                let separating = ParameterId::MWD
                    .iter()
                    .filter(|p| {
                        let (da, db) = (a.parameters[p], b.parameters[p]);
                        let pooled = ((da.spread.powi(2) + db.spread.powi(2)) / 2.0).sqrt();
                        (da.mean - db.mean).abs() >= self.min_separation * pooled
                    })
                    .count();
                if separating < self.min_separating_parameters {
                    return Err(Error::invalid(
                        "archetypes",
                        format!(
                            "`{}` and `{}` are separated by {} pooled spreads on only {separating} parameter(s), need {}",
                            a.name, b.name, self.min_separation, self.min_separating_parameters
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Archetype index per section and the outlier flags, fixed by the seed.
    fn layout(&self) -> (Vec<usize>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut slots: Vec<usize> = self.archetypes.iter().enumerate().flat_map(|(i, a)| std::iter::repeat_n(i, a.sections)).collect();
        slots.shuffle(&mut rng);
        let n = slots.len();
        let n_noise = (self.noise_fraction * n as f64).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut outlier = vec![false; n];
        order[..n_noise].iter().for_each(|&i| outlier[i] = true);
        (slots, outlier)
    }

    /// Broad distribution spanning every archetype, used for outlier sections.
    fn outlier_distribution(&self, p: ParameterId) -> ValueDistribution {
        let ds: Vec<ValueDistribution> = self.archetypes.iter().map(|a| a.parameters[&p]).collect();
        let lo = ds.iter().map(|d| d.mean).fold(f64::INFINITY, f64::min);
        let hi = ds.iter().map(|d| d.mean).fold(f64::NEG_INFINITY, f64::max);
        let spread = ds.iter().map(|d| d.spread).fold(0.0, f64::max);
        ValueDistribution { mean: 0.5 * (lo + hi), spread: 3.0 * spread + 0.5 * (hi - lo), skew: 0.0 }
    }

    fn section_id(&self, i: usize) -> String {
        format!("{}-{i:05}", self.tunnel_id)
    }

    fn section(&self, i: usize, archetype: usize, outlier: bool) -> SectionSample {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64 + 1);
        let a = &self.archetypes[archetype];
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut readings = BTreeMap::new();
        for p in ParameterId::MWD {
            let d = if outlier { self.outlier_distribution(p) } else { a.parameters[&p] };
            let section_shift = self.section_jitter * d.spread * std_normal.sample(&mut rng);
            let mut values = Vec::with_capacity(self.readings_per_parameter());
            for _ in 0..self.holes_per_section {
                let hole_shift = self.hole_jitter * d.spread * std_normal.sample(&mut rng);
                let sn = dist(d.mean + section_shift + hole_shift, d.spread, d.skew);
                values.extend((0..self.values_per_hole).map(|_| sn.sample(&mut rng)));
            }
            readings.insert(p, values);
        }
        let overburden_m = rng.random_range(self.overburden_m.lo..=self.overburden_m.hi);
        let tunnel_width_m = rng.random_range(self.tunnel_width_m.lo..=self.tunnel_width_m.hi);
        SectionSample {
            section_id: self.section_id(i),
            tunnel_id: self.tunnel_id.clone(),
            chainage_m: i as f64,
            readings,
            overburden_m,
            tunnel_width_m,
            rock_type: Some(a.name.clone()),
            q_class: None,
        }
    }

    pub fn manifest(&self) -> Result<Manifest> {
        self.validate()?;
        let (slots, outlier) = self.layout();
        let sections: Vec<ManifestEntry> = slots
            .iter()
            .zip(&outlier)
            .enumerate()
            .map(|(i, (&a, &o))| ManifestEntry { section_id: self.section_id(i), archetype: self.archetypes[a].name.clone(), outlier: o })
            .collect();
        Ok(Manifest {
            scenario: self.name.clone(),
            seed: self.seed,
            n_sections: slots.len(),
            readings_per_parameter: self.readings_per_parameter(),
            sections_per_archetype: self.archetypes.iter().map(|a| (a.name.clone(), a.sections)).collect(),
            outliers: sections.iter().filter(|e| e.outlier).map(|e| e.section_id.clone()).collect(),
            sections,
        })
    }

    /// Lazily yields sections in chainage order; identical to [`generate`].
    pub fn stream(&self) -> Result<SectionStream<'_>> {
        self.validate()?;
        let (slots, outlier) = self.layout();
        Ok(SectionStream { scenario: self, slots, outlier, next: 0 })
    }
}

pub struct SectionStream<'a> {
    scenario: &'a GeologyScenario,
    slots: Vec<usize>,
    outlier: Vec<bool>,
    next: usize,
}

impl Iterator for SectionStream<'_> {
    type Item = SectionSample;

    fn next(&mut self) -> Option<SectionSample> {
        let i = self.next;
        if i >= self.slots.len() {
            return None;
        }
        self.next += 1;
        Some(self.scenario.section(i, self.slots[i], self.outlier[i]))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.slots.len() - self.next;
        (rest, Some(rest))
    }
}

/// All sections (generated in parallel) plus the ground-truth manifest.
pub fn generate(scenario: &GeologyScenario) -> Result<(Vec<SectionSample>, Manifest)> {
    generate_with(scenario, |s| s)
}

/// Maps every section through `f` as it is generated, in parallel, so the
/// raw readings never need to be held all at once.
pub fn generate_with<T, F>(scenario: &GeologyScenario, f: F) -> Result<(Vec<T>, Manifest)>
where
    T: Send,
    F: Fn(SectionSample) -> T + Sync,
{
    let manifest = scenario.manifest()?;
    let (slots, outlier) = scenario.layout();
    let items = (0..slots.len()).into_par_iter().map(|i| f(scenario.section(i, slots[i], outlier[i]))).collect();
    Ok((items, manifest))
}

/// Hands sections to `f` in chainage order, `chunk` at a time; each chunk
/// is generated in parallel.
pub fn for_each_chunk<F>(scenario: &GeologyScenario, chunk: usize, mut f: F) -> Result<Manifest>
where
    F: FnMut(&[SectionSample]) -> Result<()>,
{
    let manifest = scenario.manifest()?;
    let (slots, outlier) = scenario.layout();
    let idx: Vec<usize> = (0..slots.len()).collect();
    for part in idx.chunks(chunk.max(1)) {
        let batch: Vec<SectionSample> = part.par_iter().map(|&i| scenario.section(i, slots[i], outlier[i])).collect();
        f(&batch)?;
    }
    Ok(manifest)
}

fn archetype(name: &str, sections: usize, params: [(f64, f64, f64); 8]) -> Archetype {
    Archetype {
        name: name.into(),
        sections,
        parameters: ParameterId::MWD
            .into_iter()
            .zip(params)
            .map(|(p, (mean, spread, skew))| (p, ValueDistribution { mean, spread, skew }))
            .collect(),
    }
}

/// The bundled `paper-desk` scenario: four archetypes of 500 sections each,
/// 120 holes of 40 readings per section.
pub fn paper_desk() -> GeologyScenario {
    // PenetrNorm, PenetrRMS, RotaPressNorm, RotaPressRMS, FeedPressNorm, HammerPressNorm, WaterflowNorm, WaterflowRMS
    GeologyScenario {
        name: "paper-desk".into(),
        seed: 20_240_917,
        tunnel_id: "T1".into(),
        archetypes: vec![
            archetype(
                "Gneiss",
                500,
                [(2.0, 0.3, 2.0), (0.40, 0.08, 3.0), (60.0, 6.0, 1.0), (8.0, 1.5, 2.0), (85.0, 8.0, 0.0), (180.0, 10.0, -1.0), (110.0, 15.0, 1.0), (12.0, 3.0, 2.0)],
            ),
            archetype(
                "Granite",
                500,
                [(1.4, 0.25, 2.0), (0.30, 0.08, 3.0), (72.0, 6.0, 1.0), (10.0, 1.5, 2.0), (102.0, 8.0, 0.0), (195.0, 10.0, -1.0), (105.0, 15.0, 1.0), (11.0, 3.0, 2.0)],
            ),
            archetype(
                "Rhomb porphyry",
                500,
                [(2.8, 0.35, 2.0), (0.55, 0.08, 3.0), (52.0, 6.0, 1.0), (7.0, 1.5, 2.0), (66.0, 8.0, 0.0), (170.0, 10.0, -1.0), (115.0, 15.0, 1.0), (13.0, 3.0, 2.0)],
            ),
            archetype(
                "Shale",
                500,
                [(3.6, 0.4, 2.0), (0.75, 0.08, 3.0), (45.0, 6.0, 1.0), (12.0, 1.5, 2.0), (60.0, 8.0, 0.0), (160.0, 10.0, -1.0), (100.0, 15.0, 1.0), (15.0, 3.0, 2.0)],
            ),
        ],
        holes_per_section: 120,
        values_per_hole: 40,
        section_jitter: default_section_jitter(),
        hole_jitter: default_hole_jitter(),
        overburden_m: UniformRange { lo: 10.0, hi: 180.0 },
        tunnel_width_m: UniformRange { lo: 8.0, hi: 16.0 },
        noise_fraction: 0.01,
        min_separation: default_min_separation(),
        min_separating_parameters: default_min_separating_parameters(),
    }
}
