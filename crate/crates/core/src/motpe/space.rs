//! Search-space dimensions and parameter assignments.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Domain {
    Real {
        lo: f64,
        hi: f64,
        #[serde(default)]
        log: bool,
    },
    Integer {
        lo: i64,
        hi: i64,
    },
    Categorical {
        choices: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
}

impl Dimension {
    pub fn real(name: &str, lo: f64, hi: f64) -> Self {
        Dimension { name: name.into(), domain: Domain::Real { lo, hi, log: false } }
    }

    pub fn log_real(name: &str, lo: f64, hi: f64) -> Self {
        Dimension { name: name.into(), domain: Domain::Real { lo, hi, log: true } }
    }

    pub fn integer(name: &str, lo: i64, hi: i64) -> Self {
        Dimension { name: name.into(), domain: Domain::Integer { lo, hi } }
    }

    pub fn categorical(name: &str, choices: &[&str]) -> Self {
        Dimension { name: name.into(), domain: Domain::Categorical { choices: choices.iter().map(|s| s.to_string()).collect() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            ParamValue::Cat(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Cat(s) => Some(s),
            _ => None,
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        let s = SearchSpace { dimensions };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for d in &self.dimensions {
            if !names.insert(d.name.as_str()) {
                return Err(Error::invalid(&d.name, "duplicate dimension name"));
            }
            match &d.domain {
                Domain::Real { lo, hi, log } => {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::invalid(&d.name, format!("needs finite lo < hi, got [{lo}, {hi}]")));
                    }
                    if *log && *lo <= 0.0 {
                        return Err(Error::invalid(&d.name, "log scale needs lo > 0"));
                    }
                }
                Domain::Integer { lo, hi } => {
                    if lo >= hi {
                        return Err(Error::invalid(&d.name, format!("needs lo < hi, got [{lo}, {hi}]")));
                    }
                }
                Domain::Categorical { choices } => {
                    if choices.is_empty() {
                        return Err(Error::invalid(&d.name, "no choices"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Params) -> bool {
        self.dimensions.iter().all(|d| match (p.get(&d.name), &d.domain) {
            (Some(ParamValue::Real(v)), Domain::Real { lo, hi, .. }) => v >= lo && v <= hi,
            (Some(ParamValue::Int(v)), Domain::Integer { lo, hi }) => v >= lo && v <= hi,
            (Some(ParamValue::Cat(v)), Domain::Categorical { choices }) => choices.contains(v),
            _ => false,
        })
    }

    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Params {
        self.dimensions
            .iter()
            .map(|d| {
                let v = match &d.domain {
                    Domain::Real { lo, hi, log: false } => ParamValue::Real(rng.random_range(*lo..=*hi)),
                    Domain::Real { lo, hi, log: true } => ParamValue::Real(rng.random_range(lo.ln()..=hi.ln()).exp().clamp(*lo, *hi)),
                    Domain::Integer { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
                    Domain::Categorical { choices } => ParamValue::Cat(choices[rng.random_range(0..choices.len())].clone()),
                };
                (d.name.clone(), v)
            })
            .collect()
    }

    /// Number of distinct points when every dimension is categorical.
    pub fn categorical_cardinality(&self) -> Option<usize> {
        self.dimensions.iter().try_fold(1usize, |acc, d| match &d.domain {
            Domain::Categorical { choices } => Some(acc.saturating_mul(choices.len())),
            _ => None,
        })
    }
}
