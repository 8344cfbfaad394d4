//! Parzen estimators and the MOTPE suggestion step.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

use super::pareto::{hssp_select, nondominated_sort, reference_point};
use super::space::{Domain, Dimension, ParamValue, Params, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub n_startup: usize,
    pub gamma: f64,
    pub n_candidates: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n_startup: 10, gamma: 0.10, n_candidates: 24 }
    }
}

/// A completed observation: parameters and minimisation-normalised values.
pub struct Observation<'a> {
    pub id: usize,
    pub params: &'a Params,
    pub values: Vec<f64>,
}

const MIN_BANDWIDTH_FRACTION: f64 = 0.01;
const MAX_REJECTIONS: usize = 64;

fn phi(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Truncated-Gaussian mixture on `[lo, hi]` with a broad prior component.
struct NumericParzen {
    lo: f64,
    hi: f64,
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    log_norm: Vec<f64>,
}

impl NumericParzen {
    fn fit(obs: &[f64], lo: f64, hi: f64) -> Self {
        let range = hi - lo;
        let n = obs.len();
        let bandwidth = if n >= 2 {
            let mean = obs.iter().sum::<f64>() / n as f64;
            let sd = (obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            if sd > 0.0 {
                1.06 * sd * (n as f64).powf(-0.2)
            } else {
                range / n as f64
            }
        } else {
            range / n.max(1) as f64
        };
        let bandwidth = bandwidth.clamp(MIN_BANDWIDTH_FRACTION * range, range);
        let mut mus: Vec<f64> = obs.to_vec();
        let mut sigmas = vec![bandwidth; n];
        mus.push(0.5 * (lo + hi));
        sigmas.push(range);
        let log_norm = mus
            .iter()
            .zip(&sigmas)
            .map(|(&m, &s)| {
                let mass = (phi((hi - m) / s) - phi((lo - m) / s)).max(1e-300);
                -(s * mass * (2.0 * std::f64::consts::PI).sqrt()).ln()
            })
            .collect();
        NumericParzen { lo, hi, mus, sigmas, log_norm }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let k = rng.random_range(0..self.mus.len());
        for _ in 0..MAX_REJECTIONS {
            let z: f64 = rng.sample(StandardNormal);
            let v = self.mus[k] + self.sigmas[k] * z;
            if v >= self.lo && v <= self.hi {
                return v;
            }
        }
        self.mus[k].clamp(self.lo, self.hi)
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .mus
            .iter()
            .zip(&self.sigmas)
            .zip(&self.log_norm)
            .map(|((m, s), ln)| ln - 0.5 * ((x - m) / s).powi(2))
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln() - (terms.len() as f64).ln()
    }
}

struct CategoricalParzen {
    probs: Vec<f64>,
}

impl CategoricalParzen {
    fn fit(obs: &[usize], k: usize) -> Self {
        let mut counts = vec![1.0; k];
        obs.iter().for_each(|&c| counts[c] += 1.0);
        let total: f64 = counts.iter().sum();
        CategoricalParzen { probs: counts.into_iter().map(|c| c / total).collect() }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

enum Estimator {
    Numeric(NumericParzen),
    Categorical(CategoricalParzen),
}

/// Internal coordinate used by the estimators: log for log-scaled reals,
/// the value itself otherwise, and the choice index for categoricals.
fn internal(d: &Dimension, v: &ParamValue) -> f64 {
    match (&d.domain, v) {
        (Domain::Real { log: true, .. }, ParamValue::Real(x)) => x.ln(),
        (Domain::Categorical { choices }, ParamValue::Cat(c)) => choices.iter().position(|x| x == c).unwrap_or(0) as f64,
        (_, v) => v.as_f64().unwrap_or(0.0),
    }
}

fn internal_bounds(d: &Dimension) -> (f64, f64) {
    match &d.domain {
        Domain::Real { lo, hi, log: true } => (lo.ln(), hi.ln()),
        Domain::Real { lo, hi, log: false } => (*lo, *hi),
        Domain::Integer { lo, hi } => (*lo as f64 - 0.5, *hi as f64 + 0.5),
        Domain::Categorical { choices } => (0.0, choices.len() as f64),
    }
}

fn fit(d: &Dimension, values: &[f64]) -> Estimator {
    match &d.domain {
        Domain::Categorical { choices } => {
            let idx: Vec<usize> = values.iter().map(|&v| v as usize).collect();
            Estimator::Categorical(CategoricalParzen::fit(&idx, choices.len()))
        }
        _ => {
            let (lo, hi) = internal_bounds(d);
            Estimator::Numeric(NumericParzen::fit(values, lo, hi))
        }
    }
}

fn log_density(e: &Estimator, x: f64) -> f64 {
    match e {
        Estimator::Numeric(p) => p.log_pdf(x),
        Estimator::Categorical(c) => c.probs[x as usize].ln(),
    }
}

fn draw<R: Rng>(d: &Dimension, e: &Estimator, rng: &mut R) -> (f64, ParamValue) {
    match (&d.domain, e) {
        (Domain::Categorical { choices }, Estimator::Categorical(c)) => {
            let i = c.sample(rng);
            (i as f64, ParamValue::Cat(choices[i].clone()))
        }
        (Domain::Integer { lo, hi }, Estimator::Numeric(p)) => {
            let v = (p.sample(rng).round() as i64).clamp(*lo, *hi);
            (v as f64, ParamValue::Int(v))
        }
        (Domain::Real { lo, hi, log }, Estimator::Numeric(p)) => {
            let u = p.sample(rng);
            let v = if *log { u.exp().clamp(*lo, *hi) } else { u.clamp(*lo, *hi) };
            (u, ParamValue::Real(v))
        }
        _ => unreachable!("estimator kind follows the domain"),
    }
}

/// Splits observations into the good (`ceil(gamma * n)`) and bad sets:
/// whole nondomination ranks first, then greedy hypervolume picks in the
/// rank that straddles the cut.
pub fn split_good_bad(obs: &[Observation<'_>], gamma: f64) -> (Vec<usize>, Vec<usize>) {
    let n = obs.len();
    let n_good = ((gamma * n as f64).ceil() as usize).clamp(1, n);
    let points: Vec<Vec<f64>> = obs.iter().map(|o| o.values.clone()).collect();
    let fronts = nondominated_sort(&points);
    let reference = reference_point(&points);
    let mut good = Vec::with_capacity(n_good);
    for front in fronts {
        if good.len() + front.len() <= n_good {
            good.extend(front);
            continue;
        }
        let need = n_good - good.len();
        let pts: Vec<Vec<f64>> = front.iter().map(|&i| points[i].clone()).collect();
        let ids: Vec<usize> = front.iter().map(|&i| obs[i].id).collect();
        let picks = hssp_select(&pts, &ids, need, &reference).unwrap_or_else(|_| (0..need).collect());
        good.extend(picks.into_iter().map(|p| front[p]));
        break;
    }
    good.sort_unstable();
    let bad = (0..n).filter(|i| good.binary_search(i).is_err()).collect();
    (good, bad)
}

pub fn suggest<R: Rng>(space: &SearchSpace, history: &[Observation<'_>], cfg: &SamplerConfig, rng: &mut R) -> Params {
    if history.len() < cfg.n_startup.max(2) {
        return space.sample_uniform(rng);
    }
    if let Some(card) = space.categorical_cardinality() {
        let mut seen: Vec<&Params> = history.iter().map(|o| o.params).collect();
        seen.sort_by_key(|p| serde_json::to_string(p).unwrap_or_default());
        seen.dedup();
        if seen.len() >= card {
            return space.sample_uniform(rng);
        }
    }
    let (good, bad) = split_good_bad(history, cfg.gamma);
    let estimators: Vec<(Estimator, Estimator)> = space
        .dimensions
        .iter()
        .map(|d| {
            let column = |set: &[usize]| -> Vec<f64> {
                set.iter()
                    .filter_map(|&i| history[i].params.get(&d.name).map(|v| internal(d, v)))
                    .collect()
            };
            (fit(d, &column(&good)), fit(d, &column(&bad)))
        })
        .collect();

    let mut best: Option<(f64, Params)> = None;
    for _ in 0..cfg.n_candidates.max(1) {
        let mut score = 0.0;
        let mut params = Params::new();
        for (d, (l, g)) in space.dimensions.iter().zip(&estimators) {
            let (x, v) = draw(d, l, rng);
            score += log_density(l, x) - log_density(g, x);
            params.insert(d.name.clone(), v);
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, params));
        }
    }
    best.expect("at least one candidate").1
}
