//! Per-parameter summary statistics.
//!
//! Variance is the unbiased (n-1) estimator, skewness the adjusted
//! Fisher-Pearson coefficient and kurtosis the bias-corrected excess kurtosis.
//! Values are sorted before any reduction so the result does not depend on
//! reading order.

use super::StatKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl Summary {
    pub fn get(&self, kind: StatKind) -> f64 {
        match kind {
            StatKind::Mean => self.mean,
            StatKind::Median => self.median,
            StatKind::StdDev => self.std_dev,
            StatKind::Variance => self.variance,
            StatKind::Skewness => self.skewness,
            StatKind::Kurtosis => self.kurtosis,
        }
    }
}

/// Median of an already sorted slice; even lengths average the central pair.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Summarises at least two finite readings.
pub fn summarize(values: &[f64]) -> Summary {
    assert!(values.len() >= 2, "statistics need at least two readings");
    let v = sorted_copy(values);
    let n = v.len() as f64;
    let median = median_sorted(&v);
    if v[0] == v[v.len() - 1] {
        return Summary {
            mean: v[0],
            median,
            std_dev: 0.0,
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        };
    }
    let mean = v.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in &v {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (n - 1.0);
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);

    let skewness = if v.len() < 3 || m2 == 0.0 {
        0.0
    } else {
        let g1 = m3 / m2.powf(1.5);
        g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
    };
    let kurtosis = if v.len() < 4 || m2 == 0.0 {
        0.0
    } else {
        let g2 = m4 / (m2 * m2) - 3.0;
        ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
    };
    Summary {
        mean,
        median,
        std_dev: variance.sqrt(),
        variance,
        skewness,
        kurtosis,
    }
}
