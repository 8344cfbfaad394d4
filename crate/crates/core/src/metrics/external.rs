//! Agreement between two labelings. Every distinct value, noise included,
//! is its own category.

use std::collections::BTreeMap;

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

struct Contingency {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    cells: Vec<(usize, usize, usize)>,
}

fn contingency<A: Ord + Clone, B: Ord + Clone>(a: &[A], b: &[B]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    fn index<T: Ord + Clone>(vals: &[T]) -> BTreeMap<T, usize> {
        let mut u = vals.to_vec();
        u.sort();
        u.dedup();
        u.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
    }
    let (ia, ib) = (index(a), index(b));
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows = vec![0; ia.len()];
    let mut cols = vec![0; ib.len()];
    for (x, y) in a.iter().zip(b) {
        let (r, c) = (ia[x], ib[y]);
        *counts.entry((r, c)).or_default() += 1;
        rows[r] += 1;
        cols[c] += 1;
    }
    let cells = counts.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    Ok(Contingency { n: a.len(), rows, cols, cells })
}

fn comb2(v: usize) -> f64 {
    let v = v as f64;
    v * (v - 1.0) / 2.0
}

/// Adjusted Rand index from the pair confusion matrix; 1.0 when the
/// labelings disagree on no pair.
pub fn adjusted_rand<A: Ord + Clone, B: Ord + Clone>(a: &[A], b: &[B]) -> Result<f64> {
    let c = contingency(a, b)?;
    if c.n < 2 {
        return Err(Error::invalid("labels", "at least 2 samples are required"));
    }
    let same_both: f64 = c.cells.iter().map(|&(_, _, v)| comb2(v)).sum();
    let same_a: f64 = c.rows.iter().map(|&v| comb2(v)).sum();
    let same_b: f64 = c.cols.iter().map(|&v| comb2(v)).sum();
    let total = comb2(c.n);
    let tp = same_both;
    let fn_ = same_a - same_both;
    let fp = same_b - same_both;
    let tn = total - same_a - same_b + same_both;
    if fn_ == 0.0 && fp == 0.0 {
        return Ok(1.0);
    }
    Ok(2.0 * (tp * tn - fn_ * fp) / ((tp + fn_) * (fn_ + tn) + (tp + fp) * (fp + tn)))
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_info(c: &Contingency) -> f64 {
    let n = c.n as f64;
    c.cells
        .iter()
        .map(|&(r, k, v)| {
            let v = v as f64;
            v / n * (n * v / (c.rows[r] as f64 * c.cols[k] as f64)).ln()
        })
        .sum()
}

/// Expected mutual information under the hypergeometric permutation model.
fn expected_mutual_info(c: &Contingency) -> f64 {
    let n = c.n;
    let nf = n as f64;
    let lf = |v: usize| ln_factorial(v as u64);
    let mut emi = 0.0;
    for &ai in &c.rows {
        for &bj in &c.cols {
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            let fixed = lf(ai) + lf(bj) + lf(n - ai) + lf(n - bj) - lf(n);
            for nij in lo..=hi {
                let v = nij as f64;
                let log_p = fixed - lf(nij) - lf(ai - nij) - lf(bj - nij) - lf(n + nij - ai - bj);
                emi += v / nf * (nf * v / (ai as f64 * bj as f64)).ln() * log_p.exp();
            }
        }
    }
    emi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ami {
    /// Clipped to `[0, 1]`.
    pub value: f64,
    pub raw: f64,
}

/// Adjusted mutual information with arithmetic-mean normalisation.
pub fn adjusted_mutual_info<A: Ord + Clone, B: Ord + Clone>(a: &[A], b: &[B]) -> Result<Ami> {
    let c = contingency(a, b)?;
    if c.n < 2 {
        return Err(Error::invalid("labels", "at least 2 samples are required"));
    }
    if c.rows.len() == 1 && c.cols.len() == 1 {
        return Ok(Ami { value: 1.0, raw: 1.0 });
    }
    let mi = mutual_info(&c);
    let emi = expected_mutual_info(&c);
    let norm = 0.5 * (entropy(&c.rows, c.n) + entropy(&c.cols, c.n));
    let mut denom = norm - emi;
    denom = if denom < 0.0 { denom.min(-f64::EPSILON) } else { denom.max(f64::EPSILON) };
    let raw = (mi - emi) / denom;
    Ok(Ami { value: raw.clamp(0.0, 1.0), raw })
}

/// `sum_i sum_j |s_i - s_j| / (2 k sum s)`.
pub fn gini_index(sizes: &[usize]) -> Result<f64> {
    let total: usize = sizes.iter().sum();
    if sizes.is_empty() || total == 0 {
        return Err(Error::Empty("cluster sizes"));
    }
    let mut abs = 0.0;
    for &a in sizes {
        for &b in sizes {
            abs += (a as f64 - b as f64).abs();
        }
    }
    Ok(abs / (2.0 * sizes.len() as f64 * total as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_identity_and_permutation() {
        let a = [0, 0, 1, 1, 2, 2, -1];
        let b = [5, 5, 3, 3, 9, 9, 0];
        assert_eq!(adjusted_rand(&a, &a).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&a, &b).unwrap(), 1.0);
        assert!(adjusted_rand(&a, &b[..3]).is_err());
    }

    #[test]
    fn ari_reference_value() {
        // sklearn: adjusted_rand_score([0,0,1,1],[0,0,1,2]) = 0.5714285714285715
        let v = adjusted_rand(&[0, 0, 1, 1], &[0, 0, 1, 2]).unwrap();
        assert!((v - 0.5714285714285715).abs() < 1e-12);
    }

    #[test]
    fn ami_cases() {
        let a = [0, 0, 1, 1, 2, 2];
        assert!((adjusted_mutual_info(&a, &a).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(adjusted_mutual_info(&a, &[7; 6]).unwrap().value, 0.0);
        // sklearn: adjusted_mutual_info_score([0,0,1,1],[0,0,1,2]) = 0.5714285714285715
        let v = adjusted_mutual_info(&[0, 0, 1, 1], &[0, 0, 1, 2]).unwrap();
        assert!((v.raw - 0.5714285714285715).abs() < 1e-12, "{v:?}");
        // negative by chance: clipped, raw kept (sklearn gives -0.17423307073191513)
        let w = adjusted_mutual_info(&[0, 1, 0, 1, 2, 2, 0, 1], &[1, 1, 0, 0, 2, 0, 1, 2]).unwrap();
        assert_eq!(w.value, 0.0);
        assert!((w.raw + 0.17423307073191513).abs() < 1e-12, "{w:?}");
    }

    #[test]
    fn gini_cases() {
        assert_eq!(gini_index(&[100, 100, 100, 100]).unwrap(), 0.0);
        assert!((gini_index(&[1, 1, 1, 997]).unwrap() - 0.747).abs() < 1e-12);
        assert!(gini_index(&[]).is_err());
    }
}
