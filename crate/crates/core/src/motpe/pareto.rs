//! Dominance ranking, hypervolume and hypervolume subset selection.
//!
//! Everything here works on minimisation vectors; callers flip maximised
//! objectives with [`to_minimization`] first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

pub fn to_minimization(values: &[f64], directions: &[Direction]) -> Vec<f64> {
    values
        .iter()
        .zip(directions)
        .map(|(&v, d)| if *d == Direction::Maximize { -v } else { v })
        .collect()
}

/// `a` is no worse everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Fronts of point indices; front 0 is the Pareto set.
pub fn nondominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&points[i], &points[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Worst value plus 10% of the observed span in every objective.
pub fn reference_point(points: &[Vec<f64>]) -> Vec<f64> {
    let m = points.first().map_or(0, Vec::len);
    (0..m)
        .map(|k| {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            if span > 0.0 {
                hi + 0.1 * span
            } else {
                hi + 0.1 * hi.abs().max(1.0)
            }
        })
        .collect()
}

fn hv_recursive(points: &mut [Vec<f64>], reference: &[f64], dim: usize) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    match dim {
        1 => reference[0] - points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => {
            points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut area = 0.0;
            let mut best_y = reference[1];
            for p in points.iter() {
                if p[1] < best_y {
                    area += (reference[0] - p[0]) * (best_y - p[1]);
                    best_y = p[1];
                }
            }
            area
        }
        _ => {
            // slice along the last objective
            let last = dim - 1;
            points.sort_by(|a, b| a[last].total_cmp(&b[last]));
            let mut volume = 0.0;
            for k in 0..points.len() {
                let top = if k + 1 < points.len() { points[k + 1][last] } else { reference[last] };
                let depth = top - points[k][last];
                if depth > 0.0 {
                    let mut slice: Vec<Vec<f64>> = points[..=k].to_vec();
                    volume += depth * hv_recursive(&mut slice, reference, last);
                }
            }
            volume
        }
    }
}

/// Dominated volume between `points` and `reference` (minimisation).
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    for (i, p) in points.iter().enumerate() {
        if p.len() != reference.len() {
            return Err(Error::DimensionMismatch { expected: reference.len(), got: p.len() });
        }
        if p.iter().zip(reference).any(|(a, r)| !(a <= r)) {
            return Err(Error::NotDominatingReference { index: i });
        }
    }
    if reference.is_empty() {
        return Ok(0.0);
    }
    let front = nondominated_sort(points).into_iter().next().unwrap_or_default();
    let mut pts: Vec<Vec<f64>> = front.iter().map(|&i| points[i].clone()).collect();
    Ok(hv_recursive(&mut pts, reference, reference.len()))
}

/// Greedy hypervolume subset selection of `k` points; ties go to the
/// smaller `ids` entry. Returns positions into `points`.
pub fn hssp_select(points: &[Vec<f64>], ids: &[usize], k: usize, reference: &[f64]) -> Result<Vec<usize>> {
    let k = k.min(points.len());
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut current = 0.0;
    while chosen.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..points.len() {
            if chosen.contains(&i) {
                continue;
            }
            let mut set: Vec<Vec<f64>> = chosen.iter().map(|&c| points[c].clone()).collect();
            set.push(points[i].clone());
            let gain = hypervolume(&set, reference)? - current;
            let better = match best {
                None => true,
                Some((g, b)) => gain > g || (gain == g && ids[i] < ids[b]),
            };
            if better {
                best = Some((gain, i));
            }
        }
        let (gain, i) = best.expect("k <= points.len()");
        current += gain;
        chosen.push(i);
    }
    Ok(chosen)
}
