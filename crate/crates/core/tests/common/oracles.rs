//! Brute-force reference implementations, written straight from the
//! textbook definitions and sharing no code with the library.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Points = Vec<Vec<f64>>;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dist(metric: &str, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        "euclidean" => euclid(a, b),
        "manhattan" => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        "chebyshev" => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        "cosine" => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                (1.0 - dot / (na * nb)).max(0.0)
            }
        }
        other => panic!("unknown metric {other}"),
    }
}

fn members(labels: &[i32]) -> Vec<Vec<usize>> {
    let ids: BTreeSet<i32> = labels.iter().copied().filter(|&l| l >= 0).collect();
    ids.iter().map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect()).collect()
}

fn centroid(x: &Points, idx: &[usize]) -> Vec<f64> {
    let d = x[0].len();
    (0..d).map(|j| idx.iter().map(|&i| x[i][j]).sum::<f64>() / idx.len() as f64).collect()
}

/// Rousseeuw's definition; noise rows are ignored, singletons score 0.
pub fn silhouette(x: &Points, labels: &[i32], metric: &str) -> f64 {
    let groups = members(labels);
    let mut total = 0.0;
    let mut count = 0;
    for (g, own) in groups.iter().enumerate() {
        for &i in own {
            count += 1;
            if own.len() == 1 {
                continue;
            }
            let a = own.iter().filter(|&&j| j != i).map(|&j| dist(metric, &x[i], &x[j])).sum::<f64>() / (own.len() - 1) as f64;
            let b = groups
                .iter()
                .enumerate()
                .filter(|(h, _)| *h != g)
                .map(|(_, o)| o.iter().map(|&j| dist(metric, &x[i], &x[j])).sum::<f64>() / o.len() as f64)
                .fold(f64::INFINITY, f64::min);
            if a.max(b) > 0.0 {
                total += (b - a) / a.max(b);
            }
        }
    }
    total / count as f64
}

pub fn davies_bouldin(x: &Points, labels: &[i32]) -> f64 {
    let groups = members(labels);
    let cents: Vec<Vec<f64>> = groups.iter().map(|g| centroid(x, g)).collect();
    let s: Vec<f64> = groups
        .iter()
        .zip(&cents)
        .map(|(g, c)| g.iter().map(|&i| euclid(&x[i], c)).sum::<f64>() / g.len() as f64)
        .collect();
    let k = groups.len();
    (0..k)
        .map(|i| (0..k).filter(|&j| j != i).map(|j| (s[i] + s[j]) / euclid(&cents[i], &cents[j])).fold(f64::MIN, f64::max))
        .sum::<f64>()
        / k as f64
}

/// Uses the pairwise identity `sum_{i,j in C} |xi - xj|^2 = 2 |C| SS(C)`,
/// so no centroid enters the computation.
pub fn calinski_harabasz(x: &Points, labels: &[i32]) -> f64 {
    let groups = members(labels);
    let pair_ss = |idx: &[usize]| {
        let mut s = 0.0;
        for &a in idx {
            for &b in idx {
                s += x[a].iter().zip(&x[b]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
            }
        }
        s / (2.0 * idx.len() as f64)
    };
    let all: Vec<usize> = groups.iter().flatten().copied().collect();
    let total = pair_ss(&all);
    let within: f64 = groups.iter().map(|g| pair_ss(g)).sum();
    let (n, k) = (all.len() as f64, groups.len() as f64);
    ((total - within) / (k - 1.0)) / (within / (n - k))
}

/// Counts agreeing pairs directly instead of going through a contingency table.
pub fn adjusted_rand(a: &[i32], b: &[i32]) -> f64 {
    let n = a.len();
    let (mut both, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (a[i] == a[j], b[i] == b[j]);
            both += (x && y) as u8 as f64;
            sa += x as u8 as f64;
            sb += y as u8 as f64;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = sa * sb / pairs;
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn counts(v: &[i32]) -> Vec<(i32, usize)> {
    let ids: BTreeSet<i32> = v.iter().copied().collect();
    ids.into_iter().map(|c| (c, v.iter().filter(|&&x| x == c).count())).collect()
}

/// AMI with arithmetic-mean normalisation; expected MI from explicit
/// hypergeometric probabilities.
pub fn adjusted_mutual_info(a: &[i32], b: &[i32]) -> f64 {
    let n = a.len();
    let nf = n as f64;
    let (ca, cb) = (counts(a), counts(b));
    let h = |c: &[(i32, usize)]| -c.iter().map(|&(_, v)| v as f64 / nf * (v as f64 / nf).ln()).sum::<f64>();
    let mut mi = 0.0;
    for &(x, ai) in &ca {
        for &(y, bj) in &cb {
            let nij = (0..n).filter(|&i| a[i] == x && b[i] == y).count();
            if nij > 0 {
                let p = nij as f64 / nf;
                mi += p * (p / (ai as f64 / nf * bj as f64 / nf)).ln();
            }
        }
    }
    let mut emi = 0.0;
    for &(_, ai) in &ca {
        for &(_, bj) in &cb {
            for nij in 1..=ai.min(bj) {
                let p = binomial(bj, nij) * binomial(n - bj, ai - nij) / binomial(n, ai);
                if p > 0.0 {
                    emi += p * nij as f64 / nf * (nf * nij as f64 / (ai * bj) as f64).ln();
                }
            }
        }
    }
    (mi - emi) / (0.5 * (h(&ca) + h(&cb)) - emi)
}

/// Sorted-rank formula `(2 sum_i i s_(i)) / (k sum s) - (k + 1) / k`.
pub fn gini(sizes: &[usize]) -> f64 {
    let mut s: Vec<f64> = sizes.iter().map(|&v| v as f64).collect();
    s.sort_by(f64::total_cmp);
    let k = s.len() as f64;
    let weighted: f64 = s.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    2.0 * weighted / (k * s.iter().sum::<f64>()) - (k + 1.0) / k
}

/// One merge of the naive agglomerative oracle: the two member sets and the height.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveMerge {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub height: f64,
}

/// Recomputes every inter-cluster distance from the member points at each
/// step. Ties go to the pair whose smallest members are lexicographically smallest.
pub fn agglomerative(x: &Points, linkage: &str, metric: &str) -> Vec<NaiveMerge> {
    let mut clusters: Vec<Vec<usize>> = (0..x.len()).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    let link = |p: &[usize], q: &[usize]| -> f64 {
        let ds = p.iter().flat_map(|&i| q.iter().map(move |&j| (i, j))).map(|(i, j)| dist(metric, &x[i], &x[j]));
        match linkage {
            "single" => ds.fold(f64::INFINITY, f64::min),
            "complete" => ds.fold(0.0, f64::max),
            "average" => ds.sum::<f64>() / (p.len() * q.len()) as f64,
            "ward" => {
                let (np, nq) = (p.len() as f64, q.len() as f64);
                (2.0 * np * nq / (np + nq)).sqrt() * euclid(&centroid(x, p), &centroid(x, q))
            }
            other => panic!("unknown linkage {other}"),
        }
    };
    while clusters.len() > 1 {
        clusters.sort_by_key(|c| c[0]);
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = link(&clusters[i], &clusters[j]);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        let (h, i, j) = best;
        let b = clusters.remove(j);
        let a = clusters.remove(i);
        merges.push(NaiveMerge { a: a.clone(), b: b.clone(), height: h });
        let mut m = [a, b].concat();
        m.sort();
        clusters.push(m);
    }
    merges
}

/// Core distance to the `k`-th nearest other point (k capped at n - 1),
/// then mutual reachability.
pub fn mutual_reachability(x: &Points, min_samples: usize, metric: &str) -> Vec<Vec<f64>> {
    let n = x.len();
    let k = min_samples.min(n - 1);
    let core: Vec<f64> = (0..n)
        .map(|i| {
            if k == 0 {
                return 0.0;
            }
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist(metric, &x[i], &x[j])).collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect();
    (0..n)
        .map(|a| (0..n).map(|b| if a == b { 0.0 } else { dist(metric, &x[a], &x[b]).max(core[a]).max(core[b]) }).collect())
        .collect()
}

/// Kruskal with union-find; returns the sorted edge weights.
pub fn kruskal_weights(w: &[Vec<f64>]) -> Vec<f64> {
    let n = w.len();
    let mut edges: Vec<(f64, usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).map(|(a, b)| (w[a][b], a, b)).collect();
    edges.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let mut out = Vec::new();
    for (d, a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            out.push(d);
        }
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues descending with unit eigenvectors.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut out: Vec<(f64, Vec<f64>)> = (0..n).map(|i| (a[i][i], v.iter().map(|r| r[i]).collect())).collect();
    out.sort_by(|x, y| y.0.total_cmp(&x.0));
    out
}

pub fn covariance(x: &Points) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..d)
        .map(|i| (0..d).map(|j| x.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0)).collect())
        .collect()
}

/// Lloyd's algorithm seeded exactly like the library: k-means++ on a
/// ChaCha8 stream, best of `n_init` restarts with seeds `seed + r`.
pub fn kmeans_inertia(x: &Points, k: usize, n_init: usize, max_iter: usize, tol: f64, seed: u64) -> f64 {
    let n = x.len();
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    let nearest = |p: &[f64], cs: &Points| {
        let mut best = (0, f64::INFINITY);
        for (c, cv) in cs.iter().enumerate() {
            let d = sq(p, cv);
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    };
    let mut best = f64::INFINITY;
    for r in 0..n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let mut chosen = vec![rng.random_range(0..n)];
        let mut d2: Vec<f64> = x.iter().map(|p| sq(p, &x[chosen[0]])).collect();
        while chosen.len() < k {
            let total: f64 = d2.iter().sum();
            let next = if total > 0.0 {
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = None;
                for (i, &d) in d2.iter().enumerate() {
                    acc += d;
                    if acc >= u && d > 0.0 {
                        pick = Some(i);
                        break;
                    }
                }
                pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
            } else {
                rng.random_range(0..n)
            };
            chosen.push(next);
            for (i, d) in d2.iter_mut().enumerate() {
                *d = d.min(sq(&x[i], &x[next]));
            }
        }
        let mut cs: Points = chosen.iter().map(|&i| x[i].clone()).collect();
        for _ in 0..max_iter {
            let mut lab: Vec<usize> = x.iter().map(|p| nearest(p, &cs).0).collect();
            let mut dd: Vec<f64> = x.iter().map(|p| nearest(p, &cs).1).collect();
            let mut cnt = vec![0usize; k];
            lab.iter().for_each(|&l| cnt[l] += 1);
            for c in 0..k {
                if cnt[c] > 0 {
                    continue;
                }
                let mut far: Option<usize> = None;
                for i in 0..n {
                    if cnt[lab[i]] > 1 && far.is_none_or(|f| dd[i] > dd[f]) {
                        far = Some(i);
                    }
                }
                if let Some(i) = far {
                    cnt[lab[i]] -= 1;
                    lab[i] = c;
                    cnt[c] = 1;
                    dd[i] = 0.0;
                }
            }
            let mut next = vec![vec![0.0; x[0].len()]; k];
            for (i, p) in x.iter().enumerate() {
                for (j, v) in p.iter().enumerate() {
                    next[lab[i]][j] += v;
                }
            }
            for c in 0..k {
                if cnt[c] > 0 {
                    next[c].iter_mut().for_each(|v| *v /= cnt[c] as f64);
                } else {
                    next[c] = cs[c].clone();
                }
            }
            let shift: f64 = next.iter().zip(&cs).map(|(a, b)| sq(a, b)).sum();
            cs = next;
            if shift < tol {
                break;
            }
        }
        let inertia: f64 = x.iter().map(|p| nearest(p, &cs).1).sum();
        if inertia < best {
            best = inertia;
        }
    }
    best
}

/// Fronts by repeated peeling: a point belongs to the current front when no
/// remaining point dominates it (minimization).
pub fn peel_fronts(points: &Points) -> Vec<Vec<usize>> {
    let dom = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y);
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left.iter().copied().filter(|&i| !left.iter().any(|&j| dom(&points[j], &points[i]))).collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Monte-Carlo estimate of the dominated volume inside the box spanned by
/// the componentwise minimum and `reference`.
pub fn hypervolume_mc(points: &Points, reference: &[f64], samples: usize, seed: u64) -> f64 {
    let d = reference.len();
    let lo: Vec<f64> = (0..d).map(|j| points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min)).collect();
    let vol: f64 = (0..d).map(|j| reference[j] - lo[j]).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hit = 0usize;
    let mut s = vec![0.0; d];
    for _ in 0..samples {
        for j in 0..d {
            s[j] = rng.random_range(lo[j]..reference[j]);
        }
        if points.iter().any(|p| p.iter().zip(&s).all(|(a, b)| a <= b)) {
            hit += 1;
        }
    }
    vol * hit as f64 / samples as f64
}

/// Dominated area of the analytic front of (x^2, (x-2)^2) w.r.t. `r`, by
/// composite Simpson on the attainment curve.
pub fn toy_front_hypervolume(r: (f64, f64)) -> f64 {
    let g = |t: f64| if t <= 4.0 { (t.sqrt() - 2.0).powi(2) } else { 0.0 };
    let m = 200_000;
    let h = r.0 / m as f64;
    let f = |t: f64| r.1 - g(t).min(r.1);
    let mut s = f(0.0) + f(r.0);
    for i in 1..m {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
