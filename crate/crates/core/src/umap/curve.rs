//! Fit of the low-dimensional similarity curve `q(d) = 1 / (1 + a d^(2b))`.
//!
//! `(a, b)` are least-squares fitted on 300 points of `d in [0, 3 * spread]`
//! against the target `1` for `d < min_dist` and `exp(-(d - min_dist) / spread)`
//! beyond, using Levenberg-Marquardt.

const N_POINTS: usize = 300;

fn residuals_and_jacobian(xs: &[f64], ys: &[f64], a: f64, b: f64) -> (f64, [[f64; 2]; 2], [f64; 2]) {
    let mut sse = 0.0;
    let mut jtj = [[0.0; 2]; 2];
    let mut jtr = [0.0; 2];
    for (&x, &y) in xs.iter().zip(ys) {
        let (f, da, db) = if x == 0.0 {
            (1.0, 0.0, 0.0)
        } else {
            let p = x.powf(2.0 * b);
            let denom = 1.0 + a * p;
            let f = 1.0 / denom;
            let d2 = denom * denom;
            (f, -p / d2, -a * p * 2.0 * x.ln() / d2)
        };
        let r = f - y;
        sse += r * r;
        let j = [da, db];
        for u in 0..2 {
            jtr[u] += j[u] * r;
            for v in 0..2 {
                jtj[u][v] += j[u] * j[v];
            }
        }
    }
    (sse, jtj, jtr)
}

fn sse(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let f = if x == 0.0 { 1.0 } else { 1.0 / (1.0 + a * x.powf(2.0 * b)) };
            (f - y) * (f - y)
        })
        .sum()
}

pub fn find_ab_params(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..N_POINTS)
        .map(|i| 3.0 * spread * i as f64 / (N_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();

    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let (mut cur, _, _) = residuals_and_jacobian(&xs, &ys, a, b);
    for _ in 0..500 {
        let (_, jtj, jtr) = residuals_and_jacobian(&xs, &ys, a, b);
        let m = [
            [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
            [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let da = -(m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
        let db = -(-m[1][0] * jtr[0] + m[0][0] * jtr[1]) / det;
        let (na, nb) = (a + da, b + db);
        let next = if na > 0.0 && nb > 0.0 { sse(&xs, &ys, na, nb) } else { f64::INFINITY };
        if next < cur {
            let done = (cur - next) <= 1e-15 * cur.max(1e-300) && da.abs() < 1e-12 && db.abs() < 1e-12;
            a = na;
            b = nb;
            cur = next;
            lambda = (lambda / 10.0).max(1e-12);
            if done {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (a, b)
}
