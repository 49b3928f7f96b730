//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// TV denoising by 10^5 accelerated proximal-gradient steps on the dual
/// `min_{|u| <= lam} 1/2 ||x - D^T u||^2`, with momentum restarts whenever
/// a step moves against the momentum. An anchor adds the row `y[0] - a`.
pub fn tv_prox_gradient(x: &[f64], lam: f64, anchor: Option<f64>) -> Vec<f64> {
    let n = x.len();
    // row r touches (r - 1, r); row 0 is the anchor row when present
    let first = if anchor.is_some() { 0 } else { 1 };
    let rows: Vec<usize> = (first..n).collect();
    let primal = |u: &[f64]| {
        let mut y = x.to_vec();
        for (&r, &ur) in rows.iter().zip(u) {
            // D^T u with D y = y[r] - y[r-1] (or y[0] for the anchor row)
            y[r] -= ur;
            if r > 0 {
                y[r - 1] += ur;
            }
        }
        y
    };
    let mut u = vec![0.0; rows.len()];
    let mut prev = u.clone();
    let mut mom = u.clone();
    let mut t: f64 = 1.0;
    for _ in 0..100_000 {
        let y = primal(&mom);
        for (k, &r) in rows.iter().enumerate() {
            let dy = if r > 0 { y[r] - y[r - 1] } else { y[0] - anchor.unwrap() };
            prev[k] = u[k];
            u[k] = (mom[k] + 0.25 * dy).clamp(-lam, lam);
        }
        let against: f64 = (0..u.len()).map(|k| (mom[k] - u[k]) * (u[k] - prev[k])).sum();
        if against > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for k in 0..u.len() {
            mom[k] = u[k] + beta * (u[k] - prev[k]);
        }
        t = t_next;
    }
    primal(&u)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Central difference `(f(h) - f(-h)) / 2h` with `h = 1e-5`.
pub fn central_difference(f: impl Fn(f64) -> f64) -> f64 {
    central_difference_step(f, 1e-5)
}

pub fn central_difference_step(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}
