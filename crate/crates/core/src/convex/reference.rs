//! Slow, independent solver used to validate the window solver.
//!
//! Works on the box-constrained dual
//! `max_{|v_i| <= w_i} v . (D y_x) - ||D_f^T v||^2 / (4 l0)` with accelerated
//! projected gradient and adaptive restart. It shares no code with the main
//! solver: the difference matrix is assembled here from scratch.

use crate::error::{Error, Result};

use super::WindowProblem;

/// Largest window accepted by the reference solver.
pub const REFERENCE_MAX_N: usize = 128;

const MIN_ITER: usize = 20_000;
const MAX_ITER: usize = 3_000_000;
const CHECK_EVERY: usize = 100;
const STALL_ITERS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct ReferenceReport {
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Primal objective minus the best dual value found.
    pub duality_gap: f64,
}

pub fn reference_solve(problem: &WindowProblem) -> Result<Vec<f64>> {
    reference_solve_report(problem).map(|r| r.y)
}

struct SparseRow {
    /// (free column, coefficient)
    entries: Vec<(usize, f64)>,
    /// Contribution of the pinned entries.
    pinned: f64,
    weight: f64,
}

pub fn reference_solve_report(problem: &WindowProblem) -> Result<ReferenceReport> {
    let x = problem.x();
    let prefix = problem.prefix();
    let lam = problem.lambdas();
    let n = x.len();
    if n > REFERENCE_MAX_N {
        return Err(Error::ProblemTooLarge {
            n,
            max: REFERENCE_MAX_N,
        });
    }
    if lam.l0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "reference solver needs a positive fidelity weight".into(),
        ));
    }
    let q = prefix.len();
    let nf = n - q;
    let xf = &x[q..];

    // k-th difference coefficients from the binomial expansion
    let mut rows = Vec::new();
    let mut fixed_cost: f64 = (0..q).map(|i| lam.l0 * (x[i] - prefix[i]).powi(2)).sum();
    for (order, weight) in [(1usize, lam.l1), (2, lam.l2), (3, lam.l3)] {
        if weight == 0.0 || n <= order {
            continue;
        }
        let coef: Vec<f64> = (0..=order)
            .map(|k| {
                let binom = (0..k).fold(1.0, |acc, j| acc * (order - j) as f64 / (j + 1) as f64);
                if (order - k) % 2 == 0 {
                    binom
                } else {
                    -binom
                }
            })
            .collect();
        for start in 0..n - order {
            let mut row = SparseRow {
                entries: Vec::new(),
                pinned: 0.0,
                weight,
            };
            for (k, c) in coef.iter().enumerate() {
                let j = start + k;
                if j < q {
                    row.pinned += c * prefix[j];
                } else {
                    row.entries.push((j - q, *c));
                }
            }
            if row.entries.is_empty() {
                fixed_cost += weight * row.pinned.abs();
            } else {
                rows.push(row);
            }
        }
    }

    let apply =
        |z: &[f64], r: &SparseRow| r.pinned + r.entries.iter().map(|(j, c)| c * z[*j]).sum::<f64>();
    let adjoint = |v: &[f64]| {
        let mut out = vec![0.0; nf];
        for (r, vi) in rows.iter().zip(v) {
            for (j, c) in &r.entries {
                out[*j] += c * vi;
            }
        }
        out
    };
    let primal = |z: &[f64]| {
        let fid: f64 = xf.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
        fixed_cost
            + lam.l0 * fid
            + rows
                .iter()
                .map(|r| r.weight * apply(z, r).abs())
                .sum::<f64>()
    };
    let recover = |v: &[f64]| -> Vec<f64> {
        let btv = adjoint(v);
        xf.iter()
            .zip(&btv)
            .map(|(a, b)| a - b / (2.0 * lam.l0))
            .collect()
    };
    // b = D y evaluated at z = x_free
    let dx: Vec<f64> = rows.iter().map(|r| apply(xf, r)).collect();
    let dual = |v: &[f64]| {
        let btv = adjoint(v);
        let quad: f64 = btv.iter().map(|a| a * a).sum();
        fixed_cost + v.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>() - quad / (4.0 * lam.l0)
    };

    let m = rows.len();
    if m == 0 {
        let y: Vec<f64> = prefix.iter().chain(xf).copied().collect();
        return Ok(ReferenceReport {
            objective: primal(xf),
            y,
            iterations: 0,
            duality_gap: 0.0,
        });
    }

    // ||D||^2 <= 4 + 16 + 64 over the three orders
    let step = 2.0 * lam.l0 / 84.0;
    let project = |v: &mut [f64]| {
        for (vi, r) in v.iter_mut().zip(&rows) {
            *vi = vi.clamp(-r.weight, r.weight);
        }
    };

    let mut v = vec![0.0; m];
    let mut v_prev = v.clone();
    let mut mom = v.clone();
    let mut t = 1.0f64;
    let mut best_z = xf.to_vec();
    let mut best_p = primal(&best_z);
    let mut best_d = dual(&v);
    let mut last_improvement = 0;
    let mut iterations = 0;

    for it in 1..=MAX_ITER {
        iterations = it;
        // ascent step on the concave dual at the extrapolated point
        let z_mom = recover(&mom);
        let mut next: Vec<f64> = rows
            .iter()
            .zip(&mom)
            .map(|(r, mi)| mi + step * apply(&z_mom, r))
            .collect();
        project(&mut next);

        // gradient restart: drop momentum when it points against progress
        let restart: f64 = next
            .iter()
            .zip(&mom)
            .zip(&v)
            .map(|((n1, mo), v0)| (mo - n1) * (n1 - v0))
            .sum();
        v_prev.copy_from_slice(&v);
        v = next;
        if restart > 0.0 {
            t = 1.0;
            mom.copy_from_slice(&v);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..m {
                mom[i] = v[i] + beta * (v[i] - v_prev[i]);
            }
            t = t_next;
        }

        if it % CHECK_EVERY == 0 {
            let z = recover(&v);
            let p = primal(&z);
            let d = dual(&v);
            let tol = 1e-12 * (1.0 + best_p.abs());
            if p < best_p - tol || d > best_d + tol {
                last_improvement = it;
            }
            best_d = best_d.max(d);
            if p < best_p {
                best_p = p;
                best_z = z;
            }
            let gap = best_p - best_d;
            if gap <= 1e-13 * (1.0 + best_p.abs()) {
                break;
            }
            if it >= MIN_ITER && it - last_improvement >= STALL_ITERS {
                break;
            }
        }
    }

    let y: Vec<f64> = prefix.iter().chain(&best_z).copied().collect();
    Ok(ReferenceReport {
        y,
        objective: best_p,
        iterations,
        duality_gap: (best_p - best_d).max(0.0),
    })
}
