//! Primal-dual interior-point method (Mehrotra predictor-corrector).
//!
//! Works on the slack form of the reduced window problem,
//!
//! ```text
//! min l0 ||z - x||^2 + w . t   s.t.  -t <= B z + c <= t
//! ```
//!
//! with multipliers `lam` (upper side) and `kap` (lower side). Slacks and
//! multipliers are eliminated row by row, so every Newton step is one banded
//! SPD solve with `2 l0 I + B^T diag(sigma) B`. The dual point
//! `v = lam - kap`, clipped to `|v| <= w`, gives a duality-gap certificate for
//! the primal iterate.

use super::banded::BandedSym;
use super::reduced::Reduced;

const BOUNDARY: f64 = 0.99;
const MIN_STEP: f64 = 1e-6;
const SHIFT_MIN: f64 = 1e-15;
const SHIFT_MAX: f64 = 1e-7;
/// Mehrotra needs a few dozen steps; beyond this only roundoff is moving.
const MAX_ITER: usize = 100;

pub(crate) struct IpmOutcome {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub objective: f64,
    /// Multipliers `lam - kap` at the returned iterate.
    pub v: Vec<f64>,
}

struct Best {
    z: Vec<f64>,
    v: Vec<f64>,
    objective: f64,
    iterations: usize,
}

struct Step {
    dz: Vec<f64>,
    dt: Vec<f64>,
    dlam: Vec<f64>,
    dkap: Vec<f64>,
    ds1: Vec<f64>,
    ds2: Vec<f64>,
}

/// Runs until the duality gap is below `rel_gap * (1 + |P|)` or progress
/// stops, and returns the best iterate with its certified gap.
pub(crate) fn solve(red: &Reduced, rel_gap: f64, max_iter: usize) -> IpmOutcome {
    let m = red.m();
    let nf = red.nf();
    let two_l0 = 2.0 * red.l0;
    let w: Vec<f64> = red.rows.iter().map(|r| r.w).collect();

    let mut z = red.x_free.clone();
    let r0: Vec<f64> = red.rows.iter().map(|r| r.dot(&z)).collect();
    let spread = (r0.iter().map(|v| v.abs()).sum::<f64>() / m as f64).max(1e-3);
    let mut t: Vec<f64> = r0.iter().map(|v| v.abs() + spread).collect();
    let mut lam: Vec<f64> = w.iter().map(|w| 0.5 * w).collect();
    let mut kap = lam.clone();
    // slacks t - r and t + r are carried as iterates: recomputing them from
    // t and r cancels catastrophically once they are tiny
    let mut s1: Vec<f64> = (0..m).map(|i| t[i] - r0[i]).collect();
    let mut s2: Vec<f64> = (0..m).map(|i| t[i] + r0[i]).collect();

    let mut best: Option<Best> = None;
    let mut best_d = f64::NEG_INFINITY;
    for it in 0..max_iter.min(MAX_ITER) {
        // residuals of the linear optimality conditions
        let lk: Vec<f64> = (0..m).map(|i| lam[i] - kap[i]).collect();
        let btlk = red.bt(&lk);
        let rz: Vec<f64> = (0..nf)
            .map(|j| two_l0 * (z[j] - red.x_free[j]) + btlk[j])
            .collect();
        let rt: Vec<f64> = (0..m).map(|i| w[i] - lam[i] - kap[i]).collect();
        let r: Vec<f64> = red.rows.iter().map(|row| row.dot(&z)).collect();
        let rs1: Vec<f64> = (0..m).map(|i| s1[i] - t[i] + r[i]).collect();
        let rs2: Vec<f64> = (0..m).map(|i| s2[i] - t[i] - r[i]).collect();
        let eta = (0..m).map(|i| lam[i] * s1[i] + kap[i] * s2[i]).sum::<f64>();
        let mu = eta / (2 * m) as f64;

        let p = red.objective(&z);
        let v: Vec<f64> = (0..m).map(|i| lk[i].clamp(-w[i], w[i])).collect();
        let d = red.dual_value(&v);
        if d > best_d {
            best_d = d;
        }
        if best.as_ref().is_none_or(|b| p < b.objective) {
            best = Some(Best {
                z: z.clone(),
                v: lk.clone(),
                objective: p,
                iterations: it,
            });
        }
        let bp = best.as_ref().map_or(p, |b| b.objective);
        let gap = bp - best_d;
        if gap <= rel_gap * (1.0 + bp.abs()) || eta <= f64::EPSILON * (1.0 + bp.abs()) {
            break;
        }

        let a: Vec<f64> = (0..m).map(|i| lam[i] / s1[i]).collect();
        let b: Vec<f64> = (0..m).map(|i| kap[i] / s2[i]).collect();
        let mut k = BandedSym::zeros(nf, 3);
        for (i, row) in red.rows.iter().enumerate() {
            let sigma = 4.0 * a[i] * b[i] / (a[i] + b[i]);
            for p in 0..row.len {
                for q in 0..=p {
                    k.add(
                        row.col0 + p,
                        row.col0 + q,
                        sigma * row.coefs[p] * row.coefs[q],
                    );
                }
            }
        }
        k.add_diagonal(two_l0);
        // near the end huge sigma swamps 2 l0 and the factorization can lose
        // definiteness to roundoff; a small growing shift still gives a usable
        // (inexact) direction from a strictly interior point
        let top = (0..nf).fold(0.0f64, |acc, j| acc.max(k.get(j, j)));
        let mut shift = 0.0;
        let chol = loop {
            match k.cholesky() {
                Ok(c) => break Some(c),
                Err(_) if shift < top * SHIFT_MAX => {
                    let next = if shift == 0.0 { top * SHIFT_MIN } else { shift * 100.0 };
                    k.add_diagonal(next - shift);
                    shift = next;
                }
                Err(_) => break None,
            }
        };
        let Some(chol) = chol else { break };

        // Newton direction for complementarity targets lam*ds1 + s1*dlam = comp1
        // (and likewise for kap); everything but dz is recovered per row.
        let direction = |comp1: &[f64], comp2: &[f64]| -> Step {
            let mut h = vec![0.0; m];
            let mut e = vec![0.0; m];
            for i in 0..m {
                let d1 = comp1[i] / s1[i] + a[i] * rs1[i];
                let d2 = comp2[i] / s2[i] + b[i] * rs2[i];
                e[i] = d1 + d2 - rt[i];
                h[i] = d1 - d2 - (a[i] - b[i]) * e[i] / (a[i] + b[i]);
            }
            let bth = red.bt(&h);
            let mut dz: Vec<f64> = (0..nf).map(|j| -rz[j] - bth[j]).collect();
            chol.solve_in_place(&mut dz);
            let mut st = Step {
                dz,
                dt: vec![0.0; m],
                dlam: vec![0.0; m],
                dkap: vec![0.0; m],
                ds1: vec![0.0; m],
                ds2: vec![0.0; m],
            };
            for i in 0..m {
                let row = &red.rows[i];
                let rho = row.dot(&st.dz) - row.c;
                let dt = (e[i] + (a[i] - b[i]) * rho) / (a[i] + b[i]);
                st.dt[i] = dt;
                st.ds1[i] = dt - rho - rs1[i];
                st.ds2[i] = dt + rho - rs2[i];
                st.dlam[i] = comp1[i] / s1[i] - a[i] * st.ds1[i];
                st.dkap[i] = comp2[i] / s2[i] - b[i] * st.ds2[i];
            }
            st
        };
        let max_step = |st: &Step| -> f64 {
            let mut alpha: f64 = 1.0;
            for i in 0..m {
                for (x, dx) in [
                    (s1[i], st.ds1[i]),
                    (s2[i], st.ds2[i]),
                    (lam[i], st.dlam[i]),
                    (kap[i], st.dkap[i]),
                ] {
                    if dx < 0.0 {
                        alpha = alpha.min(-x / dx);
                    }
                }
            }
            alpha
        };

        // predictor: pure Newton on the complementarity products
        let c1: Vec<f64> = (0..m).map(|i| -lam[i] * s1[i]).collect();
        let c2: Vec<f64> = (0..m).map(|i| -kap[i] * s2[i]).collect();
        let aff = direction(&c1, &c2);
        let alpha_aff = max_step(&aff);
        let mu_aff = (0..m)
            .map(|i| {
                (lam[i] + alpha_aff * aff.dlam[i]) * (s1[i] + alpha_aff * aff.ds1[i])
                    + (kap[i] + alpha_aff * aff.dkap[i]) * (s2[i] + alpha_aff * aff.ds2[i])
            })
            .sum::<f64>()
            / (2 * m) as f64;
        let tau = (mu_aff / mu).powi(3).min(1.0) * mu;

        // corrector with the second-order term of the predictor
        let c1: Vec<f64> = (0..m)
            .map(|i| tau - lam[i] * s1[i] - aff.dlam[i] * aff.ds1[i])
            .collect();
        let c2: Vec<f64> = (0..m)
            .map(|i| tau - kap[i] * s2[i] - aff.dkap[i] * aff.ds2[i])
            .collect();
        let st = direction(&c1, &c2);
        let alpha = (BOUNDARY * max_step(&st)).min(1.0);
        if !(alpha > MIN_STEP) || st.dz.iter().any(|v| !v.is_finite()) {
                break;
        }
        for j in 0..nf {
            z[j] += alpha * st.dz[j];
        }
        for i in 0..m {
            t[i] += alpha * st.dt[i];
            s1[i] += alpha * st.ds1[i];
            s2[i] += alpha * st.ds2[i];
            lam[i] += alpha * st.dlam[i];
            kap[i] += alpha * st.dkap[i];
        }
    }

    // converged, stalled or out of iterations: the caller judges the gap
    let b = best.expect("at least one iterate");
    IpmOutcome {
        gap: (b.objective - best_d).max(0.0),
        objective: b.objective,
        z: b.z,
        v: b.v,
        iterations: b.iterations,
    }
}
