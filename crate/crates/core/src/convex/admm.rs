//! Window solver entry point and the operator-splitting method.
//!
//! The reduced problem `min l0 ||z - x||^2 + sum_i w_i |b_i . z + c_i|` is split
//! as `u = B z + c`: the z-step is a banded SPD solve with `2 l0 I + rho B^T B`,
//! the u-step is element-wise soft-thresholding. Every few iterations the
//! zero/sign pattern of `u` is used to polish: with the pattern fixed the
//! problem is an equality-constrained least-squares projection, solved densely.
//! A polished point is accepted once a box-feasible dual point certifies a
//! duality gap below `GAP_REL_TOL`.

use nalgebra::{DMatrix, DVector};

use super::ipm;
use super::reduced::Reduced;
use super::{soft_threshold, DiffStencils, Lambdas, SolverMethod, SolverParams, WindowProblem};
use crate::error::{Error, Result};

/// Largest free dimension for which the dense polishing step is attempted.
pub const POLISH_MAX_DIM: usize = 256;

/// Polishing is attempted at iterations 10, 20, 40, 80, ..., every
/// `POLISH_LATE_EVERY` iterations, and on convergence.
const POLISH_EVERY: usize = 10;
const POLISH_LATE_EVERY: usize = 500;
const MAX_CHAIN: usize = 3;
const RHO_UPDATE_EVERY: usize = 10;
const RELAXATION: f64 = 1.6;
const GAP_REL_TOL: f64 = 1e-9;
const IPM_REL_GAP: f64 = 1e-10;
/// Certified gap `rel * |P| + abs` accepted without trying the fallback.
const IPM_ACCEPT: (f64, f64) = (1e-8, 1e-10);
/// Last resort when the fallback fails too.
const IPM_LOOSE: (f64, f64) = (1e-7, 1e-9);
const DUAL_MARGIN: f64 = 1e-3;
const MAX_REMEMBERED: usize = 8;
const CERTIFY_ITERS: usize = 200;

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// True when the returned point came from the polishing step.
    pub polished: bool,
    /// Certified duality gap of the returned point (before snapping), if any.
    pub duality_gap: Option<f64>,
}

pub fn solve_window(problem: &WindowProblem, params: &SolverParams) -> Result<Vec<f64>> {
    solve_window_report(problem, params).map(|r| r.y)
}

pub fn solve_window_report(problem: &WindowProblem, params: &SolverParams) -> Result<SolveReport> {
    params.validate()?;
    let prefix = problem.prefix();
    // work relative to the last pinned value: a large common offset costs
    // the interior point method most of its precision
    let offset = match (prefix.last(), problem.x().first()) {
        (Some(&c), _) | (None, Some(&c)) => c,
        (None, None) => 0.0,
    };
    let work = problem.shifted(-offset);
    let red = Reduced::new(&work);

    let finish_abs = |z: &[f64], iterations, polished, duality_gap| {
        let mut y = Vec::with_capacity(prefix.len() + z.len());
        y.extend_from_slice(prefix);
        y.extend_from_slice(z);
        let value = |y: &[f64]| {
            let zs: Vec<f64> = y[red.q..].iter().map(|v| v - offset).collect();
            red.objective(&zs)
        };
        let mut objective = value(&y);
        let mut snapped = y.clone();
        snap(&mut snapped, red.q, params.snap_eps);
        // a slow ramp snaps into a staircase; keep the snap only if it is free
        let snapped_value = value(&snapped);
        if snapped_value <= objective + GAP_REL_TOL * (1.0 + objective.abs()) {
            y = snapped;
            objective = snapped_value;
        }
        SolveReport {
            y,
            objective,
            iterations,
            polished,
            duality_gap,
        }
    };
    let finish = |z: Vec<f64>, iterations, polished, duality_gap| {
        let z: Vec<f64> = z.iter().map(|v| v + offset).collect();
        finish_abs(&z, iterations, polished, duality_gap)
    };

    // The input itself has zero variable cost: it is optimal.
    if red.nf() == 0 || penalties_vanish(work.prefix(), &red.x_free, &problem.lambdas()) {
        return Ok(finish_abs(&problem.x()[red.q..], 0, false, Some(0.0)));
    }
    if red.l0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "the fidelity weight l0 must be positive to solve a window".into(),
        ));
    }

    match params.method {
        SolverMethod::Admm => {
            let out = admm(&red, params)?;
            Ok(finish(out.z, out.iterations, out.polished, out.gap))
        }
        SolverMethod::Ipm => {
            let ip = ipm::solve(&red, IPM_REL_GAP, params.max_iter);
            let within = |(rel, abs): (f64, f64)| ip.gap <= rel * ip.objective.abs() + abs;
            if within(IPM_ACCEPT) {
                return Ok(finish(ip.z, ip.iterations, false, Some(ip.gap)));
            }
            if let Some(p) = polish_from_ipm(&red, &ip.z, &ip.v) {
                return Ok(finish(p.z, ip.iterations, true, Some(p.gap)));
            }
            log::debug!("interior point stalled at gap {:e}, retrying with operator splitting", ip.gap);
            match admm(&red, params) {
                Ok(out) => Ok(finish(out.z, out.iterations, out.polished, out.gap)),
                Err(Error::NonConvergence { .. }) if within(IPM_LOOSE) => {
                    log::warn!("accepting interior point iterate with gap {:e}", ip.gap);
                    Ok(finish(ip.z, ip.iterations, false, Some(ip.gap)))
                }
                Err(e) => Err(e),
            }
        }
    }
}

struct AdmmOutcome {
    z: Vec<f64>,
    iterations: usize,
    polished: bool,
    gap: Option<f64>,
}

fn admm(red: &Reduced, params: &SolverParams) -> Result<AdmmOutcome> {
    let nf = red.nf();
    let m = red.m();
    let two_l0 = 2.0 * red.l0;
    let gram = red.gram();
    let factor = |rho: f64| {
        let mut k = gram.clone();
        k.scale(rho);
        k.add_diagonal(two_l0);
        k.cholesky()
    };

    let mut rho = params.rho * initial_rho_scale(red);
    let mut chol = factor(rho)?;
    let mut z = red.x_free.clone();
    let mut u: Vec<f64> = red.rows.iter().map(|r| r.dot(&z)).collect();
    let mut s = vec![0.0; m];
    let mut du = vec![0.0; m];
    let mut tmp = vec![0.0; m];

    let polish_enabled = nf <= POLISH_MAX_DIM;
    let mut tried: Vec<Vec<i8>> = Vec::new();
    let mut best_polish: Option<Polished> = None;
    let (mut r_pri, mut r_dual) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=params.max_iter {
        for ((t, r), (ui, si)) in tmp.iter_mut().zip(&red.rows).zip(u.iter().zip(&s)) {
            *t = ui - si - r.c;
        }
        let mut rhs = red.bt(&tmp);
        for (v, x) in rhs.iter_mut().zip(&red.x_free) {
            *v = two_l0 * x + rho * *v;
        }
        chol.solve_in_place(&mut rhs);
        z = rhs;

        let (mut pri2, mut bz2, mut u2) = (0.0, 0.0, 0.0);
        for i in 0..m {
            let row = &red.rows[i];
            let bz = row.dot(&z);
            let hat = RELAXATION * bz + (1.0 - RELAXATION) * u[i];
            let un = soft_threshold(hat + s[i], row.w / rho);
            s[i] += hat - un;
            du[i] = un - u[i];
            u[i] = un;
            pri2 += (bz - un) * (bz - un);
            bz2 += bz * bz;
            u2 += un * un;
        }
        r_pri = pri2.sqrt();
        r_dual = rho * norm(&red.bt(&du));
        let dual_scale = rho * norm(&red.bt(&s));
        let pri_scale = bz2.sqrt().max(u2.sqrt());
        let eps_pri = (m as f64).sqrt() * params.eps_abs + params.eps_rel * pri_scale;
        let eps_dual = (nf as f64).sqrt() * params.eps_abs + params.eps_rel * dual_scale;
        let converged = r_pri <= eps_pri && r_dual <= eps_dual;

        let scheduled = (it % POLISH_EVERY == 0 && (it / POLISH_EVERY).is_power_of_two())
            || it.is_multiple_of(POLISH_LATE_EVERY);
        if polish_enabled && (converged || scheduled || it == params.max_iter) {
            let v_est: Vec<f64> = s.iter().map(|si| rho * si).collect();
            // primal guess from u, dual guess from multipliers strictly inside the box
            let from_u: Vec<i8> = u.iter().map(|v| sign_i8(*v)).collect();
            let from_v: Vec<i8> = v_est
                .iter()
                .zip(&red.rows)
                .map(|(v, r)| {
                    if v.abs() < r.w * (1.0 - DUAL_MARGIN) {
                        0
                    } else {
                        sign_i8(*v)
                    }
                })
                .collect();
            let mut queue = vec![from_u, from_v];
            let mut chain = 0;
            while let Some(pattern) = queue.pop() {
                if tried.contains(&pattern) {
                    continue;
                }
                let cand = polish(red, &pattern, &v_est);
                if tried.len() >= MAX_REMEMBERED {
                    tried.remove(0);
                }
                tried.push(pattern);
                let certified = cand.gap <= GAP_REL_TOL * (1.0 + cand.objective.abs());
                if certified {
                    return Ok(AdmmOutcome {
                        z: cand.z,
                        iterations: it,
                        polished: true,
                        gap: Some(cand.gap),
                    });
                }
                // the candidate's own pattern is the next active-set guess
                if chain < MAX_CHAIN {
                    chain += 1;
                    queue.push(cand.next_pattern.clone());
                }
                if best_polish
                    .as_ref()
                    .is_none_or(|b| cand.objective < b.objective)
                {
                    best_polish = Some(cand);
                }
            }
        }

        if converged {
            let admm_obj = red.objective(&z);
            return Ok(match best_polish {
                Some(p) if p.objective < admm_obj => AdmmOutcome {
                    z: p.z,
                    iterations: it,
                    polished: true,
                    gap: None,
                },
                _ => AdmmOutcome {
                    z,
                    iterations: it,
                    polished: false,
                    gap: None,
                },
            });
        }

        if it % RHO_UPDATE_EVERY == 0 {
            let pri_rel = r_pri / pri_scale.max(1e-300);
            let dual_rel = r_dual / dual_scale.max(1e-300);
            if pri_rel > 0.0 && dual_rel > 0.0 {
                let new_rho = (rho * (pri_rel / dual_rel).sqrt()).clamp(1e-6, 1e8);
                if new_rho > 5.0 * rho || new_rho < 0.2 * rho {
                    let scale = rho / new_rho;
                    s.iter_mut().for_each(|v| *v *= scale);
                    rho = new_rho;
                    chol = factor(rho)?;
                }
            }
        }
    }

    Err(Error::NonConvergence {
        iterations: params.max_iter,
        primal_residual: r_pri,
        dual_residual: r_dual,
    })
}

/// Makes consecutive entries closer than `eps` exactly equal, left to right,
/// leaving the first `fixed` entries untouched.
pub fn snap(y: &mut [f64], fixed: usize, eps: f64) {
    if eps <= 0.0 {
        return;
    }
    for i in fixed.max(1)..y.len() {
        if (y[i] - y[i - 1]).abs() < eps {
            y[i] = y[i - 1];
        }
    }
}

fn penalties_vanish(prefix: &[f64], x_free: &[f64], l: &Lambdas) -> bool {
    let y: Vec<f64> = prefix.iter().chain(x_free).copied().collect();
    (1..=3)
        .all(|k| l.order_weight(k) == 0.0 || DiffStencils::apply(k, &y).iter().all(|d| *d == 0.0))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Starting penalty relative to `params.rho`: the ratio of the L1 weights to
/// the typical size of the input's differences, so that the thresholds `w / rho`
/// are on the scale of the data.
fn initial_rho_scale(red: &Reduced) -> f64 {
    let m = red.m() as f64;
    let w_mean = red.rows.iter().map(|r| r.w).sum::<f64>() / m;
    let d_rms = (red
        .rows
        .iter()
        .map(|r| r.dot(&red.x_free).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    if d_rms > 0.0 && w_mean > 0.0 {
        (w_mean / d_rms).clamp(1e-4, 1e6)
    } else {
        1.0
    }
}

fn sign_i8(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

struct Polished {
    z: Vec<f64>,
    objective: f64,
    gap: f64,
    /// Pattern suggested by the result: rows whose multiplier left the box are
    /// released, rows whose sign flipped are clamped to zero.
    next_pattern: Vec<i8>,
}

/// Solves the problem restricted to a zero/sign pattern of `B z + c` and
/// bounds its suboptimality with a dual point built from `v_est`.
fn polish(red: &Reduced, pattern: &[i8], v_est: &[f64]) -> Polished {
    let nf = red.nf();
    let two_l0 = 2.0 * red.l0;
    let zero: Vec<usize> = (0..pattern.len()).filter(|&i| pattern[i] == 0).collect();
    let mut next_pattern = pattern.to_vec();

    let mut v: Vec<f64> = red
        .rows
        .iter()
        .zip(pattern)
        .map(|(r, &sg)| r.w * f64::from(sg))
        .collect();
    let btvn = red.bt(&v);
    let g: Vec<f64> = red
        .x_free
        .iter()
        .zip(&btvn)
        .map(|(x, b)| x - b / two_l0)
        .collect();

    if zero.is_empty() {
        let objective = red.objective(&g);
        let gap = (objective - red.dual_value(&v)).max(0.0);
        release_flipped(red, &g, &mut next_pattern);
        return Polished {
            z: g,
            objective,
            gap,
            next_pattern,
        };
    }

    let mz = zero.len();
    let mut a = DMatrix::<f64>::zeros(mz, nf);
    for (r, &i) in zero.iter().enumerate() {
        let row = &red.rows[i];
        for k in 0..row.len {
            a[(r, row.col0 + k)] = row.coefs[k];
        }
    }
    let h = DVector::from_iterator(mz, zero.iter().map(|&i| -red.rows[i].c));
    let svd = a.clone().svd(true, true);
    let (uu, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let sig = &svd.singular_values;
    let smax = sig.iter().fold(0.0f64, |m, s| m.max(*s));
    let tol = smax * (mz.max(nf) as f64) * f64::EPSILON;
    let pinv_scale = |t: &mut DVector<f64>| {
        for (ti, si) in t.iter_mut().zip(sig.iter()) {
            *ti = if *si > tol { *ti / si } else { 0.0 };
        }
    };

    // z = g - A^+ (A g - h): projection of g onto {A z = h}
    let gv = DVector::from_vec(g);
    let mut t = uu.transpose() * (&a * &gv - &h);
    pinv_scale(&mut t);
    let zv = &gv - vt.transpose() * t;
    let z: Vec<f64> = zv.iter().copied().collect();
    let objective = red.objective(&z);
    let target = GAP_REL_TOL * (1.0 + objective.abs());

    // Multipliers on the zero rows must satisfy stationarity A^T v_Z = e and
    // stay inside the box; alternate projections onto both sets, starting
    // from the clipped estimate.
    let e = DVector::from_iterator(
        nf,
        red.x_free
            .iter()
            .zip(zv.iter())
            .zip(&btvn)
            .map(|((x, z), b)| two_l0 * (x - z) - b),
    );
    let w = DVector::from_iterator(mz, zero.iter().map(|&i| red.rows[i].w));
    let clip = |vz: &mut DVector<f64>| {
        for (a, b) in vz.iter_mut().zip(w.iter()) {
            *a = a.clamp(-b, *b);
        }
    };
    let mut vz = DVector::from_iterator(mz, zero.iter().map(|&i| v_est[i]));
    clip(&mut vz);
    let mut unclipped = vz.clone();
    let mut gap = f64::INFINITY;
    for k in 0..CERTIFY_ITERS {
        let mut t2 = vt * (&e - a.transpose() * &vz);
        pinv_scale(&mut t2);
        vz += uu * t2;
        unclipped.copy_from(&vz);
        clip(&mut vz);
        if k % 10 == 0 || k + 1 == CERTIFY_ITERS {
            for (r, &i) in zero.iter().enumerate() {
                v[i] = vz[r];
            }
            gap = (objective - red.dual_value(&v)).max(0.0);
            if gap <= target {
                break;
            }
        }
    }

    for (r, &i) in zero.iter().enumerate() {
        if unclipped[r].abs() > w[r] * (1.0 + 1e-9) {
            next_pattern[i] = sign_i8(unclipped[r]);
        }
    }
    release_flipped(red, &z, &mut next_pattern);
    Polished {
        z,
        objective,
        gap,
        next_pattern,
    }
}

/// Active-set polish seeded by a nearly optimal interior point. Returns a
/// certified point or `None`.
fn polish_from_ipm(red: &Reduced, z: &[f64], v: &[f64]) -> Option<Polished> {
    if red.nf() > POLISH_MAX_DIM {
        return None;
    }
    let from_v: Vec<i8> = v
        .iter()
        .zip(&red.rows)
        .map(|(v, r)| if v.abs() < r.w * (1.0 - DUAL_MARGIN) { 0 } else { sign_i8(*v) })
        .collect();
    let scale = 1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let from_z: Vec<i8> = red
        .rows
        .iter()
        .map(|r| {
            let d = r.dot(z);
            if d.abs() <= 1e-6 * scale { 0 } else { sign_i8(d) }
        })
        .collect();
    let mut tried: Vec<Vec<i8>> = Vec::new();
    for start in [from_v, from_z] {
        let mut pattern = start;
        for _ in 0..=MAX_CHAIN {
            if tried.contains(&pattern) {
                break;
            }
            let cand = polish(red, &pattern, v);
            tried.push(pattern);
            if cand.gap <= GAP_REL_TOL * (1.0 + cand.objective.abs()) {
                return Some(cand);
            }
            pattern = cand.next_pattern;
        }
    }
    None
}

/// Rows assumed nonzero whose sign disagrees with `z` are moved to the zero set.
fn release_flipped(red: &Reduced, z: &[f64], pattern: &mut [i8]) {
    for (p, r) in pattern.iter_mut().zip(&red.rows) {
        if *p != 0 && sign_i8(r.dot(z)) != *p {
            *p = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{objective, reference_solve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> SolverParams {
        SolverParams::default()
    }

    #[test]
    fn pure_least_squares_returns_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let l = Lambdas::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let p = WindowProblem::unconstrained(x.clone(), l).unwrap();
        let y = solve_window(&p, &params()).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn constant_input_is_a_fixed_point() {
        for c in [0.0, 5.0, -123.456, 0.1] {
            let p = WindowProblem::unconstrained(vec![c; 17], Lambdas::STAGE).unwrap();
            let y = solve_window(&p, &params()).unwrap();
            assert!(y.iter().all(|v| *v == c));
        }
    }

    #[test]
    fn pinned_prefix_is_copied_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..30)
            .map(|i| i as f64 * 0.3 + rng.random_range(-1.0..1.0))
            .collect();
        let prefix: Vec<f64> = (0..12).map(|i| 0.1 + i as f64 * 0.29).collect();
        let l = Lambdas::new(1.0, 10.0, 5.0, 20.0).unwrap();
        let p = WindowProblem::new(x, prefix.clone(), l).unwrap();
        let y = solve_window(&p, &params()).unwrap();
        assert_eq!(&y[..12], prefix.as_slice());
        objective(&p, &y).unwrap();
    }

    #[test]
    fn zero_fidelity_weight_is_rejected_when_work_is_needed() {
        let l = Lambdas::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let p = WindowProblem::unconstrained(vec![0.0, 1.0, 0.0, 1.0, 0.0], l).unwrap();
        assert!(matches!(
            solve_window(&p, &params()),
            Err(Error::InvalidParameter(_))
        ));
        let flat = WindowProblem::unconstrained(vec![2.0; 5], l).unwrap();
        assert_eq!(solve_window(&flat, &params()).unwrap(), vec![2.0; 5]);
    }

    #[test]
    fn tiny_iteration_budget_reports_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..10.0)).collect();
        let l = Lambdas::new(1.0, 2.0, 3.0, 4.0).unwrap();
        let p = WindowProblem::unconstrained(x, l).unwrap();
        for method in [SolverMethod::Admm, SolverMethod::Ipm] {
            let prm = SolverParams {
                max_iter: 3,
                method,
                ..params()
            };
            match solve_window(&p, &prm) {
                Err(Error::NonConvergence {
                    iterations,
                    primal_residual,
                    dual_residual,
                }) => {
                    assert_eq!(iterations, 3);
                    assert!(primal_residual.is_finite() && dual_residual.is_finite());
                }
                other => panic!("expected non-convergence, got {other:?}"),
            }
        }
    }

    #[test]
    fn preset_weights_on_random_window_match_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..10.0)).collect();
        let p = WindowProblem::unconstrained(x, Lambdas::STAGE).unwrap();
        let r = reference_solve(&p).unwrap();
        let jr = objective(&p, &r).unwrap();
        for method in [SolverMethod::Admm, SolverMethod::Ipm] {
            let y = solve_window(&p, &SolverParams { method, ..params() }).unwrap();
            let jy = objective(&p, &y).unwrap();
            assert!(
                jy <= jr * (1.0 + 1e-6) + 1e-8,
                "{method:?}: {jy} vs oracle {jr}"
            );
        }
    }

    #[test]
    fn certified_gap_is_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let n = rng.random_range(8..60);
            let x: Vec<f64> = (0..n)
                .map(|i| 0.2 * i as f64 + rng.random_range(-2.0..2.0))
                .collect();
            let l = Lambdas::new(
                1.0,
                rng.random_range(0.1..100.0),
                rng.random_range(0.1..100.0),
                rng.random_range(0.1..100.0),
            )
            .unwrap();
            let p = WindowProblem::unconstrained(x, l).unwrap();
            let rep = solve_window_report(
                &p,
                &SolverParams {
                    max_iter: 20_000,
                    ..params()
                },
            )
            .unwrap();
            if let Some(gap) = rep.duality_gap {
                assert!(gap <= 1e-9 * (1.0 + rep.objective));
            }
        }
    }

    #[test]
    fn snapping_merges_only_free_entries() {
        let mut y = vec![1.0, 1.0 + 1e-7, 2.0, 2.0 + 5e-7, 2.0 + 9e-7];
        snap(&mut y, 2, 1e-6);
        assert_eq!(y, vec![1.0, 1.0 + 1e-7, 2.0, 2.0, 2.0]);
        let mut z = vec![1.0, 1.0 + 1e-7];
        snap(&mut z, 0, 0.0);
        assert_eq!(z, vec![1.0, 1.0 + 1e-7]);
    }
}
