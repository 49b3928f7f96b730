mod common;

use cinefilter::baselines::*;
use cinefilter::metrics::{causality_probe, measure_latency};
use cinefilter::trajectory::{FilterSession, StreamFilter};
use common::max_abs_diff;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run(f: impl StreamFilter + 'static, x: &[f64]) -> Vec<f64> {
    FilterSession::new(Box::new(f)).run(x).unwrap()
}

fn noisy(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = 0.0;
    (0..n)
        .map(|_| {
            v += rng.random_range(-0.3..0.3);
            v + rng.random_range(-1.0..1.0)
        })
        .collect()
}

fn all_filters() -> Vec<(&'static str, Box<dyn Fn() -> Box<dyn StreamFilter>>)> {
    vec![
        ("sg", Box::new(|| Box::new(SavitzkyGolay::new(SgParams::default()).unwrap()))),
        ("kalman", Box::new(|| Box::new(Kalman::new(KalmanParams::default()).unwrap()))),
        ("bilateral", Box::new(|| Box::new(Bilateral::new(BilateralParams::default()).unwrap()))),
        ("meshflow", Box::new(|| Box::new(Meshflow::new(MeshflowParams::default()).unwrap()))),
        ("movavg", Box::new(|| Box::new(MovAvg::new(MovAvgParams::default()).unwrap()))),
    ]
}

// ---- Savitzky-Golay ----

/// Normal equations in unscaled integer offsets, solved by Gauss-Jordan.
fn sg_oracle(len: usize, c: usize, degree: usize) -> Vec<f64> {
    let d = degree + 1;
    let t = |i: usize| i as f64 - c as f64;
    let mut m = vec![vec![0.0; d + len]; d];
    for r in 0..d {
        for k in 0..d {
            m[r][k] = (0..len).map(|i| t(i).powi((r + k) as i32)).sum();
        }
        for i in 0..len {
            m[r][d + i] = t(i).powi(r as i32);
        }
    }
    for p in 0..d {
        let piv = (p..d).max_by(|&a, &b| m[a][p].abs().total_cmp(&m[b][p].abs())).unwrap();
        m.swap(p, piv);
        let inv = 1.0 / m[p][p];
        m[p].iter_mut().for_each(|v| *v *= inv);
        for r in 0..d {
            if r != p {
                let f = m[r][p];
                let row = m[p].clone();
                m[r].iter_mut().zip(&row).for_each(|(a, b)| *a -= f * b);
            }
        }
    }
    // row 0 of (A^T A)^{-1} A^T gives the constant term at offset 0
    m[0][d..].to_vec()
}

#[test]
fn sg_coefficients_match_normal_equations() {
    let c = sg_coefficients(51, 25, 3);
    assert!(max_abs_diff(&c, &sg_oracle(51, 25, 3)) < 1e-10);
    for (len, pos) in [(30, 4), (26, 0), (40, 39)] {
        assert!(max_abs_diff(&sg_coefficients(len, pos, 3), &sg_oracle(len, pos, 3)) < 1e-10);
    }
}

#[test]
fn sg_classic_five_point_quadratic() {
    let c = sg_coefficients(5, 2, 2);
    let expect: Vec<f64> = [-3.0, 12.0, 17.0, 12.0, -3.0].iter().map(|v| v / 35.0).collect();
    assert!(max_abs_diff(&c, &expect) < 1e-14);
}

#[test]
fn sg_reproduces_cubics_everywhere() {
    let x: Vec<f64> = (0..200)
        .map(|i| {
            let t = i as f64 / 10.0;
            1.0 - 2.0 * t + 0.3 * t * t - 0.05 * t * t * t
        })
        .collect();
    let y = run(SavitzkyGolay::new(SgParams::default()).unwrap(), &x);
    assert!(max_abs_diff(&y, &x) < 1e-9);
}

#[test]
fn sg_short_stream_drops_degree() {
    let x = [1.0, 3.0];
    let y = run(SavitzkyGolay::new(SgParams::default()).unwrap(), &x);
    assert!(max_abs_diff(&y, &x) < 1e-12);
}

#[test]
fn sg_rejects_even_window() {
    assert!(SavitzkyGolay::new(SgParams { window: 50, degree: 3 }).is_err());
    assert!(SavitzkyGolay::new(SgParams { window: 3, degree: 3 }).is_err());
}

// ---- Kalman ----

#[test]
fn kalman_converges_on_constant() {
    let x = vec![4.25; 200];
    let y = run(Kalman::new(KalmanParams::default()).unwrap(), &x);
    assert!((y[199] - 4.25).abs() < 1e-6);
    assert_eq!(y[0], 4.25);
}

#[test]
fn kalman_tracks_with_tiny_measurement_noise() {
    // the limit needs r << q: with q = 1e-3 the prior variance is only ~q/4
    let x = noisy(3, 300);
    let y = run(Kalman::new(KalmanParams { q: 1.0, r: 1e-9 }).unwrap(), &x);
    assert!(max_abs_diff(&y, &x) < 1e-6);
}

/// Steady-state alpha-beta gains for this noise model, from the tracking index.
fn alpha_beta(q: f64, r: f64) -> (f64, f64) {
    let l = (q / r).sqrt();
    let s = (l * l + 8.0 * l).sqrt();
    let alpha = -(l * l + 8.0 * l - (l + 4.0) * s) / 8.0;
    let beta = (l * l + 4.0 * l - l * s) / 4.0;
    (alpha, beta)
}

#[test]
fn kalman_steady_state_gain_and_lag() {
    for (q, r) in [(1e-3, 1e-1), (0.5, 2.0), (1e-2, 1e-3)] {
        let (alpha, beta) = alpha_beta(q, r);
        let mut k = Kalman::new(KalmanParams { q, r }).unwrap();
        let a = 0.02;
        let mut last = 0.0;
        let mut z = 0.0;
        for i in 0..5000 {
            z = 0.5 * a * (i * i) as f64;
            last = k.push(z).unwrap()[0];
        }
        let g = k.gain();
        assert!((g[0] - alpha).abs() < 1e-9, "alpha {} vs {alpha}", g[0]);
        assert!((g[1] - beta).abs() < 1e-9, "beta {} vs {beta}", g[1]);
        // constant acceleration leaves a fixed lag of a (1 - alpha) / beta
        let lag = z - last;
        assert!((lag - a * (1.0 - alpha) / beta).abs() < 1e-6, "lag {lag}");
    }
}

#[test]
fn kalman_has_no_lag_on_ramps() {
    let x: Vec<f64> = (0..3000).map(|i| 2.0 + 0.7 * i as f64).collect();
    let y = run(Kalman::new(KalmanParams::default()).unwrap(), &x);
    assert!((y[2999] - x[2999]).abs() < 1e-6);
}

// ---- bilateral ----

#[test]
fn bilateral_without_range_term_is_gaussian_smoothing() {
    let x = noisy(8, 150);
    let p = BilateralParams {
        sigma_r: 1e9,
        ..BilateralParams::default()
    };
    let y = run(Bilateral::new(p).unwrap(), &x);
    let h = 32i64;
    let oracle: Vec<f64> = (0..150i64)
        .map(|k| {
            let (mut num, mut den) = (0.0, 0.0);
            for i in (k - h).max(0)..=(k + h).min(149) {
                let w = (-((i - k) * (i - k)) as f64 / (2.0 * 16.0 * 16.0)).exp();
                num += w * x[i as usize];
                den += w;
            }
            num / den
        })
        .collect();
    assert!(max_abs_diff(&y, &oracle) < 1e-9);
}

#[test]
fn bilateral_preserves_edges() {
    let height = 10.0;
    let x: Vec<f64> = (0..200).map(|i| if i < 100 { 0.0 } else { height }).collect();
    let y = run(Bilateral::new(BilateralParams::default()).unwrap(), &x);
    for (i, v) in y.iter().enumerate() {
        let plateau = if i < 100 { 0.0 } else { height };
        assert!((v - plateau).abs() <= 0.01 * height, "frame {i}: {v}");
    }
}

// ---- meshflow ----

fn meshflow_oracle(x: &[f64], anchors: &[Option<f64>], w: f64) -> Vec<f64> {
    let n = x.len();
    // gradient of the objective is H y - g
    let mut d = DMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        d[(i, i)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    let mut h = DMatrix::identity(n, n) + d.transpose() * &d * w;
    let mut g = DVector::from_column_slice(x);
    for (i, a) in anchors.iter().enumerate() {
        if let Some(a) = a {
            h[(i, i)] += ANCHOR_WEIGHT;
            g[i] += ANCHOR_WEIGHT * a;
        }
    }
    h.lu().solve(&g).unwrap().iter().copied().collect()
}

#[test]
fn meshflow_window_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [1, 2, 3, 20] {
        let x = noisy(n as u64, n);
        let anchors: Vec<Option<f64>> = (0..n)
            .map(|i| (i + 2 < n).then(|| rng.random_range(-2.0..2.0)))
            .collect();
        for w in [0.0, 0.5, 10.0, 1e3] {
            let y = meshflow_window(&x, &anchors, w);
            assert!(max_abs_diff(&y, &meshflow_oracle(&x, &anchors, w)) < 1e-9, "n {n} w {w}");
        }
    }
}

#[test]
fn meshflow_stream_reuses_emitted_values() {
    let x = noisy(12, 60);
    let p = MeshflowParams::default();
    let y = run(Meshflow::new(p).unwrap(), &x);
    // frame t is the second-newest entry of the window ending at t + 1
    for t in 0..59 {
        let lo = (t + 2usize).saturating_sub(p.window);
        let anchors: Vec<Option<f64>> = (lo..=t + 1).map(|i| (i < t).then(|| y[i])).collect();
        let sol = meshflow_oracle(&x[lo..=t + 1], &anchors, p.w);
        assert!((sol[sol.len() - 2] - y[t]).abs() < 1e-9, "frame {t}");
    }
}

#[test]
fn meshflow_without_smoothing_is_identity() {
    let x = noisy(2, 50);
    let y = run(Meshflow::new(MeshflowParams { window: 20, w: 0.0 }).unwrap(), &x);
    assert!(max_abs_diff(&y, &x) < 1e-12);
}

// ---- moving average ----

#[test]
fn movavg_impulse_plateau() {
    let mut x = vec![0.0; 40];
    x[10] = 8.0;
    let y = run(MovAvg::new(MovAvgParams { window: 4 }).unwrap(), &x);
    for (i, v) in y.iter().enumerate() {
        let expect = if (10..14).contains(&i) { 2.0 } else { 0.0 };
        assert_eq!(*v, expect);
    }
}

#[test]
fn movavg_matches_direct_sum() {
    let x = noisy(6, 300);
    let y = run(MovAvg::new(MovAvgParams::default()).unwrap(), &x);
    for k in 0..300 {
        let lo = (k + 1usize).saturating_sub(16);
        let m: f64 = x[lo..=k].iter().sum::<f64>() / (k + 1 - lo) as f64;
        assert!((y[k] - m).abs() < 1e-12);
    }
}

// ---- shared contract ----

#[test]
fn constant_in_constant_out() {
    for (name, make) in all_filters() {
        let y = FilterSession::new(make()).run(&[-7.5; 150]).unwrap();
        assert_eq!(y.len(), 150);
        assert!(y.iter().all(|v| (v + 7.5).abs() < 1e-9), "{name}");
    }
}

#[test]
fn declared_latency_is_observed_and_causal() {
    let x = noisy(1, 300);
    for (name, make) in all_filters() {
        let session = || Ok(FilterSession::new(make()));
        let declared = session().unwrap().latency();
        assert_eq!(measure_latency(session().unwrap(), &x).unwrap(), declared, "{name}");
        assert!(causality_probe(session, &x, &[0, 5, 50, 180, 290], 3.0).unwrap(), "{name}");
    }
}

#[test]
fn noisy_hold_is_not_frozen() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x: Vec<f64> = (0..400).map(|_| rng.random_range(-0.5..0.5)).collect();
    for (name, make) in all_filters() {
        let y = FilterSession::new(make()).run(&x).unwrap();
        assert!(y.windows(2).all(|w| w[0] != w[1]), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_equivariant(seed in 0u64..1000, n in 1usize..160, c in -1e3..1e3f64) {
        let x = noisy(seed, n);
        let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
        for (name, make) in all_filters() {
            let a = FilterSession::new(make()).run(&x).unwrap();
            let b = FilterSession::new(make()).run(&xs).unwrap();
            prop_assert_eq!(a.len(), n);
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u + c - v).abs() < 1e-9, "{}: {} vs {}", name, u + c, v);
            }
        }
    }
}
