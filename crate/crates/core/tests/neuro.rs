mod common;

use std::sync::Arc;

use cinefilter::convex::Lambdas;
use cinefilter::error::Error;
use cinefilter::metrics::causality_probe;
use cinefilter::neuro::conv::{Activation, ConvLayer};
use cinefilter::neuro::train::window_loss;
use cinefilter::neuro::weights::FrontEndSpec;
use cinefilter::neuro::*;
use cinefilter::synth::{generate_corpus, NoiseSpec, SamplerConfig};
use cinefilter::trajectory::{FilterSession, TrajectoryStream, WindowConfig};
use common::central_difference;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (cin, cout, n) in [(1, 3, 7), (4, 2, 9), (3, 5, 4)] {
        let mut layer = ConvLayer::zeros(cin, cout, Activation::Identity);
        layer.kernel = random_vec(&mut rng, cin * cout * 3, 1.0);
        layer.bias = random_vec(&mut rng, cout, 1.0);
        let x = Tensor1::from_vec(cin, n, random_vec(&mut rng, cin * n, 1.0)).unwrap();
        let r = random_vec(&mut rng, cout * n, 1.0);
        // scalar probe: <r, conv(x)>
        let f = |l: &ConvLayer, x: &Tensor1| -> f64 {
            l.linear(x).unwrap().data().iter().zip(&r).map(|(a, b)| a * b).sum()
        };
        let d = Tensor1::from_vec(cout, n, r.clone()).unwrap();
        let g = layer.backward(&x, &d).unwrap();
        for i in 0..layer.kernel.len() {
            let fd = central_difference(|h| {
                let mut l = layer.clone();
                l.kernel[i] += h;
                f(&l, &x)
            });
            assert!(rel_err(g.kernel[i], fd) < 1e-6, "kernel {i}: {} vs {fd}", g.kernel[i]);
        }
        for o in 0..cout {
            let fd = central_difference(|h| {
                let mut l = layer.clone();
                l.bias[o] += h;
                f(&l, &x)
            });
            assert!(rel_err(g.bias[o], fd) < 1e-6);
        }
        for j in 0..cin * n {
            let fd = central_difference(|h| {
                let mut xp = x.clone();
                xp.data_mut()[j] += h;
                f(&layer, &xp)
            });
            assert!(rel_err(g.input.data()[j], fd) < 1e-6, "input {j}");
        }
    }
}

#[test]
fn network_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = UNet1D::init(3);
    for l in &mut model.layers {
        for b in &mut l.bias {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    let n = 24;
    let x = Tensor1::signal(&random_vec(&mut rng, n, 2.0)).unwrap();
    let r = random_vec(&mut rng, n, 1.0);
    let f = |m: &UNet1D| -> f64 { m.forward(&x).unwrap().data().iter().zip(&r).map(|(a, b)| a * b).sum() };
    let trace = model.forward_trace(&x).unwrap();
    let grads = model.backward(&trace, &Tensor1::signal(&r).unwrap()).unwrap();
    let g = grads.tensors();
    for t in 0..g.len() {
        for _ in 0..10 {
            let i = rng.random_range(0..g[t].len());
            let fd = central_difference(|h| {
                let mut m = model.clone();
                m.tensors_mut()[t][i] += h;
                f(&m)
            });
            assert!(rel_err(g[t][i], fd) < 1e-4, "tensor {t} index {i}: {} vs {fd}", g[t][i]);
        }
    }
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let lam = Lambdas::new(1.5, 0.0, 2.0, 3.0).unwrap();
    let x = random_vec(&mut rng, 30, 3.0);
    let y = random_vec(&mut rng, 30, 3.0);
    let (_, g) = loss(&y, &x, &lam).unwrap();
    for i in 0..y.len() {
        let fd = central_difference(|h| {
            let mut yp = y.clone();
            yp[i] += h;
            loss(&yp, &x, &lam).unwrap().0
        });
        assert!(rel_err(g[i], fd) < 1e-4, "{i}: {} vs {fd}", g[i]);
    }
}

#[test]
fn locality_is_five_frames() {
    let model = UNet1D::init(11);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_vec(&mut rng, 64, 1.0);
    let base = model.forward(&Tensor1::signal(&x).unwrap()).unwrap();
    let k = 30;
    let mut xp = x.clone();
    xp[k] += 0.7;
    let pert = model.forward(&Tensor1::signal(&xp).unwrap()).unwrap();
    for i in 0..64 {
        let changed = base.data()[i] != pert.data()[i];
        if i.abs_diff(k) > 5 {
            assert!(!changed, "frame {i} moved");
        }
    }
}

#[test]
fn hand_written_weights_drive_forward() {
    // layer 1 copies x into channel 0; layers 2-4 are zero so h4 = relu(h1);
    // layer 5 doubles channel 0 and adds 1: out = 2 relu(x) + 1
    let mut model = UNet1D::zeros();
    model.layers[0].kernel[1] = 1.0;
    model.layers[4].kernel[1] = 2.0;
    model.layers[4].bias[0] = 1.0;
    let w = Weights {
        model,
        front_end: FrontEndSpec { tv_lam: 1.0, future: 16 },
    };
    let loaded = Weights::from_json(&w.to_json().unwrap()).unwrap();
    let x = [-1.0, 2.0, 0.5, -3.0, 4.0, 0.0, 1.0, -0.5, 2.5, 3.0, -2.0, 1.5];
    let out = loaded.model.forward(&Tensor1::signal(&x).unwrap()).unwrap();
    let expect: Vec<f64> = x.iter().map(|v| 2.0 * v.max(0.0) + 1.0).collect();
    assert_eq!(out.data(), expect.as_slice());
}

fn trained_like(seed: u64) -> Weights {
    let mut model = UNet1D::init(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in &mut model.layers {
        for b in &mut l.bias {
            *b = rng.random_range(-0.05..0.05);
        }
    }
    Weights {
        model,
        front_end: FrontEndSpec { tv_lam: 3.0, future: 16 },
    }
}

#[test]
fn weights_round_trip_bit_exact_and_small() {
    let w = trained_like(4);
    let s1 = w.to_json().unwrap();
    let back = Weights::from_json(&s1).unwrap();
    assert_eq!(back, w);
    for (a, b) in back.model.tensors().iter().zip(w.model.tensors()) {
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(back.to_json().unwrap(), s1);
    assert!(s1.len() < 400 * 1024, "{} bytes", s1.len());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    w.save(&path).unwrap();
    assert_eq!(Weights::load(&path).unwrap(), w);
}

#[test]
fn malformed_weight_files_are_schema_errors() {
    let s = trained_like(1).to_json().unwrap();
    assert!(matches!(Weights::from_json(&s[..s.len() / 2]), Err(Error::Schema(_))));
    let bumped = s.replacen("\"format_version\":1", "\"format_version\":2", 1);
    assert!(matches!(Weights::from_json(&bumped), Err(Error::Schema(_))));
    let mut f = trained_like(1).to_file();
    f.kernels[2].pop();
    let s = serde_json::to_string(&f).unwrap();
    assert!(matches!(Weights::from_json(&s), Err(Error::Schema(_))));
}

fn noisy_track(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = 50.0;
    let mut slope = 0.0;
    (0..n)
        .map(|i| {
            if i % 60 == 0 {
                slope = rng.random_range(-1.0..1.0);
            }
            v += slope;
            v + rng.random_range(-0.5..0.5)
        })
        .collect()
}

#[test]
fn streaming_matches_single_pass_bit_for_bit() {
    let w = trained_like(9);
    let model = Arc::new(w.model.clone());
    for (seed, n) in [(1, 300), (2, 17), (3, 5), (4, 1)] {
        let x = noisy_track(seed, n);
        let c = CineCnn::new(model.clone(), WindowConfig::CINECNN, 3.0).unwrap();
        let stream = FilterSession::new(Box::new(c)).run(&x).unwrap();
        let batch = cinecnn_batch(&w.model, &x, 16, 3.0).unwrap();
        assert_eq!(stream.len(), n);
        assert!(
            stream.iter().zip(&batch).all(|(a, b)| a.to_bits() == b.to_bits()),
            "n = {n}"
        );
    }
}

#[test]
fn latency_and_causality() {
    let model = Arc::new(trained_like(2).model);
    let x = noisy_track(5, 200);
    let make = || {
        Ok(FilterSession::new(Box::new(CineCnn::new(
            model.clone(),
            WindowConfig::CINECNN,
            3.0,
        )?)))
    };
    assert_eq!(cinefilter::metrics::measure_latency(make().unwrap(), &x).unwrap(), 16);
    assert!(causality_probe(make, &x, &[0, 20, 77, 150], 5.0).unwrap());
}

#[test]
fn zero_model_passes_front_end_through() {
    let x = noisy_track(6, 120);
    let c = CineCnn::new(Arc::new(UNet1D::zeros()), WindowConfig::CINECNN, 2.0).unwrap();
    let y = FilterSession::new(Box::new(c)).run(&x).unwrap();
    assert_eq!(y, front_end(&x, 16, 2.0).unwrap());
}

#[test]
fn rejects_strided_config() {
    let r = CineCnn::new(Arc::new(UNet1D::zeros()), WindowConfig::new(2, 15, 16).unwrap(), 1.0);
    assert!(matches!(r, Err(Error::InvalidParameter(_))));
}

#[test]
fn window_counts() {
    let s = |n: usize| TrajectoryStream::from_values(&vec![0.0; n]);
    assert_eq!(make_windows(&[s(512)], 512, 100, 16, 1.0).unwrap().len(), 1);
    assert_eq!(make_windows(&[s(1024)], 512, 64, 16, 1.0).unwrap().len(), 9);
    assert_eq!(make_windows(&[s(511)], 512, 64, 16, 1.0).unwrap().len(), 0);

    let corpus = generate_corpus(5, 900, 3, &SamplerConfig::default(), &NoiseSpec::gaussian(0.5, 0)).unwrap();
    let streams: Vec<_> = corpus.iter().map(|c| TrajectoryStream::from_values(&c.noisy)).collect();
    let mut direct = 0;
    for c in &corpus {
        let mut start = 0;
        while start + 512 <= c.noisy.len() {
            direct += 1;
            start += 37;
        }
    }
    let w = make_windows(&streams, 512, 37, 16, 1.0).unwrap();
    assert_eq!(w.len(), direct);
    assert_eq!(w[1].target, corpus[0].noisy[37..549].to_vec());
}

fn small_corpus(count: usize) -> Vec<TrainWindow> {
    let corpus = generate_corpus(count, 1024, 7, &SamplerConfig::benchmark(), &NoiseSpec::gaussian(0.5, 0)).unwrap();
    let streams: Vec<_> = corpus.iter().map(|c| TrajectoryStream::from_values(&c.noisy)).collect();
    make_windows(&streams, 512, 128, 16, 10.0).unwrap()
}

#[test]
fn training_halves_the_loss_and_is_deterministic() {
    let windows = small_corpus(8);
    let cfg = TrainConfig {
        epochs: 20,
        seed: 3,
        ..TrainConfig::default()
    };
    let a = train(&windows, &cfg).unwrap();
    let h = &a.history;
    assert_eq!(h.len(), 20);
    assert!(h[19].train_loss < 0.5 * h[0].train_loss, "{} vs {}", h[19].train_loss, h[0].train_loss);
    let best = h.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(h[a.best_epoch - 1].val_loss, best);

    let short = TrainConfig { epochs: 2, ..cfg };
    let b = train(&windows, &short).unwrap();
    let c = train(&windows, &short).unwrap();
    assert_eq!(b.history, c.history);
    assert_eq!(b.model, c.model);
}

#[test]
fn plateau_decays_learning_rate() {
    let windows = small_corpus(2);
    // a learning rate this small leaves the validation loss unchanged
    let cfg = TrainConfig {
        epochs: 8,
        lr: 1e-300,
        ..TrainConfig::default()
    };
    let h = train(&windows, &cfg).unwrap().history;
    for e in &h[..6] {
        assert_eq!(e.lr, 1e-300);
    }
    assert_eq!(h[6].lr, 1e-300 * 0.1);
}

#[test]
fn nan_target_is_divergence() {
    let mut windows = small_corpus(1);
    windows[0].target[100] = f64::NAN;
    let cfg = TrainConfig {
        epochs: 1,
        validation: 0.0,
        ..TrainConfig::default()
    };
    assert!(matches!(train(&windows, &cfg), Err(Error::Divergence { epoch: 1, .. })));
}

#[test]
fn window_loss_ignores_padded_edges() {
    let model = UNet1D::init(1);
    let mut w = small_corpus(1).remove(0);
    let base = window_loss(&model, &w, &Lambdas::SYNTHETIC, None).unwrap();
    w.target[0] += 100.0;
    w.target[511] -= 100.0;
    assert_eq!(window_loss(&model, &w, &Lambdas::SYNTHETIC, None).unwrap(), base);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn output_length_is_input_length(n in 11usize..80, seed in 0u64..1000) {
        let model = UNet1D::init(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor1::signal(&random_vec(&mut rng, n, 5.0)).unwrap();
        prop_assert_eq!(model.forward(&x).unwrap().length(), n);
    }

    #[test]
    fn interior_correction_ignores_offsets(seed in 0u64..1000, c in -500.0..500.0f64) {
        // zero-sum first layer: shifting the input leaves the correction alone
        let model = UNet1D::init(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vec(&mut rng, 40, 3.0);
        let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = model.forward(&Tensor1::signal(&x).unwrap()).unwrap();
        let b = model.forward(&Tensor1::signal(&xs).unwrap()).unwrap();
        for i in 5..35 {
            prop_assert!((a.data()[i] - b.data()[i]).abs() <= 1e-9 * (1.0 + c.abs()));
        }
    }
}
