use cinefilter::bench::*;
use cinefilter::config::Config;
use cinefilter::metrics::MIN_STATIC;
use cinefilter::synth::{benchmark_suite, CorpusItem, GroundTruth};
use cinefilter::trajectory::FilterKind;

fn item(gt: Vec<f64>) -> CorpusItem {
    CorpusItem {
        seed: 0,
        noisy: gt.clone(),
        gt: GroundTruth {
            values: gt,
            segments: Vec::new(),
        },
    }
}

#[test]
fn par_map_keeps_order_for_any_thread_count() {
    let items: Vec<u64> = (0..37).collect();
    let expect: Vec<u64> = items.iter().map(|v| v * v + 1).collect();
    for threads in [0, 1, 3, 8, 100] {
        assert_eq!(par_map(&items, threads, |v| v * v + 1), expect);
    }
    assert!(par_map(&[] as &[u64], 4, |v| *v).is_empty());
}

#[test]
fn residual_motion_is_pooled_over_slopes() {
    // a long hold with a jitter of 0.2 per slope, and a shorter hold that is clean
    let a = item(vec![0.0; MIN_STATIC * 2]);
    let b = item(vec![0.0; MIN_STATIC]);
    let ya: Vec<f64> = (0..MIN_STATIC * 2).map(|i| (i % 2) as f64 * 0.2).collect();
    let yb = vec![0.0; MIN_STATIC];
    let s = score_outputs(&[ya, yb], &[a, b]).unwrap();
    let (na, nb) = ((2 * MIN_STATIC - 1) as f64, (MIN_STATIC - 1) as f64);
    assert_eq!(s.residual_slopes, 3 * MIN_STATIC - 2);
    assert!((s.residual_motion - 0.2 * na / (na + nb)).abs() < 1e-12);
    // per-sequence means are averaged with equal weight
    assert!((s.smoothness_mean - 0.2 / 2.0).abs() < 1e-12);
    assert!((s.precision_mean - 0.02 / 2.0).abs() < 1e-12);
}

#[test]
fn score_outputs_rejects_mismatches() {
    let suite = [item(vec![0.0; 10])];
    assert!(score_outputs(&[], &[]).is_err());
    assert!(score_outputs(&[], &suite).is_err());
    assert!(score_outputs(&[vec![0.0; 9]], &suite).is_err());
}

#[test]
fn swept_cells() {
    let sizes = [4, 8, 16, 32];
    let convex = sweep_cells(FilterKind::CineConvex, &sizes, 16);
    assert_eq!(convex.len(), 10);
    assert!(convex.iter().all(|(p, f)| p <= f));
    assert_eq!(sweep_cells(FilterKind::CineCnn, &sizes, 16), vec![(1, 4), (1, 8), (1, 16), (1, 32)]);
    assert_eq!(sweep_cells(FilterKind::Sg, &sizes, 25), vec![(1, 25)]);
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let suite = benchmark_suite(2, 300, 0.5, 1).unwrap();
    let config = Config::default();
    let run = |threads| {
        let spec = SweepSpec {
            sizes: &[4, 8],
            suite: &suite,
            fps_stream: &suite[0].noisy[..200],
            fps_reps: 10,
            threads,
        };
        sweep(&config, FilterKind::CineConvex, None, &spec).unwrap()
    };
    let (one, two) = (run(1), run(2));
    assert_eq!(one.cells.len(), 3);
    for (a, b) in one.cells.iter().zip(&two.cells) {
        assert_eq!((a.present, a.future, a.score), (b.present, b.future, b.score));
        assert!(a.fps > 0.0);
    }
    let md = one.markdown();
    assert!(md.contains("| p=8 |  | ("), "{md}");
    assert!(one.cell(8, 4).is_none() && one.cell(4, 8).is_some());
}
