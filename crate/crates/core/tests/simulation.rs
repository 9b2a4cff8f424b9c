mod common;

use biomeval::divergence::{compare_datasets, HistogramAxis};
use biomeval::evaluation::{evaluate, EvaluationParams};
use biomeval::simulator::{simulate_dataset, simulate_scores, SimulationConfig, SimulationError};
use biomeval::stats::{summarize_values, StdConvention};
use common::truncated_normal_moments;

fn check_moments(mean: f64, std: f64, seed: u64) {
    let xs = simulate_scores(mean, std, 10_000, seed).unwrap();
    assert_eq!(xs.len(), 10_000);
    assert!(xs.iter().all(|x| (-1.0..=1.0).contains(x)));
    let (m, s) = truncated_normal_moments(mean, std);
    let got = summarize_values(&xs, StdConvention::Population).unwrap();
    assert!((got.mean - m).abs() <= 0.01, "mean {} vs {m}", got.mean);
    assert!((got.std - s).abs() <= 0.01, "std {} vs {s}", got.std);
}

#[test]
fn recovers_truncated_moments() {
    for seed in [1, 2, 3] {
        check_moments(0.56, 0.21, seed);
        check_moments(0.01, 0.07, seed);
    }
}

#[test]
fn heavily_truncated_generator_still_matches() {
    // About a third of the mass falls outside [-1, 1].
    check_moments(0.9, 0.4, 7);
}

#[test]
fn impossible_truncation_is_reported() {
    assert!(matches!(
        simulate_scores(5.0, 0.01, 10, 0),
        Err(SimulationError::ImpossibleTruncation { .. })
    ));
    assert!(matches!(
        simulate_scores(0.0, -1.0, 10, 0),
        Err(SimulationError::InvalidConfig(_))
    ));
    assert_eq!(
        simulate_scores(0.5, 0.0, 3, 0).unwrap(),
        vec![0.5, 0.5, 0.5]
    );
}

#[test]
fn same_generator_kl_stays_within_sampling_noise() {
    let draw = |seed| simulate_scores(0.54, 0.18, 10_000, seed).unwrap();
    let kl = |a: u64, b: u64| {
        compare_datasets(
            &draw(b),
            &draw(a),
            50,
            HistogramAxis::StandardizedSimilarity,
        )
        .unwrap()
        .value
    };
    let mut noise: Vec<f64> = (0..100u64)
        .map(|k| kl(1000 + 2 * k, 1001 + 2 * k))
        .collect();
    noise.sort_by(f64::total_cmp);
    let bound = noise[98];
    assert!(bound > 0.0 && bound < 0.05, "{bound}");
    let held_out = kl(77_777, 88_888);
    assert!(held_out < bound, "{held_out} >= {bound}");

    // A shifted generator is far outside that noise band.
    let shifted = compare_datasets(
        &simulate_scores(0.52, 0.11, 10_000, 5).unwrap(),
        &draw(6),
        50,
        HistogramAxis::StandardizedSimilarity,
    )
    .unwrap()
    .value;
    assert!(shifted > 10.0 * bound);
}

#[test]
fn zero_spread_gives_perfect_mated_scores() {
    let ds = simulate_dataset(&SimulationConfig::balanced_36(32, 0.0, 4)).unwrap();
    let eval = evaluate(&ds, &EvaluationParams::default()).unwrap();
    assert_eq!(eval.mated.len(), 720);
    assert!(eval.mated_raw().iter().all(|&s| s == 1.0));
}

#[test]
fn stored_vectors_have_unit_norm() {
    let ds = simulate_dataset(&SimulationConfig::balanced_36(64, 0.3, 2)).unwrap();
    for r in ds.records() {
        let n: f64 = r
            .vector
            .iter()
            .map(|&x| (x as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        // f32 storage rounds each component to about 6e-8 relative.
        assert!((n - 1.0).abs() < 1e-6, "{n}");
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (v[n / 2 - 1] + v[n / 2]) / 2.0
}

#[test]
fn spread_drives_mated_std_and_eer() {
    let spreads = [0.05, 0.2, 0.5];
    let mut stds = Vec::new();
    let mut eers = Vec::new();
    for &spread in &spreads {
        let mut s = Vec::new();
        let mut e = Vec::new();
        for seed in 0..20u64 {
            let mut config = SimulationConfig::balanced_36(16, spread, seed);
            config.variations_per_identity = 10;
            let ds = simulate_dataset(&config).unwrap();
            let params = EvaluationParams {
                seed,
                ..EvaluationParams::default()
            };
            let report = evaluate(&ds, &params).unwrap().report;
            s.push(report.mated_summary.std);
            e.push(report.eer.eer);
        }
        stds.push(median(s));
        eers.push(median(e));
    }
    assert!(stds[0] < stds[1] && stds[1] < stds[2], "{stds:?}");
    assert!(eers[0] <= eers[1] && eers[1] <= eers[2], "{eers:?}");
}
