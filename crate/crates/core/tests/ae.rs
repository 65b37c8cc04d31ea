use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use qmle_core::ae::*;

fn radius(a: f64, t: u64) -> f64 {
    let t = t as f64;
    2.0 * PI * (a * (1.0 - a)).sqrt() / t + PI * PI / (t * t)
}

fn total(p: &AePmf) -> f64 {
    p.points.iter().map(|x| x.1).sum()
}

#[test]
fn pmf_examples() {
    for t in [1, 2, 7, 64, 1000] {
        let p = ae_distribution(0.0, t).unwrap();
        assert!((p.mass_within(0.0, 0.0) - 1.0).abs() < 1e-12);
    }
    let p = ae_distribution(0.5, 8).unwrap();
    assert!((p.mass_within(0.5, 1e-12) - 1.0).abs() < 1e-12);
    let p = ae_distribution(0.3, 64).unwrap();
    assert!(p.mass_within(0.3, radius(0.3, 64)) >= 8.0 / (PI * PI));
}

#[test]
fn pmf_is_normalized_and_on_grid() {
    for &a in &[0.0, 1e-6, 0.01, 0.25, 0.3, 0.5, 0.77, 0.999, 1.0] {
        for &t in &[1u64, 2, 3, 10, 63, 64, 257, 4096] {
            let p = ae_distribution(a, t).unwrap();
            assert!((total(&p) - 1.0).abs() < 1e-12, "a={a} t={t}");
            for (y, (e, _)) in p.points.iter().enumerate() {
                let s = (PI * y as f64 / t as f64).sin();
                assert!((e - s * s).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn error_radius_holds_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let a: f64 = rng.random();
        let t: u64 = rng.random_range(1..5000);
        let p = ae_distribution(a, t).unwrap();
        let mass = p.mass_within(a, radius(a, t));
        assert!(mass >= 8.0 / (PI * PI) - 1e-12, "a={a} t={t} mass={mass}");
    }
}

#[test]
fn median_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        assert_eq!(median_boosted_ae(0.0, 50, 0.1, &mut rng).unwrap().estimate, 0.0);
        assert!((median_boosted_ae(0.5, 8, 0.1, &mut rng).unwrap().estimate - 0.5).abs() < 1e-12);
    }
    let out = median_boosted_ae(0.2, 16, 0.1, &mut rng).unwrap();
    assert_eq!(out.repeats, (18.0 * 20f64.ln()).ceil() as u64);
    assert_eq!(out.grover_calls, 16);
}

#[test]
fn median_failure_rate() {
    let (a, t, eta) = (0.3, 64, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let failures = (0..1000)
        .filter(|_| (median_boosted_ae(a, t, eta, &mut rng).unwrap().estimate - a).abs() > radius(a, t))
        .count();
    assert!(failures <= 10, "{failures} failures");
}

#[test]
fn two_stage_zero_and_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let out = two_stage_ae(0.0, 1, 0.1, 0.1, &mut rng).unwrap();
    assert_eq!(out.estimate, 0.0);
    assert_eq!(out.rounds.len(), 1);
    let hits = (0..200).filter(|_| two_stage_ae(0.01, 1, 0.1, 0.1, &mut rng).unwrap().estimate == 0.0).count();
    assert!(hits as f64 >= 0.9 * 200.0);
}

#[test]
fn two_stage_accuracy_and_queries() {
    let (eps, eta, cv) = (0.01, 1.0 / 3.0, 7u128);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mean_cost = Vec::new();
    for a in [0.05, 0.5] {
        let runs: Vec<TwoStageOutcome> = (0..200).map(|_| two_stage_ae(a, cv, eps, eta, &mut rng).unwrap()).collect();
        let good = runs.iter().filter(|r| (r.estimate - a).abs() <= eps).count();
        assert!(good * 3 >= 200 * 2);
        for r in &runs {
            let want: u128 = r.rounds.iter().map(|x| (2 * x.grover_calls as u128 + 1) * x.repeats as u128 * cv).sum();
            assert_eq!(r.queries, want);
            assert_eq!(r.rounds[0].grover_calls, (PI * (80.0 / eps).sqrt()).ceil() as u64);
            if let Some(second) = r.rounds.get(1) {
                assert!(second.grover_calls <= (4.0 * PI * (3.0 * a).sqrt() / eps).ceil() as u64 + 1);
            }
        }
        let mean = runs.iter().map(|r| r.queries as f64).sum::<f64>() / 200.0;
        let shape = ((a.sqrt() / eps) + 1.0 / eps.sqrt()) * (1.0 / eta).ln() * cv as f64;
        // Prediction with every constant spelled out, evaluated at the true amplitude.
        let r = AeParams::default().repeats(eta) as f64;
        let t1 = (PI * (80.0 / eps).sqrt()).ceil();
        let t2 = (4.0 * PI * (2.0 * a).sqrt() / eps).max(PI * (2.0 / eps).sqrt()).ceil();
        let predicted = ((2.0 * t1 + 1.0) + (2.0 * t2 + 1.0)) * r * cv as f64;
        assert!(mean <= 4.0 * predicted && mean >= predicted / 4.0, "mean {mean} predicted {predicted}");
        mean_cost.push(mean / shape);
    }
    // The constant hidden in the asymptotic shape is stable across amplitudes.
    let ratio = mean_cost[0] / mean_cost[1];
    assert!((0.25..=4.0).contains(&ratio), "normalized costs {mean_cost:?}");
}

#[test]
fn two_stage_grid_accuracy() {
    let (eps, eta) = (0.05, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for a in [0.0, eps / 4.0, eps / 2.0, 2.0 * eps, 0.1, 0.5, 0.9] {
        let ok = (0..300).filter(|_| (two_stage_ae(a, 1, eps, eta, &mut rng).unwrap().estimate - a).abs() <= eps).count();
        assert!(ok as f64 >= (1.0 - eta) * 300.0, "a={a}: {ok}/300");
    }
}

#[test]
fn invalid_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(ae_distribution(1.5, 4).is_err());
    assert!(ae_distribution(0.5, 0).is_err());
    assert!(median_boosted_ae(0.5, 4, 0.0, &mut rng).is_err());
    assert!(two_stage_ae(0.5, 1, 0.0, 0.1, &mut rng).is_err());
    assert!(two_stage_ae(0.5, 1, 1e-40, 0.1, &mut rng).is_err());
}
