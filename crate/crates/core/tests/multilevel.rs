use proptest::prelude::*;
use qmle_core::discrim::Profile;
use qmle_core::dist::{exact_power_sum, make_uniform, make_zipf, Distribution};
use qmle_core::encode::build_encoding;
use qmle_core::encode::dense::Purification;
use qmle_core::entropy::{plan_tsallis_gt1, plan_tsallis_lt1};
use qmle_core::multilevel::*;
use qmle_core::poly::{certify, ChebPoly};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn self_certified(p: ChebPoly) -> ChebPoly {
    let c = certify(&p, |x| p.eval(x).unwrap(), (-1.0, 1.0), 1e-12);
    p.with_cert(c)
}

fn dyadic(m: usize) -> Vec<f64> {
    (0..m + 3).map(|j| 2f64.powi(-(j as i32))).collect()
}

fn constant_plan(m: usize, value: f64) -> LevelPlan {
    let poly = self_certified(ChebPoly::constant(value));
    LevelPlan::new(FunctionalSpec::power(2.0, 2.0), 0.1, 2.0, dyadic(m), vec![1.0; m + 1], vec![poly; m]).unwrap()
}

fn opts(profile: Profile) -> PipelineOptions {
    PipelineOptions { profile, ..Default::default() }
}

#[test]
fn amplitude_examples() {
    let p = Distribution::new(vec![0.36, 0.64]).unwrap();
    let plan = constant_plan(3, 1.0);
    let o = opts(Profile::Ideal);
    assert!((level_true_amplitude(&p, &plan, 1, &o).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(level_true_amplitude(&p, &plan, 2, &o).unwrap(), 0.0);
    assert!(level_true_amplitude(&p, &plan, 0, &o).is_err());
    assert!(level_true_amplitude(&p, &plan, 4, &o).is_err());
    let zero = constant_plan(3, 0.0);
    for profile in [Profile::Ideal, Profile::Smooth, Profile::Adversarial { seed: 3 }] {
        for j in 1..=3 {
            assert_eq!(level_true_amplitude(&make_zipf(40, 1.0).unwrap(), &zero, j, &opts(profile)).unwrap(), 0.0);
        }
    }
}

#[test]
fn plans_reject_bad_shapes() {
    let one = self_certified(ChebPoly::constant(1.0));
    let f = FunctionalSpec::power(2.0, 2.0);
    assert!(LevelPlan::new(f.clone(), 0.1, 2.0, dyadic(0), vec![1.0], vec![]).is_err());
    assert!(LevelPlan::new(f.clone(), 0.1, 2.0, dyadic(1), vec![1.0], vec![one.clone()]).is_err());
    assert!(LevelPlan::new(f.clone(), 0.1, 2.0, vec![1.0, 0.5, 0.5, 0.1], vec![1.0; 2], vec![one.clone()]).is_err());
    assert!(LevelPlan::new(f.clone(), 0.1, 2.0, dyadic(1), vec![1.0; 2], vec![ChebPoly::constant(1.0)]).is_err());
    let odd = self_certified(ChebPoly::chebyshev_t(1));
    assert!(LevelPlan::new(f, 0.1, 2.0, dyadic(2), vec![1.0; 3], vec![one, odd]).is_err());
}

#[test]
fn discriminator_schedule() {
    let plan = plan_tsallis_gt1(2.0, 0.1).unwrap();
    let m = plan.m as f64;
    for j in 1..=plan.m {
        let big = plan.b[j].max(plan.b[j + 1]).max(plan.b[j + 2]);
        assert_eq!(plan.eps1s[j - 1], (0.1 / (24.0 * m * big)).min(1.0));
        assert_eq!(plan.eps2s[j - 1], (0.1 / (6.0 * m * big)).min(1.0));
        assert_eq!(plan.ae_eps(j), (0.1 / (6.0 * m * plan.b[j].max(plan.b[j + 1]))).min(1.0));
        let d = plan.discriminator(j, &PipelineOptions::default()).unwrap().unwrap();
        assert_eq!(d.gamma, plan.phis[j] / 2.0);
        let c = plan.level_cost(j, &PipelineOptions::default()).unwrap();
        let prev = plan.discriminator(j - 1, &PipelineOptions::default()).unwrap().map_or(0, |d| d.cost());
        assert_eq!(c.total(), 1 + u128::from(prev) + u128::from(d.cost()) + u128::from(plan.poly(j).degree()));
    }
    assert!(plan.discriminator(0, &PipelineOptions::default()).unwrap().is_none());
}

#[test]
fn ideal_weights_are_exact() {
    let plan = plan_tsallis_lt1(0.5, 200, 0.1).unwrap();
    let p = make_zipf(200, 1.3).unwrap();
    let beta = beta_weights(&p, &plan, &opts(Profile::Ideal)).unwrap();
    let mut inside = 0;
    for (i, &pi) in p.probs().iter().enumerate() {
        let x = pi.sqrt();
        for j in 1..=plan.m {
            if x <= plan.phis[j + 1] || x > plan.phis[j - 1] {
                assert_eq!(beta.get(i, j), 0.0, "i={i} j={j}");
            }
            if x >= plan.phis[j] && x <= plan.phis[j - 1] {
                assert_eq!(beta.get(i, j - 1) + beta.get(i, j), 1.0);
                inside += 1;
            }
        }
    }
    assert!(inside > 100);
}

#[test]
fn smooth_completeness_within_band() {
    let plan = plan_tsallis_lt1(0.5, 64, 0.1).unwrap();
    let p = make_zipf(64, 1.0).unwrap();
    let beta = beta_weights(&p, &plan, &opts(Profile::Smooth)).unwrap();
    let mf = plan.m as f64;
    for (i, &pi) in p.probs().iter().enumerate() {
        let x = pi.sqrt();
        for j in 1..=plan.m {
            if x >= plan.phis[j] && x <= plan.phis[j - 1] {
                let s = beta.get(i, j - 1) + beta.get(i, j);
                assert!(s <= 1.0 + 1e-12 && s >= 1.0 - plan.eps / (3.0 * mf * plan.b[j]), "i={i} j={j} s={s}");
            }
        }
    }
}

#[test]
fn single_level_point_mass() {
    let plan = constant_plan(1, 1.0);
    let p = make_uniform(1).unwrap();
    let tol = plan.ae_eps(1);
    let hits = (0..30)
        .filter(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let r = run_estimate(&p, &plan, Backend::Block, &opts(Profile::Ideal), &mut rng).unwrap();
            assert_eq!(r.estimate, r.per_level[0].v_tilde);
            (r.estimate - 1.0).abs() <= tol
        })
        .count();
    assert!(hits >= 20, "{hits}/30");
}

#[test]
fn uniform_power_sum_estimate() {
    let p = make_uniform(4).unwrap();
    let plan = plan_tsallis_gt1(2.0, 0.1).unwrap();
    let exact = exact_power_sum(&p, 2.0).unwrap();
    let hits = (0..50)
        .filter(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let r = run_estimate(&p, &plan, Backend::Block, &PipelineOptions::default(), &mut rng).unwrap();
            (r.estimate - exact).abs() <= 0.1
        })
        .count();
    assert!(hits * 3 >= 50 * 2, "{hits}/50");
}

#[test]
fn dense_and_block_amplitudes_agree() {
    let plan = plan_tsallis_gt1(2.0, 0.2).unwrap();
    let p = Distribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    for profile in [Profile::Ideal, Profile::Smooth, Profile::Adversarial { seed: 9 }] {
        let o = opts(profile);
        let block = level_amplitudes(&p, &plan, Backend::Block, &o).unwrap();
        let fixed = level_amplitudes(&p, &plan, Backend::Dense { purification: Purification::Fixed }, &o).unwrap();
        let random =
            level_amplitudes(&p, &plan, Backend::Dense { purification: Purification::RandomSeeded(13) }, &o).unwrap();
        for ((b, f), r) in block.iter().zip(&fixed).zip(&random) {
            assert!((b.0 - f.0).abs() < 1e-9, "{profile:?}: {} vs {}", b.0, f.0);
            assert!((f.0 - r.0).abs() < 1e-10);
        }
        let run = |backend| {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            run_estimate(&p, &plan, backend, &o, &mut rng).unwrap().estimate
        };
        // Identical amplitudes up to roundoff give the same pmfs, so the
        // same draws land on the same grid points.
        let fixed_estimate = run(Backend::Dense { purification: Purification::Fixed });
        assert!((fixed_estimate - run(Backend::Dense { purification: Purification::RandomSeeded(2) })).abs() < 1e-10);
        assert!((fixed_estimate - run(Backend::Block)).abs() < 1e-10);
    }
}

#[test]
fn ledger_is_consistent() {
    let p = make_zipf(50, 1.0).unwrap();
    let plan = plan_tsallis_lt1(0.5, 50, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let r = run_estimate(&p, &plan, Backend::Block, &PipelineOptions::default(), &mut rng).unwrap();
    assert_eq!(QueryLedger::recompute(&r.per_level), Some(r.queries_total));
    assert_eq!(r.queries_by_level.iter().sum::<u128>(), r.queries_total);
    let ledger = r.ledger();
    assert_eq!(ledger.total, r.queries_total);
    let s: f64 = r.per_level.iter().fold(0.0, |acc, l| acc + plan.b[l.level].max(plan.b[l.level + 1]) * l.v_tilde);
    assert_eq!(s, r.estimate);
    for l in &r.per_level {
        assert_eq!(l.cost_v, plan.level_cost(l.level, &PipelineOptions::default()).unwrap().total());
    }
}

#[test]
fn reports_are_deterministic() {
    let p = make_zipf(30, 1.0).unwrap();
    let plan = plan_tsallis_gt1(1.5, 0.1).unwrap();
    let json = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = run_estimate(&p, &plan, Backend::Block, &opts(Profile::Adversarial { seed: 5 }), &mut rng).unwrap();
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(json(21), json(21));
    let v: serde_json::Value = serde_json::from_str(&json(21)).unwrap();
    for key in ["estimate", "per_level", "queries_total", "queries_by_level"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn budget_holds_across_profiles() {
    let plan = plan_tsallis_gt1(2.0, 0.1).unwrap();
    let mut profiles = vec![Profile::Ideal, Profile::Smooth];
    profiles.extend((0..20).map(|seed| Profile::Adversarial { seed }));
    for p in [make_uniform(64).unwrap(), make_zipf(64, 1.0).unwrap()] {
        for &profile in &profiles {
            let r = verify_error_budget(&p, &plan, &opts(profile)).unwrap();
            assert!(r.passed(), "{profile:?}: {r:?}");
            assert!(r.deterministic_error <= 2.0 * plan.eps / 3.0);
        }
    }
    let perturbed = PipelineOptions { perturb_map: true, ..opts(Profile::Ideal) };
    assert!(verify_error_budget(&make_zipf(64, 1.0).unwrap(), &plan, &perturbed).unwrap().passed());
}

#[test]
fn junk_polynomials_fail_the_budget() {
    let plan = plan_tsallis_gt1(2.0, 0.1).unwrap();
    let junk = vec![self_certified(ChebPoly::constant(0.9)); plan.m];
    let bad = LevelPlan::new(
        plan.functional.clone(),
        plan.eps,
        plan.rho,
        plan.phis.clone(),
        plan.b[1..=plan.m + 1].to_vec(),
        junk,
    )
    .unwrap();
    let r = verify_error_budget(&make_zipf(64, 1.0).unwrap(), &bad, &PipelineOptions::default()).unwrap();
    assert!(!r.approximation.passed());
    assert!(!r.passed());
}

fn dist_strategy() -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, 1..=40).prop_filter_map("all zero", |w| Distribution::normalized(w).ok())
}

fn profile_strategy() -> impl Strategy<Value = Profile> {
    prop_oneof![
        Just(Profile::Ideal),
        Just(Profile::Smooth),
        any::<u64>().prop_map(|seed| Profile::Adversarial { seed }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn amplitude_is_weighted_beta_sum(p in dist_strategy(), profile in profile_strategy()) {
        let plan = plan_tsallis_gt1(2.0, 0.2).unwrap();
        let o = opts(profile);
        let beta = beta_weights(&p, &plan, &o).unwrap();
        let sig = build_encoding(&p).sigmas;
        for j in 1..=plan.m {
            let mut want = 0.0;
            for (i, &pi) in p.probs().iter().enumerate() {
                let b = beta.get(i, j);
                prop_assert!((0.0..=1.0 + 1e-10).contains(&b));
                let v = plan.poly(j).eval(sig[i]).unwrap();
                want += pi * b * v * v;
            }
            let got = level_true_amplitude(&p, &plan, j, &o).unwrap();
            prop_assert!((got - want).abs() < 1e-12, "level {}: {} vs {}", j, got, want);
        }
    }
}
