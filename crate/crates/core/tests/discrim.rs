use num_complex::Complex64;
use proptest::prelude::*;
use qmle_core::dist::{make_uniform, Distribution};
use qmle_core::discrim::*;
use qmle_core::encode::dense::{DenseModel, Purification};
use qmle_core::encode::{ancilla_index, build_encoding, initial_branch_state};
use qmle_core::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn close(a: Flag, b: Flag, tol: f64) -> bool {
    (a[0] - b[0]).norm() <= tol && (a[1] - b[1]).norm() <= tol
}

fn one(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn flag_examples() {
    let ideal = DiscriminatorConfig::new(0.25, 2.0, 0.01, 0.01, Profile::Ideal).unwrap();
    assert!(close(xi_response(0.4, 1.0, &ideal), [one(1.0), one(0.0)], 0.0));
    for nu in [1.0, -1.0] {
        assert!(close(xi_response(0.1, nu, &ideal), [one(0.0), I], 0.0));
    }
    let smooth = DiscriminatorConfig { profile: Profile::Smooth, ..ideal };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!(close(xi_response(0.25 / 2f64.sqrt(), 1.0, &smooth), [one(h), I * h], 1e-12));
}

#[test]
fn cost_example() {
    let e = 2f64.powi(-10);
    assert_eq!(DiscriminatorConfig::new(0.125, 2.0, e, e, Profile::Smooth).unwrap().cost(), 90);
}

#[test]
fn invalid_configs() {
    assert!(DiscriminatorConfig::new(0.5, 2.0, 0.1, 0.1, Profile::Ideal).is_err());
    assert!(DiscriminatorConfig::new(0.25, 1.0, 0.1, 0.1, Profile::Ideal).is_err());
    assert!(DiscriminatorConfig::new(0.25, 2.0, 0.0, 0.1, Profile::Ideal).is_err());
}

#[test]
fn apply_examples() {
    let cfg = DiscriminatorConfig::new(0.25, 2.0, 0.01, 0.01, Profile::Ideal).unwrap();
    let p = make_uniform(1).unwrap();
    let s = apply_discriminator(initial_branch_state(&p), &build_encoding(&p), &cfg, FlagRegister::C).unwrap();
    for (b, nu) in [(0, 1.0), (1, -1.0)] {
        let blk = s.block(0, b);
        let base = 0.5 * 0.5f64.sqrt();
        assert!((blk[ancilla_index(0, 0, 0, 0)] - one(nu * base)).norm() < 1e-15);
        assert_eq!(blk[ancilla_index(0, 0, 1, 0)], one(0.0));
    }
    assert_eq!(s.queries, 1 + cfg.cost() as u128);

    let p = make_uniform(64).unwrap();
    let s = apply_discriminator(initial_branch_state(&p), &build_encoding(&p), &cfg, FlagRegister::D).unwrap();
    for i in 0..64 {
        for b in 0..2 {
            let blk = s.block(i, b);
            let base = 0.5 * (0.5f64 / 64.0).sqrt();
            assert!((blk[ancilla_index(1, 1, 0, 1)] - I * base).norm() < 1e-15);
            assert_eq!(blk[ancilla_index(1, 1, 0, 0)], one(0.0));
        }
    }
}

#[test]
fn reusing_a_set_flag_is_a_violation() {
    let cfg = DiscriminatorConfig::new(0.25, 2.0, 0.01, 0.01, Profile::Ideal).unwrap();
    let p = make_uniform(64).unwrap();
    let spec = build_encoding(&p);
    let s = apply_discriminator(initial_branch_state(&p), &spec, &cfg, FlagRegister::C).unwrap();
    assert!(matches!(apply_discriminator(s, &spec, &cfg, FlagRegister::C), Err(Error::ContractViolation(_))));
}

#[test]
fn dense_and_block_agree() {
    let p = Distribution::new(vec![0.5, 0.3, 0.15, 0.05]).unwrap();
    let spec = build_encoding(&p);
    for profile in [Profile::Ideal, Profile::Smooth, Profile::Adversarial { seed: 4 }] {
        let cfg = DiscriminatorConfig::new(0.2, 2.0, 0.05, 0.05, profile).unwrap();
        for purif in [Purification::Fixed, Purification::RandomSeeded(2)] {
            let m = DenseModel::new(&p, purif).unwrap();
            let blk = apply_discriminator(initial_branch_state(&p), &spec, &cfg, FlagRegister::C).unwrap();
            let dense = apply_discriminator_dense(&m, &m.reference_state(), &cfg, FlagRegister::C).unwrap();
            let want = m.embed(&blk);
            let d: f64 = dense.amplitudes().iter().zip(want.amplitudes()).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(d.sqrt() < 1e-9, "{profile:?}: {}", d.sqrt());
        }
    }
}

fn profile_strategy() -> impl Strategy<Value = Profile> {
    prop_oneof![
        Just(Profile::Ideal),
        Just(Profile::Smooth),
        any::<u64>().prop_map(|seed| Profile::Adversarial { seed }),
    ]
}

proptest! {
    #[test]
    fn flags_are_unit_and_within_contract(
        sigma in 0.0f64..0.5,
        gamma in 0.01f64..0.49,
        rho in 1.05f64..8.0,
        eps in 0.001f64..1.0,
        profile in profile_strategy(),
        perturb in any::<bool>(),
    ) {
        let mut cfg = DiscriminatorConfig::new(gamma, rho, eps, eps, profile).unwrap();
        cfg.perturb_map = perturb;
        // The contract radius grows by eps1 when the map itself is perturbed.
        let radius = if perturb { 2.0 * eps } else { eps };
        for nu in [1.0, -1.0] {
            let f = xi_response(sigma, nu, &cfg);
            prop_assert!((f[0].norm_sqr() + f[1].norm_sqr() - 1.0).abs() < 1e-12);
            if sigma >= gamma {
                prop_assert!(close(f, [one(nu), one(0.0)], radius + 1e-12));
            } else if sigma <= gamma / rho {
                prop_assert!(close(f, [one(0.0), I], radius + 1e-12));
            }
        }
        if sigma >= gamma && profile == Profile::Ideal {
            let (a, b) = (xi_response(sigma, 1.0, &cfg), xi_response(sigma, -1.0, &cfg));
            prop_assert!(perturb || (a[0] + b[0]).norm() == 0.0);
        }
    }

    #[test]
    fn application_is_norm_preserving_and_non_destructive(
        w in prop::collection::vec(0.0f64..1.0, 1..=20),
        gamma in 0.01f64..0.49,
        profile in profile_strategy(),
    ) {
        let Ok(p) = Distribution::normalized(w) else { return Ok(()); };
        let cfg = DiscriminatorConfig::new(gamma, 2.0, 0.05, 0.05, profile).unwrap();
        let s0 = initial_branch_state(&p);
        let s = apply_discriminator(s0.clone(), &build_encoding(&p), &cfg, FlagRegister::D).unwrap();
        prop_assert!((s.norm_sqr() - s0.norm_sqr()).abs() < 1e-12);
        for (a, b) in s.branch_weights().iter().zip(s0.branch_weights()) {
            prop_assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
    }
}
