use embedded_spectra::coeff::{
    check_convolution_identities, check_h_expansion, check_reflection_symmetry, h_expansion_literal,
    probe_pole_containment, random_point, CoeffEngine, CoeffKey, CoeffValue, EvalPoint,
};
use embedded_spectra::rational::{int, ratio, Rational};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn key(i: usize, k: usize) -> CoeffKey {
    CoeffKey::new(i, k).unwrap()
}

#[test]
fn convolution_identities_small_orders() {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for order in 2..=4 {
        for harmonic in 2..=order {
            for split in 1..harmonic {
                let r = check_convolution_identities(&engine, order, harmonic, split, 30, &mut rng)
                    .unwrap();
                assert!(r.passed(), "{r}");
                assert!(r.checked() >= 25, "{r}");
            }
        }
    }
}

#[test]
fn reflection_symmetry_up_to_five() {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for order in 1..=5 {
        let r = check_reflection_symmetry(&engine, order, 40, &mut rng).unwrap();
        assert!(r.passed(), "{r}");
    }
}

#[test]
fn path_expansion_matches_recursion() {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for order in 1..=5 {
        let r = check_h_expansion(&engine, order, 20, &mut rng).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.checked() >= 18, "{r}");
    }
}

#[test]
fn literal_path_weights_differ_only_at_first_order() {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for order in 1..=4 {
        let p = random_point(&mut rng, order);
        let lit = h_expansion_literal(&p).into_finite().unwrap();
        let rec = engine.eval_F(key(order, 0), &p).unwrap().into_finite().unwrap();
        if order == 1 {
            assert_eq!(lit, rec * int(2));
        } else {
            assert_eq!(lit, rec);
        }
    }
}

#[test]
fn poles_stay_on_predicted_locus() {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for order in 1..=4 {
        let r = probe_pole_containment(&engine, order, 50, &mut rng).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.poles > 0, "{r}");
    }
}

/// `f_{I,1}` stays positive once `eta` dominates the phases.
#[test]
fn first_harmonic_sign_for_large_eta() {
    let engine = CoeffEngine::new();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for order in 1..=5 {
        for _ in 0..20 {
            let mut p = random_point(&mut rng, order);
            let spread: Rational = p.phis.iter().map(|x| x.abs()).sum();
            p.eta = spread * int(2) + ratio(1, 3);
            let f = engine.eval_f(key(order, 1), &p).unwrap().into_finite().unwrap();
            assert!(f.is_positive(), "f_{{{order},1}} at {p} = {f}");
        }
    }
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-30i64..=30, 1i64..=6).prop_map(|(n, d)| ratio(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_ignore_phase_order(
        eta in (1i64..=40, 1i64..=5).prop_map(|(n, d)| ratio(n, d)),
        mut phis in prop::collection::vec(small_rational(), 1..=4),
        harmonic_seed in 0usize..8,
        rot in 0usize..4,
    ) {
        let engine = CoeffEngine::new();
        let order = phis.len();
        let k = key(order, harmonic_seed % (order + 1));
        let a = engine.eval_G(k, &EvalPoint::new(eta.clone(), phis.clone())).unwrap();
        phis.rotate_left(rot % order);
        phis.reverse();
        let fresh = CoeffEngine::new();
        let b = fresh.eval_G(k, &EvalPoint::new(eta, phis)).unwrap();
        prop_assert_eq!(a.finite(), b.finite());
    }

    #[test]
    fn zeroth_harmonic_g_vanishes(
        eta in (1i64..=40, 1i64..=5).prop_map(|(n, d)| ratio(n, d)),
        phis in prop::collection::vec(small_rational(), 1..=4),
    ) {
        let engine = CoeffEngine::new();
        let v = engine.eval_G(key(phis.len(), 0), &EvalPoint::new(eta, phis)).unwrap();
        prop_assert_eq!(v, CoeffValue::Finite(Rational::zero()));
    }
}
