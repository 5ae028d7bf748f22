use std::collections::BTreeMap;

use ftbarrier::polynomial::{
    interval_enclosure, parse_polynomial, var_names, BernsteinForm, HyperBox, Polynomial,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 3] = ["x", "y", "z"];

fn arb_poly(nvars: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    let vars = var_names(&NAMES[..nvars]);
    prop::collection::vec(
        (prop::collection::vec(0..=max_deg, nvars), -3.0f64..3.0),
        0..8,
    )
    .prop_map(move |terms| {
        let clipped = terms.into_iter().filter_map(|(e, c)| {
            // keep total degree bounded
            (e.iter().sum::<u32>() <= max_deg).then_some((e, c))
        });
        Polynomial::from_terms(&vars, clipped)
    })
}

fn arb_triple() -> impl Strategy<Value = (Polynomial, Polynomial, Polynomial)> {
    (1usize..=3).prop_flat_map(|n| (arb_poly(n, 4), arb_poly(n, 4), arb_poly(n, 4)))
}

fn arb_box(nvars: usize) -> impl Strategy<Value = HyperBox> {
    prop::collection::vec((-2.0f64..2.0, 0.01f64..2.0), nvars)
        .prop_map(|v| HyperBox::new(v.into_iter().map(|(a, w)| [a, a + w]).collect()).unwrap())
}

fn arb_poly_and_box() -> impl Strategy<Value = (Polynomial, HyperBox)> {
    (1usize..=3).prop_flat_map(|n| (arb_poly(n, 4), arb_box(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn distributivity((p, q, r) in arb_triple()) {
        let lhs = &(&p + &q) * &r;
        let rhs = &(&p * &r) + &(&q * &r);
        prop_assert!(lhs.max_coeff_diff(&rhs) <= 1e-9);
    }

    #[test]
    fn commutativity_and_associativity((p, q, r) in arb_triple()) {
        prop_assert!((&p + &q).max_coeff_diff(&(&q + &p)) <= 1e-12);
        prop_assert!((&p * &q).max_coeff_diff(&(&q * &p)) <= 1e-12);
        let a = &(&p * &q) * &r;
        let b = &p * &(&q * &r);
        prop_assert!(a.max_coeff_diff(&b) <= 1e-9);
    }

    #[test]
    fn print_parse_fixed_point(p in (1usize..=3).prop_flat_map(|n| arb_poly(n, 5))) {
        let text = p.to_string();
        let again = parse_polynomial(&text, p.vars()).unwrap();
        prop_assert_eq!(&again, &p);
        prop_assert_eq!(again.to_string(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bernstein_range_encloses_samples((p, cell) in arb_poly_and_box(), seed in any::<u64>()) {
        let form = BernsteinForm::natural(&p, &cell).unwrap();
        let (lo, hi) = (form.min(), form.max());
        let enc = interval_enclosure(&p, &cell);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let x = cell.sample(&mut rng);
            let v = p.eval(&x);
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
            prop_assert!(v >= enc.lo - 1e-9 && v <= enc.hi + 1e-9);
        }
    }

    #[test]
    fn bernstein_evaluation_agrees((p, cell) in arb_poly_and_box(), extra in 0u32..4, seed in any::<u64>()) {
        let degree: Vec<u32> = p.degrees().iter().map(|d| d + extra).collect();
        let form = BernsteinForm::new(&p, &cell, &degree).unwrap();
        let nat = BernsteinForm::natural(&p, &cell).unwrap();
        // elevation only tightens the coefficient range
        prop_assert!(form.min() >= nat.min() - 1e-9);
        prop_assert!(form.max() <= nat.max() + 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = cell.sample(&mut rng);
            let exact = p.eval(&x);
            let b = form.evaluate(&x);
            prop_assert!((exact - b).abs() <= 1e-9 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn composition_commutes_with_evaluation(
        p in arb_poly(2, 3),
        s0 in arb_poly(3, 2),
        s1 in arb_poly(3, 2),
        seed in any::<u64>(),
    ) {
        let mut subs = BTreeMap::new();
        subs.insert("x".to_string(), s0.clone());
        subs.insert("y".to_string(), s1.clone());
        let c = p.compose(&subs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
            let direct = p.eval(&[s0.eval(&a), s1.eval(&a)]);
            let composed = c.eval(&a);
            prop_assert!((direct - composed).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}

#[test]
fn contraction_composition_at_random_points() {
    let vars = var_names(&["x", "t"]);
    let v = parse_polynomial("x^2", &var_names(&["x"])).unwrap();
    let mut subs = BTreeMap::new();
    subs.insert("x".to_string(), parse_polynomial("(-0.5 + t)*x", &vars).unwrap());
    let c = v.compose(&subs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let x: f64 = rng.random_range(-2.0..2.0);
        let t: f64 = rng.random_range(-1.0..1.0);
        let expected = (0.25 - t + t * t) * x * x;
        assert!((c.eval(&[x, t]) - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }
}
