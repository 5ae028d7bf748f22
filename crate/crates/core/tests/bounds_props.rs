mod common;

use common::{oracle_for, random_tuple, relative_gap};
use ftbarrier::bounds::{
    evaluate_bound, lower_bound_safety, recursion_oracle, reversed_sign_bounds, upper_bound_safety_t1,
    validate_certificate_params, CertificateKind, Direction,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_forms_match_recursion_oracle() {
    for (i, kind) in CertificateKind::ALL.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        for _ in 0..1000 {
            let t = random_tuple(&mut rng, kind);
            let case = validate_certificate_params(kind, t.alpha, t.beta, t.m).unwrap().case;
            let r = evaluate_bound(kind, t.v0, t.alpha, t.beta, t.m, t.n).unwrap();
            let o = oracle_for(&r, case);
            assert!(relative_gap(r.raw, o) <= 1e-9, "{t:?}: closed {} vs oracle {o}", r.raw);
            assert_eq!(r.clamped, r.raw.clamp(0.0, 1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reversed_sign_never_positive(
        v0 in -2.0f64..=0.0,
        alpha in prop_oneof![Just(1.0), 0.3f64..1.0],
        beta in -1.0f64..1.0,
        n in 0u32..80,
    ) {
        let r = reversed_sign_bounds(v0, alpha, beta, n);
        prop_assert!(r.raw <= 1e-12, "raw {} for {:?}", r.raw, (v0, alpha, beta, n));
        prop_assert_eq!(r.clamped, 0.0);
    }

    #[test]
    fn linear_upper_bound_nondecreasing_in_horizon(v0 in 0.0f64..1.0, beta in 0.0f64..=1.0, n in 0u32..100) {
        let a = upper_bound_safety_t1(v0, 1.0, beta, n).unwrap().raw;
        let b = upper_bound_safety_t1(v0, 1.0, beta, n + 1).unwrap().raw;
        prop_assert!(b >= a);
    }

    #[test]
    fn linear_lower_bound_nondecreasing_in_horizon(m in 0.0f64..3.0, frac in 0.0f64..=1.0, beta in 1e-3f64..1.0, n in 0u32..100) {
        let v0 = m * frac;
        let a = lower_bound_safety(v0, m, 1.0, beta, n).unwrap().raw;
        let b = lower_bound_safety(v0, m, 1.0, beta, n + 1).unwrap().raw;
        prop_assert!(b >= a);
    }

    #[test]
    fn zero_horizon_upper_bounds_reduce_to_v0(
        v0 in 0.0f64..1.0,
        alpha in prop_oneof![Just(1.0), 0.5f64..1.0],
        beta in 0.0f64..=1.0,
    ) {
        for kind in [CertificateKind::SafetyUpperT1, CertificateKind::RaUpperT3] {
            let r = evaluate_bound(kind, v0, alpha, beta, None, 0).unwrap();
            prop_assert!((r.raw - v0).abs() <= 1e-12);
        }
        let r = evaluate_bound(CertificateKind::SafetyUpperKushner, v0, 1.0 / alpha, beta, None, 0).unwrap();
        prop_assert!((r.raw - v0).abs() <= 1e-12);
    }

    #[test]
    fn zero_horizon_lower_bound_formula(alpha in 1.01f64..1.5, beta in 0.0f64..1.0, m in 0.1f64..3.0, frac in 0.0f64..=1.0) {
        let v0 = m * frac;
        let expected = ((alpha * v0 - m) * (alpha - 1.0) + beta * (alpha - 1.0))
            / ((alpha + beta - 1.0) * (alpha - 1.0));
        for kind in [CertificateKind::SafetyLower, CertificateKind::RaLower] {
            let r = evaluate_bound(kind, v0, alpha, beta, Some(m), 0).unwrap();
            prop_assert!((r.raw - expected).abs() <= 1e-9 * expected.abs().max(1.0));
            let o = recursion_oracle(v0, Some(m), alpha, beta, 0, Direction::Lower);
            prop_assert!((r.raw - o).abs() <= 1e-9 * o.abs().max(1.0));
        }
    }
}
