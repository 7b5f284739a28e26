mod common;

use common::*;
use floquet::models::{OscillatorParams, SpringCoupling};
use floquet::expansion::fold_value;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fourier_products_match_pointwise_products(
        (a, b) in (1usize..=4, 0.5..3.0f64).prop_flat_map(|(n, w)| {
            let t = 2.0 * PI / w;
            (fourier_matrix(n, t, 3), fourier_matrix(n, t, 3))
        }),
        t in 0.0..20.0f64,
    ) {
        prop_assert!(fourier_time_domain(&a, &b, t) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn recursion_holds_and_transformations_start_at_identity(f in generic_family()) {
        let (res, origin) = recursion_and_origin(&f);
        prop_assert!(res < 1e-10, "residual {res:e}");
        prop_assert!(origin < 1e-10, "P_j(0) {origin:e}");
    }

    #[test]
    fn oscillator_recursion(o in oscillator()) {
        let (res, origin) = recursion_and_origin(&oscillator_family(&o));
        prop_assert!(res < 1e-10 && origin < 1e-10, "{res:e} {origin:e}");
    }

    #[test]
    fn closed_forms_agree_with_recursion(f in generic_family()) {
        let e = closed_vs_inductive(&f);
        prop_assert!(e < 1e-12, "{e:e}");
    }

    #[test]
    fn oscillator_closed_forms(o in oscillator()) {
        let e = closed_vs_inductive(&oscillator_family(&o));
        prop_assert!(e < 1e-12, "{e:e}");
    }

    #[test]
    fn liouville_determinant(f in generic_family(), eps in 0.0..0.2f64) {
        let e = liouville(&f, eps);
        prop_assert!(e < 1e-8, "{e:e}");
    }

    #[test]
    fn oscillator_liouville(o in oscillator(), eps in 0.0..0.2f64) {
        let e = liouville(&oscillator_family(&o), eps);
        prop_assert!(e < 1e-8, "{e:e}");
    }

    #[test]
    fn representative_choice_does_not_change_asymptotics(f in generic_family(), shifts in prop::collection::vec(-2i64..=2, 4)) {
        let e = choice_independence(&f, &shifts);
        prop_assert!(e < 1e-9, "{e:e}");
    }

    #[test]
    fn oscillator_choice_independence(o in oscillator(), shifts in prop::collection::vec(-2i64..=2, 2)) {
        let e = choice_independence(&oscillator_family(&o), &shifts);
        prop_assert!(e < 1e-9, "{e:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn physical_oscillator_gives_conjugate_pairs(p in oscillator(), eps in 0.0..0.1f64) {
        let e = oscillator_pairing(&(p.0, SpringCoupling::Physical), eps);
        prop_assert!(e < 1e-8, "{e:e}");
    }

    #[test]
    fn real_dimer_modulations_give_conjugate_pairs(p in dimer(), eps in 0.0..0.1f64) {
        let e = dimer_pairing(&p, eps);
        prop_assert!(e < 1e-8, "{e:e}");
    }
}

#[test]
fn fold_lands_in_the_zone_and_preserves_the_class() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let period = rng.gen_range(0.5..20.0);
        let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-50.0..50.0));
        let (f, n) = fold_value(z, period, 0.0);
        let w = 2.0 * PI / period;
        assert!(f.im >= -w / 2.0 && f.im < w / 2.0, "{z} -> {f}");
        assert!((f + c(0.0, w * n as f64) - z).norm() < 1e-12);
        assert_eq!(f.re, z.re);
        // The oracle folds multipliers through the same helper.
        let back = floquet::oracle::exponent_of_multiplier((z * period).exp(), period);
        assert!(floquet::oracle::cylinder_distance(back, f, period) < 1e-9);
        assert!((back.im - f.im).abs() < 1e-9 || (back.im - f.im).abs() > w - 1e-9);
    }
}

/// The displayed spring block is not similar to a real system, so its exponents are not
/// closed under conjugation; the physical block is.
#[test]
fn displayed_spring_block_breaks_conjugate_pairing() {
    let p = OscillatorParams::with_omega(0.83, 1.35, 1, 1, 0.4, 0.9);
    let displayed = oscillator_pairing(&(p.clone(), SpringCoupling::Displayed), 0.05);
    let physical = oscillator_pairing(&(p, SpringCoupling::Physical), 0.05);
    assert!(displayed > 1e-4, "{displayed:e}");
    assert!(physical < 1e-12, "{physical:e}");
}
