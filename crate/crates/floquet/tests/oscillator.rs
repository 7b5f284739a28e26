mod common;

use std::f64::consts::PI;

use common::*;
use floquet::expansion::{expand_inductive, fold_diagonal, ExpandOptions};
use floquet::fourier::{CMat, C64};
use floquet::models::{build_oscillator, build_oscillator_with, classify_oscillator_ep, OscillatorParams, SpringCoupling};
use floquet::oracle::{self, compare_exponents, exponents_from_monodromy, integrate_monodromy};
use floquet::spectral::{detect_first_order_ep, exponents_at};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `x'' + (c + ε cos(aΩt)) x' + (k + ε cos(bΩt + φ)) x = 0` as a first-order system.
fn physical(p: &OscillatorParams, eps: f64) -> impl Fn(f64) -> CMat + '_ {
    let w = p.omega();
    move |t| {
        let zeta = (p.a as f64 * w * t).cos();
        let kappa = (p.b as f64 * w * t + p.phi).cos();
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-(p.k + eps * kappa), 0.0), c(-(p.c + eps * zeta), 0.0)])
    }
}

fn physical_exponents(p: &OscillatorParams, eps: f64) -> oracle::OracleExponents {
    let m = integrate_monodromy(physical(p, eps), p.period, oracle::DEFAULT_STEPS).unwrap();
    exponents_from_monodromy(&m, p.period).unwrap()
}

fn family_exponents(p: &OscillatorParams, cp: SpringCoupling, eps: f64) -> Vec<C64> {
    let fam = build_oscillator_with(p, cp).unwrap();
    exponents_from_monodromy(&oracle::integrate_family(&fam, eps, oracle::DEFAULT_STEPS).unwrap(), p.period)
        .unwrap()
        .values
}

#[test]
fn physical_coupling_is_a_similarity_of_the_ode() {
    let degenerate = 2.0 - (4.0 - 0.75f64 * 0.75).sqrt();
    for (cc, k, a, b, phi, omega) in
        [(0.3, 0.3, 1, 1, 0.0, 0.75), (degenerate, degenerate, 1, 1, 0.0, 0.75), (0.7, 1.3, 2, 3, 0.4, 0.9), (1.0, 1.0, 1, 0, 1.1, 3f64.sqrt())]
    {
        let p = OscillatorParams::with_omega(cc, k, a, b, phi, omega);
        for eps in [0.02, 0.1] {
            let truth = physical_exponents(&p, eps);
            let got = family_exponents(&p, SpringCoupling::Physical, eps);
            let m = compare_exponents(&got, &truth, p.period).unwrap();
            assert!(m.max_residual < 1e-9, "{cc} {k}: {:e}", m.max_residual);
        }
    }
}

#[test]
fn displayed_coupling_departs_from_the_ode_at_first_order() {
    let cc = 2.0 - (4.0 - 0.75f64 * 0.75).sqrt();
    let p = OscillatorParams::with_omega(cc, cc, 1, 1, 0.0, 0.75);
    let mut devs = Vec::new();
    for eps in [0.02, 0.01] {
        let truth = physical_exponents(&p, eps);
        let got = family_exponents(&p, SpringCoupling::Displayed, eps);
        devs.push(compare_exponents(&got, &truth, p.period).unwrap().max_residual);
    }
    // Linear in eps: halving eps halves the deviation, and it is a sizable fraction of eps.
    assert!(devs[0] > 0.1 * 0.02, "{devs:?}");
    let ratio = devs[0] / devs[1];
    assert!((1.6..2.5).contains(&ratio), "{devs:?}");
}

#[test]
fn first_order_expansion_of_the_physical_coupling_tracks_the_ode() {
    let cc = 2.0 - (4.0 - 0.75f64 * 0.75).sqrt();
    let p = OscillatorParams::with_omega(cc, cc, 1, 1, 0.0, 0.75);
    let fam = build_oscillator_with(&p, SpringCoupling::Physical).unwrap();
    let ex = expand_inductive(&fam, 1, ExpandOptions::default()).unwrap();
    let mut res = Vec::new();
    for eps in [0.04, 0.02] {
        let asym = exponents_at(&ex, eps).unwrap();
        res.push(compare_exponents(&asym, &physical_exponents(&p, eps), p.period).unwrap().max_residual);
    }
    assert!(res[0] < 10.0 * 0.04 * 0.04, "{res:?}");
    assert!(res[0] / res[1] > 3.0, "{res:?}");
}

#[test]
fn a1_matches_the_cosine_formulas() {
    let p = OscillatorParams::with_omega(0.4, 0.9, 2, 3, 0.0, 0.8);
    let fam = build_oscillator(&p).unwrap();
    let a1 = fam.perturbation(1).unwrap();
    let z = p.damping_block();
    let k = p.spring_block(SpringCoupling::Displayed);
    let w = p.omega();
    for i in 0..16 {
        let t = i as f64 * p.period / 16.0 + 0.013;
        let want = &z * c(2.0 * (2.0 * w * t).cos(), 0.0) + &k * c(2.0 * (3.0 * w * t).cos(), 0.0);
        assert!((a1.evaluate(t) - want).norm() < 1e-12);
    }
}

#[test]
fn zero_amplitude_gives_the_constant_exponents() {
    let p = OscillatorParams::with_omega(0.3, 0.3, 1, 1, 0.0, 0.75);
    let fam = build_oscillator(&p).unwrap();
    let silent = fam.with_perturbations(vec![fam.perturbation(1).unwrap().scale(c(0.0, 0.0))]).unwrap();
    let ex = expand_inductive(&silent, 2, PAD).unwrap();
    assert_eq!(ex.exponent_matrix(0.3), ex.f[0]);
}

#[test]
fn classifier_rejects_off_lemma_parameters() {
    let om = 3f64.sqrt();
    for phi in [0.0, 1.0, PI / 3.0, 2.5] {
        let k2 = OscillatorParams::with_omega(1.0, 2.0, 1, 1, phi, om);
        assert!(!classify_oscillator_ep(&k2).verdict);
        let mixed = OscillatorParams::with_omega(1.0, 1.0, 2, 3, phi, om);
        assert!(!classify_oscillator_ep(&mixed).verdict);
    }
}

/// Classifier verdict against the detector on the built family, over draws biased towards the
/// lemma's parameter set.
#[test]
fn classifier_and_detector_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut positives = 0;
    for draw in 0..240 {
        let k: f64 = if rng.gen_bool(0.6) { 1.0 } else { rng.gen_range(0.3..2.5) };
        let cc = rng.gen_range(0.05..1.9f64).min(2.0 * k.sqrt() - 0.05);
        let (a, b) = match draw % 4 {
            0 => (2, 3),
            1 => (1, 2),
            _ => (1, 1),
        };
        let n = [1.0, 1.0, 2.0][rng.gen_range(0..3)];
        let omega = (4.0 * k - cc * cc).sqrt() / n;
        let mut p = OscillatorParams::with_omega(cc, k, a, b, rng.gen_range(-PI..PI), omega);
        if rng.gen_bool(0.6) {
            p.phi = classify_oscillator_ep(&p).admissible_phases[rng.gen_range(0..2)];
        }
        let fam = build_oscillator(&p).unwrap();
        let folding = fold_diagonal(fam.a0(), fam.period(), fam.default_fold_tol());
        let detected = detect_first_order_ep(&fam, &folding).unwrap().iter().any(|r| r.verdict);
        let classified = classify_oscillator_ep(&p);
        assert_eq!(detected, classified.verdict, "{p:?}: {}", classified.reason);
        positives += usize::from(detected);
    }
    assert!(positives > 20, "{positives}");
}
