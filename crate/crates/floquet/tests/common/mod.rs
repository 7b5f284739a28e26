//! Generators and per-instance checks shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use floquet::expansion::{
    expand_inductive, expand_with_folding, first_order_closed, recursion_residual, second_order_entries,
    CoefficientFamily, ExpandOptions, FoldingResult, SecondOrderForm,
};
use floquet::fourier::{max_abs, CMat, FourierMatrix, ScalarFourierSeries, C64};
use floquet::models::{
    build_dimer, build_hill_system, build_oscillator_with, CapacitanceMatrix, Channels, DimerParams, OscillatorParams,
    SpringCoupling,
};
use floquet::oracle::{self, cylinder_distance};
use floquet::spectral::{all_asymptotics, conjugate_pairing_residual};
use proptest::prelude::*;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub const PAD: ExpandOptions = ExpandOptions { pad: true };

/// Minimum over active `(k, l, m)` of `|iΩm + a0_l − a0_k|` away from the class-internal zeros.
pub fn min_denominator(family: &CoefficientFamily) -> f64 {
    let w = family.omega();
    let a0 = family.a0();
    let folding = floquet::expansion::fold_diagonal(a0, family.period(), family.default_fold_tol());
    let n = family.dim();
    let mut best = f64::INFINITY;
    let bw: i64 = family.perturbations().iter().map(|p| p.bandwidth()).sum::<i64>() + 2;
    for k in 0..n {
        for l in 0..n {
            for m in -bw..=bw {
                if folding.same_class(k, l) && m == folding.folding_numbers[k] - folding.folding_numbers[l] {
                    continue;
                }
                best = best.min((c(0.0, w * m as f64) + a0[l] - a0[k]).norm());
            }
        }
    }
    best
}

fn cmat(n: usize, v: &[(f64, f64)]) -> CMat {
    CMat::from_iterator(n, n, v.iter().map(|&(r, i)| c(r, i)))
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
}

pub fn fourier_matrix(n: usize, period: f64, bw: i64) -> impl Strategy<Value = FourierMatrix> {
    prop::collection::vec((-bw..=bw, entries(n)), 1..=3).prop_map(move |cs| {
        FourierMatrix::from_coeffs(n, period, cs.into_iter().map(|(m, v)| (m, cmat(n, &v)))).unwrap()
    })
}

/// Random diagonal `A_0` with `A_1`, `A_2` of bandwidth 2; about half the draws fold two
/// entries onto one constant-order exponent.
pub fn generic_family() -> impl Strategy<Value = CoefficientFamily> {
    (2usize..=4, 0.6..2.5f64, any::<bool>())
        .prop_flat_map(|(n, w, degenerate)| {
            let period = 2.0 * PI / w;
            (
                Just((n, w, degenerate)),
                prop::collection::vec((-0.6..0.1f64, -1.5..1.5f64), n),
                fourier_matrix(n, period, 2),
                fourier_matrix(n, period, 2),
                1i64..=2,
            )
        })
        .prop_map(|((n, w, degenerate), a0, a1, a2, shift)| {
            let mut a0: Vec<C64> = a0.into_iter().map(|(r, i)| c(r, i)).collect();
            if degenerate {
                a0[n - 1] = a0[0] + c(0.0, w * shift as f64);
            }
            CoefficientFamily::from_diagonal(a0, vec![a1, a2], 2.0 * PI / w).unwrap()
        })
        .prop_filter("well separated denominators", |f| min_denominator(f) > 0.05)
}

/// Oscillator draws, generic or folded (`Ω = |Im α| / n`), with either spring coupling.
pub fn oscillator() -> impl Strategy<Value = (OscillatorParams, SpringCoupling)> {
    (0.05..1.2f64, 0.4..2.0f64, 1i64..=3, 0i64..=3, 0.0..(2.0 * PI), 0usize..4, any::<bool>())
        .prop_filter("coprime harmonics", |(_, _, a, b, ..)| gcd(*a, *b) == 1)
        .prop_map(|(cc, k, a, b, phi, n, physical)| {
            let alpha = (cc * cc - 4.0 * k).abs().sqrt();
            let omega = if n == 0 { 0.55 + 0.37 * k + 0.11 * cc } else { alpha / n as f64 };
            let coupling = if physical { SpringCoupling::Physical } else { SpringCoupling::Displayed };
            (OscillatorParams::with_omega(cc, k, a, b, phi, omega), coupling)
        })
        .prop_filter("underdamped", |(p, _)| p.c * p.c < 4.0 * p.k - 0.05)
        .prop_filter("well separated denominators", |(p, cp)| {
            build_oscillator_with(p, *cp).map(|f| min_denominator(&f) > 0.05).unwrap_or(false)
        })
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Dimer with real-valued single-harmonic modulations, `C12 != 0`.
pub fn dimer() -> impl Strategy<Value = DimerParams> {
    (
        (1.5..3.0f64, 0.5..1.4f64, 0.1..0.5f64, 0.0..(2.0 * PI)),
        (0.5..1.5f64, 0.5..1.5f64, 0.4..1.6f64),
        prop::collection::vec((1i64..=2, -1.0..1.0f64, 0.0..(2.0 * PI)), 4),
    )
        .prop_map(|((c11, c22, r, th), (delta, vol, w), mods)| {
            let cap = CapacitanceMatrix::new(c11, c22, C64::from_polar(r, th));
            let period = 2.0 * PI / w;
            let mut p = DimerParams::unmodulated(cap, delta, vol, period);
            let s: Vec<ScalarFourierSeries> =
                mods.iter().map(|&(m, amp, ph)| ScalarFourierSeries::cosine(m, amp, ph, period)).collect();
            p.eta1 = s[0].clone();
            p.eta2 = s[1].clone();
            p.gamma1 = s[2].clone();
            p.gamma2 = s[3].clone();
            p
        })
        .prop_filter("well separated denominators", |p| {
            build_dimer(p, Channels::Both).map(|f| min_denominator(&f) > 0.05).unwrap_or(false)
        })
}

// ---------------------------------------------------------------------------------------------
// Checks. Each returns the measured error.

/// Product and sum evaluated in the time domain against the coefficient-domain result.
pub fn fourier_time_domain(a: &FourierMatrix, b: &FourierMatrix, t: f64) -> f64 {
    let (ta, tb) = (a.evaluate(t), b.evaluate(t));
    let prod = (a.multiply(b).unwrap().evaluate(t) - &ta * &tb).norm();
    let sum = (a.add(b).unwrap().evaluate(t) - (&ta + &tb)).norm();
    prod.max(sum)
}

/// Largest recursion residual over orders 0..=2 and largest `|P_j(0)|` over j = 1, 2.
pub fn recursion_and_origin(family: &CoefficientFamily) -> (f64, f64) {
    let ex = expand_inductive(family, 2, PAD).unwrap();
    let res = (0..=2).map(|j| recursion_residual(family, &ex, j).unwrap()).fold(0.0, f64::max);
    let origin = (1..=2).map(|j| max_abs(&ex.p[j].evaluate(0.0))).fold(0.0, f64::max);
    (res, origin)
}

/// Closed first-order form and the closed second-order entries against the recursion.
pub fn closed_vs_inductive(family: &CoefficientFamily) -> f64 {
    let ex = expand_inductive(family, 2, PAD).unwrap();
    let (f1, p1) = first_order_closed(family, &ex.folding).unwrap();
    let mut err = max_abs(&(f1 - &ex.f[1]));
    let dp = p1.sub(&ex.p[1]).unwrap();
    err = err.max(dp.iter().fold(0.0, |a, (_, m)| a.max(max_abs(m))));
    let pairs: Vec<(usize, usize)> = ex
        .folding
        .classes
        .iter()
        .flat_map(|cl| cl.iter().flat_map(move |&k| cl.iter().map(move |&l| (k, l))))
        .collect();
    for form in [SecondOrderForm::WithF1, SecondOrderForm::A1Only] {
        for ((k, l), v) in second_order_entries(family, &ex, &pairs, form, PAD).unwrap() {
            err = err.max((v - ex.f[2][(k, l)]).norm());
        }
    }
    err
}

/// `|det X(T) − exp(∫ tr A)|` relative to the latter.
pub fn liouville(family: &CoefficientFamily, eps: f64) -> f64 {
    let m = oracle::integrate_family(family, eps, oracle::DEFAULT_STEPS).unwrap();
    let want = family.trace_integral(eps).exp();
    (m.x_at_t.determinant() - want).norm() / want.norm()
}

/// Conjugate pairing of the physical dimer (Hill) oracle, the built dimer family's oracle and
/// the built family's truncated expansion.
pub fn dimer_pairing(p: &DimerParams, eps: f64) -> f64 {
    let hill = build_hill_system(p, eps).unwrap();
    let m = oracle::integrate_monodromy(|t| hill.first_order(t), p.period, oracle::DEFAULT_STEPS).unwrap();
    let hill_ex = oracle::exponents_from_monodromy(&m, p.period).unwrap().values;
    let fam = build_dimer(p, Channels::Rho).unwrap();
    let built = oracle::exponents_from_monodromy(&oracle::integrate_family(&fam, eps, oracle::DEFAULT_STEPS).unwrap(), p.period)
        .unwrap()
        .values;
    let ex = expand_inductive(&fam, 2, PAD).unwrap();
    let asym = floquet::spectral::exponents_at(&ex, eps).unwrap();
    [hill_ex, built, asym].iter().map(|v| conjugate_pairing_residual(v, p.period)).fold(0.0, f64::max)
}

/// Coefficients of `Π (x − r)`; symmetric in the roots, so stable where the roots are not.
fn monic_poly(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![c(1.0, 0.0)];
    for &r in roots {
        let mut q = vec![c(0.0, 0.0); p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            q[k + 1] += a;
            q[k] -= a * r;
        }
        p = q;
    }
    p
}

/// Random per-class shifts of the folding numbers. Per class, compares `f0` on the cylinder
/// and the characteristic polynomials of the `λ1` and `λ2` sets: near an exceptional point the
/// individual square-root branches are ill-conditioned, their symmetric functions are not.
pub fn choice_independence(family: &CoefficientFamily, shifts: &[i64]) -> f64 {
    let base = expand_inductive(family, 2, PAD).unwrap();
    let mut numbers = base.folding.folding_numbers.clone();
    for (ci, class) in base.folding.classes.iter().enumerate() {
        for &i in class {
            numbers[i] += shifts[ci % shifts.len()];
        }
    }
    let alt = FoldingResult::with_numbers(family.a0(), family.period(), numbers, base.folding.tol).unwrap();
    let other = expand_with_folding(family, &alt, 2, PAD).unwrap();
    let (a, b) = (all_asymptotics(&base).unwrap(), all_asymptotics(&other).unwrap());
    let t = family.period();
    let mut err: f64 = 0.0;
    for class in &base.folding.classes {
        let pick = |v: &[floquet::spectral::ExponentAsymptotics]| {
            let xs: Vec<_> = v.iter().filter(|x| class.contains(&x.index)).collect();
            let f0 = xs[0].f0;
            let l1: Vec<C64> = xs.iter().map(|x| x.lambda1).collect();
            let l2: Vec<C64> = xs.iter().filter_map(|x| x.lambda2).collect();
            (f0, monic_poly(&l1), monic_poly(&l2))
        };
        let (pa, pb) = (pick(&a), pick(&b));
        err = err.max(cylinder_distance(pa.0, pb.0, t));
        for (u, v) in [(&pa.1, &pb.1), (&pa.2, &pb.2)] {
            if u.len() != v.len() {
                return f64::INFINITY;
            }
            err = u.iter().zip(v.iter()).fold(err, |e, (x, y)| e.max((x - y).norm()));
        }
    }
    err
}

pub fn oscillator_family((p, cp): &(OscillatorParams, SpringCoupling)) -> CoefficientFamily {
    build_oscillator_with(p, *cp).unwrap()
}

/// Conjugate pairing of the oscillator family's oracle and truncated expansion.
pub fn oscillator_pairing(o: &(OscillatorParams, SpringCoupling), eps: f64) -> f64 {
    let fam = oscillator_family(o);
    let t = fam.period();
    let orc = oracle::exponents_from_monodromy(&oracle::integrate_family(&fam, eps, oracle::DEFAULT_STEPS).unwrap(), t)
        .unwrap()
        .values;
    let ex = expand_inductive(&fam, 2, PAD).unwrap();
    let asym = floquet::spectral::exponents_at(&ex, eps).unwrap();
    conjugate_pairing_residual(&orc, t).max(conjugate_pairing_residual(&asym, t))
}
