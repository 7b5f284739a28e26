//! Folding of the constant-order system and the order-by-order Floquet-Lyapunov recursion.
//!
//! For `x' = (A_0 + εA_1(t) + ε²A_2(t) + …)x` with diagonal `A_0`, the decomposition
//! `X(t) = P(t) exp(F t)` is expanded as `F = Σ εʲ F_j`, `P = Σ εʲ P_j` with `P_j(0) = 0`
//! for `j ≥ 1`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{max_abs, same_period, FourierMatrix, FourierMatrixJson, C64, CMat};

const FOLD_RTOL: f64 = 1e-9;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

#[derive(Clone, Debug)]
pub struct CoefficientFamily {
    period: f64,
    a0: Vec<C64>,
    perturbations: Vec<FourierMatrix>,
}

impl CoefficientFamily {
    /// `a0` must be exactly diagonal; `perturbations[n-1]` is `A_n`.
    pub fn new(a0: &CMat, perturbations: Vec<FourierMatrix>, period: f64) -> Result<Self> {
        let n = a0.nrows();
        if a0.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a0.ncols() });
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && a0[(i, j)] != zero() {
                    return Err(Error::NotDiagonal);
                }
            }
        }
        Self::from_diagonal(a0.diagonal().iter().copied().collect(), perturbations, period)
    }

    pub fn from_diagonal(a0: Vec<C64>, perturbations: Vec<FourierMatrix>, period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Invalid(format!("period must be positive, got {period}")));
        }
        if a0.is_empty() {
            return Err(Error::Invalid("empty system".into()));
        }
        if perturbations.is_empty() {
            return Err(Error::Invalid("at least one perturbation order is required".into()));
        }
        for p in &perturbations {
            if p.dim() != a0.len() {
                return Err(Error::DimensionMismatch { expected: a0.len(), found: p.dim() });
            }
            if !same_period(p.period(), period) {
                return Err(Error::PeriodMismatch { a: period, b: p.period() });
            }
        }
        Ok(Self { period, a0, perturbations })
    }

    pub fn dim(&self) -> usize {
        self.a0.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn a0(&self) -> &[C64] {
        &self.a0
    }

    pub fn a0_matrix(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(self.a0.clone()))
    }

    /// Number of perturbation orders supplied.
    pub fn order(&self) -> usize {
        self.perturbations.len()
    }

    /// `A_n` for `n ≥ 1`.
    pub fn perturbation(&self, n: usize) -> Option<&FourierMatrix> {
        if n == 0 {
            return None;
        }
        self.perturbations.get(n - 1)
    }

    pub fn perturbations(&self) -> &[FourierMatrix] {
        &self.perturbations
    }

    pub fn with_perturbations(&self, perturbations: Vec<FourierMatrix>) -> Result<Self> {
        Self::from_diagonal(self.a0.clone(), perturbations, self.period)
    }

    /// `A_ε(t)` truncated at the supplied orders.
    pub fn evaluate(&self, eps: f64, t: f64) -> CMat {
        let mut out = self.a0_matrix();
        let mut w = 1.0;
        for p in &self.perturbations {
            w *= eps;
            out += p.evaluate(t) * C64::new(w, 0.0);
        }
        out
    }

    /// `∫₀ᵀ tr A_ε(t) dt`, exact from the constant Fourier terms.
    pub fn trace_integral(&self, eps: f64) -> C64 {
        let mut tr: C64 = self.a0.iter().sum();
        let mut w = 1.0;
        for p in &self.perturbations {
            w *= eps;
            if let Some(c) = p.coeff(0) {
                tr += c.trace() * w;
            }
        }
        tr * self.period
    }

    pub fn default_fold_tol(&self) -> f64 {
        default_fold_tol(&self.a0)
    }
}

pub fn default_fold_tol(a0: &[C64]) -> f64 {
    let norm = a0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    FOLD_RTOL * norm.max(1.0)
}

/// Folds `z` so that `Im` lies in `[-π/T, π/T)` and returns the folded value with its
/// folding number `n`, `z = folded + n·2πi/T`. Values within `tol` of `+π/T` wrap to `-π/T`.
pub fn fold_value(z: C64, period: f64, tol: f64) -> (C64, i64) {
    let w = 2.0 * PI / period;
    let half = w / 2.0;
    let mut n = ((z.im + half) / w).floor() as i64;
    let mut r = z.im - n as f64 * w;
    if r >= half - tol {
        r -= w;
        n += 1;
    }
    if r < -half - tol {
        r += w;
        n -= 1;
    }
    (C64::new(z.re, r), n)
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldingResult {
    pub f0: Vec<C64>,
    pub folding_numbers: Vec<i64>,
    pub classes: Vec<Vec<usize>>,
    pub tol: f64,
}

impl FoldingResult {
    /// Uses explicitly chosen folding numbers, `f0 = a0 - n·2πi/T`, without range reduction.
    pub fn with_numbers(a0: &[C64], period: f64, numbers: Vec<i64>, tol: f64) -> Result<Self> {
        if numbers.len() != a0.len() {
            return Err(Error::DimensionMismatch { expected: a0.len(), found: numbers.len() });
        }
        let w = 2.0 * PI / period;
        let f0: Vec<C64> = a0.iter().zip(&numbers).map(|(z, &n)| z - C64::new(0.0, w * n as f64)).collect();
        let classes = partition(&f0, tol);
        Ok(Self { f0, folding_numbers: numbers, classes, tol })
    }

    pub fn dim(&self) -> usize {
        self.f0.len()
    }

    pub fn f0_matrix(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(self.f0.clone()))
    }

    pub fn class_of(&self, i: usize) -> &[usize] {
        self.classes.iter().find(|c| c.contains(&i)).map(|c| c.as_slice()).unwrap_or(&[])
    }

    pub fn same_class(&self, k: usize, l: usize) -> bool {
        self.class_of(k).contains(&l)
    }

    pub fn multiple_classes(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.classes.iter().filter(|c| c.len() > 1)
    }

    pub fn is_class(&self, idx: &[usize]) -> bool {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        self.classes.iter().any(|c| *c == sorted)
    }
}

fn partition(f0: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, z) in f0.iter().enumerate() {
        match classes.iter_mut().find(|c| (f0[c[0]] - z).norm() < tol) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

pub fn fold_constant_order(a0: &CMat, period: f64) -> Result<FoldingResult> {
    let n = a0.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && a0[(i, j)] != zero() {
                return Err(Error::NotDiagonal);
            }
        }
    }
    let diag: Vec<C64> = a0.diagonal().iter().copied().collect();
    Ok(fold_diagonal(&diag, period, default_fold_tol(&diag)))
}

pub fn fold_diagonal(a0: &[C64], period: f64, tol: f64) -> FoldingResult {
    let (f0, folding_numbers): (Vec<C64>, Vec<i64>) = a0.iter().map(|&z| fold_value(z, period, tol)).unzip();
    let classes = partition(&f0, tol);
    FoldingResult { f0, folding_numbers, classes, tol }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExpandOptions {
    /// Treat perturbation orders beyond those supplied as zero.
    pub pad: bool,
}

#[derive(Clone, Debug)]
pub struct FloquetExpansion {
    pub folding: FoldingResult,
    pub f: Vec<CMat>,
    pub p: Vec<FourierMatrix>,
}

impl FloquetExpansion {
    pub fn order(&self) -> usize {
        self.f.len() - 1
    }

    /// `F_0 + εF_1 + … + εⁿF_n`.
    pub fn exponent_matrix(&self, eps: f64) -> CMat {
        let mut out = self.f[0].clone();
        let mut w = 1.0;
        for fj in &self.f[1..] {
            w *= eps;
            out += fj * C64::new(w, 0.0);
        }
        out
    }

    pub fn to_json(&self) -> ExpansionJson {
        let mat = |m: &CMat| MatrixJson {
            re: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect(),
        };
        ExpansionJson {
            order: self.order(),
            folding_numbers: self.folding.folding_numbers.clone(),
            classes: self.folding.classes.clone(),
            f: self.f.iter().map(mat).collect(),
            p: self.p.iter().map(|p| p.to_json()).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionJson {
    pub order: usize,
    pub folding_numbers: Vec<i64>,
    pub classes: Vec<Vec<usize>>,
    pub f: Vec<MatrixJson>,
    pub p: Vec<FourierMatrixJson>,
}

/// `exp((A_0 - F_0) t)` as a diagonal series with unit coefficients at the folding numbers.
pub fn p0_series(folding: &FoldingResult, period: f64) -> FourierMatrix {
    let n = folding.dim();
    let coeffs = folding.folding_numbers.iter().enumerate().map(|(k, &m)| {
        let mut c = CMat::zeros(n, n);
        c[(k, k)] = C64::new(1.0, 0.0);
        (m, c)
    });
    FourierMatrix::from_coeffs(n, period, coeffs).expect("folding numbers within bandwidth cap")
}

pub fn expand_inductive(family: &CoefficientFamily, order: usize, opts: ExpandOptions) -> Result<FloquetExpansion> {
    let folding = fold_diagonal(family.a0(), family.period(), family.default_fold_tol());
    expand_with_folding(family, &folding, order, opts)
}

struct Recursion<'a> {
    family: &'a CoefficientFamily,
    folding: &'a FoldingResult,
    w: f64,
}

impl Recursion<'_> {
    fn denom(&self, k: usize, l: usize, m: i64) -> C64 {
        C64::new(0.0, self.w * m as f64) - self.family.a0[k] + self.folding.f0[l]
    }

    fn checked_denom(&self, k: usize, l: usize, m: i64) -> Result<C64> {
        let d = self.denom(k, l, m);
        if d.norm() < self.folding.tol {
            return Err(Error::DegenerateDenominator { k, l, m });
        }
        Ok(d)
    }

    /// `F_j` from the inhomogeneity `Φ`.
    fn exponent_from(&self, phi: &FourierMatrix) -> Result<CMat> {
        let n = self.family.dim();
        let f0 = &self.folding.f0;
        let nk = &self.folding.folding_numbers;
        let mut fj = CMat::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                fj[(k, l)] = if self.folding.same_class(k, l) {
                    phi.entry(nk[k], k, l)
                } else {
                    let mut s = zero();
                    for (&m, c) in phi.iter() {
                        if c[(k, l)] != zero() {
                            s += c[(k, l)] / self.checked_denom(k, l, m)?;
                        }
                    }
                    (f0[l] - f0[k]) * s
                };
            }
        }
        Ok(fj)
    }

    /// `P_j` from `Φ`, with the compensating coefficient at `m = n_k` that enforces `P_j(0) = 0`.
    fn transformation_from(&self, phi: &FourierMatrix) -> Result<FourierMatrix> {
        let n = self.family.dim();
        let nk = &self.folding.folding_numbers;
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for k in 0..n {
            for l in 0..n {
                let mut total = zero();
                for (&m, c) in phi.iter() {
                    if m == nk[k] || c[(k, l)] == zero() {
                        continue;
                    }
                    let v = c[(k, l)] / self.checked_denom(k, l, m)?;
                    coeffs.entry(m).or_insert_with(|| CMat::zeros(n, n))[(k, l)] += v;
                    total += v;
                }
                if total != zero() {
                    coeffs.entry(nk[k]).or_insert_with(|| CMat::zeros(n, n))[(k, l)] -= total;
                }
            }
        }
        FourierMatrix::from_coeffs(n, self.family.period(), coeffs)
    }
}

/// Runs the recursion with a caller-supplied folding (any feasible representative choice).
pub fn expand_with_folding(
    family: &CoefficientFamily,
    folding: &FoldingResult,
    order: usize,
    opts: ExpandOptions,
) -> Result<FloquetExpansion> {
    if order > family.order() && !opts.pad {
        return Err(Error::OrderUnavailable { requested: order, available: family.order() });
    }
    if folding.dim() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: folding.dim() });
    }
    let n = family.dim();
    let period = family.period();
    let rec = Recursion { family, folding, w: family.omega() };
    let zero_series = FourierMatrix::zero(n, period);
    let a = |i: usize| family.perturbation(i).unwrap_or(&zero_series);

    let mut f = vec![folding.f0_matrix()];
    let mut p = vec![p0_series(folding, period)];
    for j in 1..=order {
        let mut phi = a(j).multiply(&p[0])?;
        for i in 1..j {
            phi = phi.add(&a(i).multiply(&p[j - i])?)?;
            phi = phi.sub(&p[j - i].right_mul(&f[i]))?;
        }
        let fj = rec.exponent_from(&phi)?;
        let pj = rec.transformation_from(&phi)?;
        f.push(fj);
        p.push(pj);
    }
    Ok(FloquetExpansion { folding: folding.clone(), f, p })
}

/// First-order exponent matrix and transformation from the explicit closed forms in `A_1`.
pub fn first_order_closed(family: &CoefficientFamily, folding: &FoldingResult) -> Result<(CMat, FourierMatrix)> {
    let n = family.dim();
    let w = family.omega();
    let a0 = family.a0();
    let f0 = &folding.f0;
    let nk = &folding.folding_numbers;
    let a1 = family.perturbation(1).expect("family has at least one perturbation");
    let tol = folding.tol;

    let mut f1 = CMat::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            f1[(k, l)] = if folding.same_class(k, l) {
                a1.entry(nk[k] - nk[l], k, l)
            } else {
                let mut s = zero();
                for (&m, c) in a1.iter() {
                    if c[(k, l)] == zero() {
                        continue;
                    }
                    let d = C64::new(0.0, w * m as f64) + a0[l] - a0[k];
                    if d.norm() < tol {
                        return Err(Error::DegenerateDenominator { k, l, m: m + nk[l] });
                    }
                    s += c[(k, l)] / d;
                }
                (f0[l] - f0[k]) * s
            };
        }
    }

    let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
    for k in 0..n {
        for l in 0..n {
            let mut total = zero();
            for (&s, c) in a1.iter() {
                let m = s + nk[l];
                if m == nk[k] || c[(k, l)] == zero() {
                    continue;
                }
                let d = C64::new(0.0, w * m as f64) - a0[k] + f0[l];
                if d.norm() < tol {
                    return Err(Error::DegenerateDenominator { k, l, m });
                }
                let v = c[(k, l)] / d;
                coeffs.entry(m).or_insert_with(|| CMat::zeros(n, n))[(k, l)] += v;
                total += v;
            }
            if total != zero() {
                coeffs.entry(nk[k]).or_insert_with(|| CMat::zeros(n, n))[(k, l)] -= total;
            }
        }
    }
    let p1 = FourierMatrix::from_coeffs(n, family.period(), coeffs)?;
    Ok((f1, p1))
}

/// Which closed form to use for the second-order entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecondOrderForm {
    /// Uses the already computed `F_1`.
    WithF1,
    /// Expresses `F_1` through `A_0`, `A_1` and `F_0` as well.
    A1Only,
}

/// `(F_2)_{kl}` for pairs inside one multiplicity class, from the closed triple sums.
pub fn second_order_entries(
    family: &CoefficientFamily,
    expansion: &FloquetExpansion,
    pairs: &[(usize, usize)],
    form: SecondOrderForm,
    opts: ExpandOptions,
) -> Result<BTreeMap<(usize, usize), C64>> {
    if family.order() < 2 && !opts.pad {
        return Err(Error::OrderUnavailable { requested: 2, available: family.order() });
    }
    if expansion.order() < 1 && form == SecondOrderForm::WithF1 {
        return Err(Error::OrderUnavailable { requested: 1, available: expansion.order() });
    }
    let n = family.dim();
    let w = family.omega();
    let a0 = family.a0();
    let folding = &expansion.folding;
    let f0 = &folding.f0;
    let nk = &folding.folding_numbers;
    let tol = folding.tol;
    let a1 = family.perturbation(1).expect("family has at least one perturbation");
    let zero_series = FourierMatrix::zero(n, family.period());
    let a2 = family.perturbation(2).unwrap_or(&zero_series);
    let iw = |m: i64| C64::new(0.0, w * m as f64);

    // Σ_m (A_1^m)_{kj} / (iΩm + (A_0)_jj − (A_0)_kk) over m ≠ n_k − n_j.
    let row_sum = |k: usize, j: usize| -> Result<C64> {
        let mut s = zero();
        for (&m, c) in a1.iter() {
            if m == nk[k] - nk[j] || c[(k, j)] == zero() {
                continue;
            }
            let d = iw(m) + a0[j] - a0[k];
            if d.norm() < tol {
                return Err(Error::DegenerateDenominator { k, l: j, m });
            }
            s += c[(k, j)] / d;
        }
        Ok(s)
    };

    let f1_entry = |j: usize, l: usize| -> Result<C64> {
        match form {
            SecondOrderForm::WithF1 => Ok(expansion.f[1][(j, l)]),
            SecondOrderForm::A1Only => {
                if folding.same_class(j, l) {
                    Ok(a1.entry(nk[j] - nk[l], j, l))
                } else {
                    let mut s = zero();
                    for (&m, c) in a1.iter() {
                        if c[(j, l)] == zero() {
                            continue;
                        }
                        let d = iw(m) + a0[l] - a0[j];
                        if d.norm() < tol {
                            return Err(Error::DegenerateDenominator { k: j, l, m });
                        }
                        s += c[(j, l)] / d;
                    }
                    Ok((f0[l] - f0[j]) * s)
                }
            }
        }
    };

    let mut out = BTreeMap::new();
    for &(k, l) in pairs {
        if k >= n || l >= n {
            return Err(Error::DimensionMismatch { expected: n, found: k.max(l) + 1 });
        }
        if !folding.same_class(k, l) {
            return Err(Error::PairNotDegenerate { k, l });
        }
        let mut total = a2.entry(nk[k] - nk[l], k, l);
        for j in 0..n {
            // A_1 P_1 term.
            for (&m, c) in a1.iter() {
                if m == nk[j] - nk[l] || c[(j, l)] == zero() {
                    continue;
                }
                let lead = a1.entry(nk[k] - nk[l] - m, k, j) - a1.entry(nk[k] - nk[j], k, j);
                if lead == zero() {
                    continue;
                }
                let d = iw(m) + a0[l] - a0[j];
                if d.norm() < tol {
                    return Err(Error::DegenerateDenominator { k: j, l, m });
                }
                total += lead * c[(j, l)] / d;
            }
            // −P_1^{n_k} F_1 term.
            let fjl = f1_entry(j, l)?;
            if fjl != zero() {
                total += row_sum(k, j)? * fjl;
            }
        }
        out.insert((k, l), total);
    }
    Ok(out)
}

/// Value of the ε-expansion of the fundamental solution at time `t`.
#[derive(Clone, Debug)]
pub struct SeriesValue {
    pub value: CMat,
    /// Bound on the neglected tail of the truncated exponential power sums.
    pub truncation_bound: f64,
}

/// `X_ε(t) ≈ P_0 E_0 + ε(P_1 E_0 + P_0 E_1) + ε²(P_2 E_0 + P_1 E_1 + P_0 E_2)`, where `E_j`
/// is the `εʲ` coefficient of `exp((F_0 + εF_1 + ε²F_2) t)`, each summed to `terms` powers.
pub fn fundamental_solution_series(expansion: &FloquetExpansion, eps: f64, t: f64, terms: usize) -> SeriesValue {
    let n = expansion.folding.dim();
    let zero_m = CMat::zeros(n, n);
    let fo = |j: usize| expansion.f.get(j).unwrap_or(&zero_m);
    let period = expansion.p[0].period();
    let zero_p = FourierMatrix::zero(n, period);
    let po = |j: usize| expansion.p.get(j).unwrap_or(&zero_p);
    let terms = terms.max(1);

    // Word sums of length k scaled by t^k / k!.
    let mut t0 = CMat::identity(n, n);
    let mut t1 = CMat::zeros(n, n);
    let mut t2 = CMat::zeros(n, n);
    let mut e = [t0.clone(), t1.clone(), t2.clone()];
    for k in 1..=terms {
        let s = C64::new(t / k as f64, 0.0);
        let n2 = (fo(0) * &t2 + fo(1) * &t1 + fo(2) * &t0) * s;
        let n1 = (fo(0) * &t1 + fo(1) * &t0) * s;
        let n0 = (fo(0) * &t0) * s;
        t0 = n0;
        t1 = n1;
        t2 = n2;
        e[0] += &t0;
        e[1] += &t1;
        e[2] += &t2;
    }
    let p: Vec<CMat> = (0..3).map(|j| po(j).evaluate(t)).collect();
    let epsc = C64::new(eps, 0.0);
    let value = &p[0] * &e[0]
        + (&p[1] * &e[0] + &p[0] * &e[1]) * epsc
        + (&p[2] * &e[0] + &p[1] * &e[1] + &p[0] * &e[2]) * (epsc * epsc);

    let a = (fo(0).norm() + eps.abs() * fo(1).norm() + eps * eps * fo(2).norm()) * t.abs();
    let pnorm: f64 = (0..3).map(|j| p[j].norm() * eps.abs().powi(j as i32)).sum();
    let truncation_bound = pnorm * exp_tail(a, terms);
    SeriesValue { value, truncation_bound }
}

/// `Σ_{k > terms} a^k / k!`.
fn exp_tail(a: f64, terms: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=terms + 1 {
        term *= a / k as f64;
    }
    let ratio = a / (terms as f64 + 2.0);
    if ratio < 1.0 {
        term / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

/// Residual of `P_j' = Σ_{i=0}^{j} (A_i P_{j-i} − P_{j-i} F_i)` as a max-abs over coefficients.
pub fn recursion_residual(family: &CoefficientFamily, expansion: &FloquetExpansion, j: usize) -> Result<f64> {
    let n = family.dim();
    let zero_series = FourierMatrix::zero(n, family.period());
    let a = |i: usize| family.perturbation(i).unwrap_or(&zero_series);
    let mut rhs = expansion.p[j].left_mul(&family.a0_matrix());
    for i in 0..=j {
        if i > 0 {
            rhs = rhs.add(&a(i).multiply(&expansion.p[j - i])?)?;
        }
        rhs = rhs.sub(&expansion.p[j - i].right_mul(&expansion.f[i]))?;
    }
    let diff = expansion.p[j].differentiate().sub(&rhs)?;
    Ok(diff.iter().fold(0.0, |acc, (_, c)| acc.max(max_abs(c))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fold_reference_values() {
        let period = 2.0 * PI / 0.75;
        let a0 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-0.15, -0.5268), c(-0.15, 0.5268)]));
        let r = fold_constant_order(&a0, period).unwrap();
        assert_eq!(r.folding_numbers, vec![-1, 1]);
        assert!((r.f0[0] - c(-0.15, 0.2232)).norm() < 1e-12);
        assert!((r.f0[1] - c(-0.15, -0.2232)).norm() < 1e-12);
        assert_eq!(r.classes.len(), 2);
    }

    #[test]
    fn fold_is_identity_inside_zone() {
        let period = 2.0;
        let a0 = vec![c(1.0, 0.3), c(-2.0, -1.5), c(0.0, 0.0)];
        let r = fold_diagonal(&a0, period, 1e-9);
        assert_eq!(r.f0, a0);
        assert_eq!(r.folding_numbers, vec![0, 0, 0]);
    }

    #[test]
    fn fold_upper_edge_wraps_down() {
        let period = 2.0 * PI;
        let (z, n) = fold_value(c(0.0, 0.5), period, 1e-12);
        assert_eq!(n, 1);
        assert!((z.im + 0.5).abs() < 1e-15);
        let (z, n) = fold_value(c(0.0, -0.5), period, 1e-12);
        assert_eq!(n, 0);
        assert!((z.im + 0.5).abs() < 1e-15);
    }

    #[test]
    fn not_diagonal_is_rejected() {
        let mut a0 = CMat::identity(2, 2);
        a0[(0, 1)] = c(1e-3, 0.0);
        assert_eq!(fold_constant_order(&a0, 1.0).unwrap_err(), Error::NotDiagonal);
    }

    #[test]
    fn zero_perturbation_gives_zero_corrections() {
        let fam = CoefficientFamily::from_diagonal(
            vec![c(-0.1, 0.4), c(0.2, -1.1), c(0.0, 2.5)],
            vec![FourierMatrix::zero(3, 1.3)],
            1.3,
        )
        .unwrap();
        let e = expand_inductive(&fam, 3, ExpandOptions { pad: true }).unwrap();
        for j in 1..=3 {
            assert_eq!(max_abs(&e.f[j]), 0.0);
            assert!(e.p[j].is_zero());
        }
    }

    #[test]
    fn missing_orders_need_pad() {
        let fam = CoefficientFamily::from_diagonal(vec![c(0.0, 1.0)], vec![FourierMatrix::zero(1, 1.0)], 1.0).unwrap();
        assert_eq!(
            expand_inductive(&fam, 2, ExpandOptions::default()).unwrap_err(),
            Error::OrderUnavailable { requested: 2, available: 1 }
        );
    }

    #[test]
    fn second_order_pure_a2() {
        let period = 2.0 * PI;
        let a2 = FourierMatrix::from_coeffs(2, period, [(1, CMat::from_element(2, 2, c(0.3, -0.2)))]).unwrap();
        let fam = CoefficientFamily::from_diagonal(
            vec![c(0.0, 0.5), c(0.0, -0.5)],
            vec![FourierMatrix::zero(2, period), a2.clone()],
            period,
        )
        .unwrap();
        let e = expand_inductive(&fam, 2, ExpandOptions::default()).unwrap();
        assert_eq!(e.folding.classes, vec![vec![0, 1]]);
        let n = &e.folding.folding_numbers;
        let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
        for form in [SecondOrderForm::WithF1, SecondOrderForm::A1Only] {
            let v = second_order_entries(&fam, &e, &pairs, form, ExpandOptions::default()).unwrap();
            for &(k, l) in &pairs {
                assert!((v[&(k, l)] - a2.entry(n[k] - n[l], k, l)).norm() < 1e-15);
                assert!((v[&(k, l)] - e.f[2][(k, l)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn series_at_zero_time_is_identity() {
        let period = 3.0;
        let a1 = FourierMatrix::from_coeffs(2, period, [(1, CMat::from_element(2, 2, c(0.2, 0.1)))]).unwrap();
        let fam = CoefficientFamily::from_diagonal(vec![c(-0.1, 0.7), c(-0.3, -0.2)], vec![a1], period).unwrap();
        let e = expand_inductive(&fam, 2, ExpandOptions { pad: true }).unwrap();
        let x = fundamental_solution_series(&e, 0.3, 0.0, 30);
        assert!(max_abs(&(x.value - CMat::identity(2, 2))) < 1e-14);
    }
}
