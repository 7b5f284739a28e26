//! Two coupled subwavelength resonators with time-modulated density and bulk modulus.
//!
//! Modulations enter as `1/ρ_i = 1 + ε η_i(t)` and `1/κ_i = 1 + ε γ_i(t)`. The first-order
//! system is written in the eigenbasis of the unmodulated capacitance problem, with constant
//! exponents ordered `(−w₊, +w₊, −w₋, +w₋)·i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::CoefficientFamily;
use crate::fourier::{same_period, FourierMatrix, ScalarFourierSeries, C64, CMat};

const POSITIVITY_SAMPLES: usize = 1024;
const RATIONAL_SEARCH_DENOMINATOR: i64 = 64;
const RATIONAL_SEARCH_TOL: f64 = 1e-9;
const OMEGA_RTOL: f64 = 1e-9;
const RESONANCE_FLAG_RTOL: f64 = 1e-6;
const MAX_LISTED_HARMONIC: i64 = 8;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn im(x: f64) -> C64 {
    C64::new(0.0, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceMatrix {
    pub c11: f64,
    pub c22: f64,
    /// `C_21` is the conjugate.
    pub c12: C64,
}

impl CapacitanceMatrix {
    pub fn new(c11: f64, c22: f64, c12: C64) -> Self {
        Self { c11, c22, c12 }
    }

    pub fn diagonal(c11: f64, c22: f64) -> Self {
        Self::new(c11, c22, c(0.0))
    }

    pub fn trace(&self) -> f64 {
        self.c11 + self.c22
    }

    pub fn diff(&self) -> f64 {
        self.c11 - self.c22
    }

    pub fn c12_sq(&self) -> f64 {
        self.c12.norm_sqr()
    }

    /// `sqrt((C11 − C22)² + 4|C12|²)`.
    pub fn alpha(&self) -> f64 {
        (self.diff().powi(2) + 4.0 * self.c12_sq()).sqrt()
    }

    pub fn det(&self) -> f64 {
        self.c11 * self.c22 - self.c12_sq()
    }

    pub fn matrix(&self) -> CMat {
        CMat::from_row_slice(2, 2, &[c(self.c11), self.c12, self.c12.conj(), c(self.c22)])
    }

    fn scale(&self) -> f64 {
        self.c11.abs().max(self.c22.abs()).max(self.c12.norm())
    }

    pub fn is_diagonal(&self) -> bool {
        self.c12.norm() <= 1e-12 * self.scale()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimerParams {
    pub cap: CapacitanceMatrix,
    pub delta: f64,
    /// Resonator volume, shared by both resonators.
    pub vol: f64,
    pub eta1: ScalarFourierSeries,
    pub eta2: ScalarFourierSeries,
    pub gamma1: ScalarFourierSeries,
    pub gamma2: ScalarFourierSeries,
    pub period: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channels {
    Rho,
    Kappa,
    Both,
}

impl Channels {
    pub fn has_rho(self) -> bool {
        matches!(self, Channels::Rho | Channels::Both)
    }

    pub fn has_kappa(self) -> bool {
        matches!(self, Channels::Kappa | Channels::Both)
    }
}

impl DimerParams {
    /// Unmodulated dimer; set the series afterwards.
    pub fn unmodulated(cap: CapacitanceMatrix, delta: f64, vol: f64, period: f64) -> Self {
        let z = ScalarFourierSeries::zero(period);
        Self { cap, delta, vol, eta1: z.clone(), eta2: z.clone(), gamma1: z.clone(), gamma2: z, period }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// `w± = sqrt(δ/(2|D|))·sqrt(C11 + C22 ± α)`.
    pub fn w_plus(&self) -> f64 {
        (self.delta / (2.0 * self.vol)).sqrt() * (self.cap.trace() + self.cap.alpha()).sqrt()
    }

    pub fn w_minus(&self) -> f64 {
        (self.delta / (2.0 * self.vol)).sqrt() * (self.cap.trace() - self.cap.alpha()).sqrt()
    }

    pub fn a0(&self) -> [C64; 4] {
        let (p, m) = (self.w_plus(), self.w_minus());
        [im(-p), im(p), im(-m), im(m)]
    }

    /// Copy with the series of the unused channel set to zero.
    pub fn restricted(&self, channels: Channels) -> Self {
        let mut out = self.clone();
        let z = ScalarFourierSeries::zero(self.period);
        if !channels.has_rho() {
            out.eta1 = z.clone();
            out.eta2 = z.clone();
        }
        if !channels.has_kappa() {
            out.gamma1 = z.clone();
            out.gamma2 = z;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("vol", self.vol), ("period", self.period)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for s in [&self.eta1, &self.eta2, &self.gamma1, &self.gamma2] {
            if !same_period(s.period(), self.period) {
                return Err(Error::SeriesPeriodMismatch);
            }
            if !s.is_real_valued() {
                return Err(Error::Invalid("modulation series must be real-valued".into()));
            }
        }
        let cap = &self.cap;
        if cap.alpha() <= 1e-12 * cap.scale() {
            return Err(Error::DegenerateConstantSystem("C11 = C22 and C12 = 0".into()));
        }
        if cap.det() <= 1e-12 * cap.scale().powi(2) || cap.trace() <= 0.0 {
            return Err(Error::DegenerateConstantSystem("capacitance matrix is not positive definite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum A2Variant {
    /// Same prefactor on all four blocks.
    #[default]
    Uniform,
    /// Lower-left block with the `sqrt(δ)/(sqrt(2)·|D|)` prefactor.
    AsPrinted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBScale {
    /// Off-diagonal second-derivative blocks with prefactor `(i/4)·sqrt(|D|/(2δ))`.
    #[default]
    HillConsistent,
    /// Off-diagonal second-derivative blocks with prefactor `(i/8)·sqrt(|D|/(2δ))`.
    AsPrinted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimerOptions {
    pub a2_variant: A2Variant,
    pub kappa_b: KappaBScale,
}

/// `coef·[[1,−1],[1,−1]]` placed in the 2×2 block `(bi, bj)` of a 4×4 matrix.
fn pblock(bi: usize, bj: usize, coef: C64) -> CMat {
    let mut m = CMat::zeros(4, 4);
    let (r, col) = (2 * bi, 2 * bj);
    m[(r, col)] = coef;
    m[(r, col + 1)] = -coef;
    m[(r + 1, col)] = coef;
    m[(r + 1, col + 1)] = -coef;
    m
}

struct Geometry {
    s: f64,
    dc: f64,
    al: f64,
    det: f64,
    c12sq: f64,
    sp: f64,
    sm: f64,
}

impl Geometry {
    fn of(p: &DimerParams) -> Self {
        let cap = &p.cap;
        let s = cap.trace();
        let al = cap.alpha();
        Self { s, dc: cap.diff(), al, det: cap.det(), c12sq: cap.c12_sq(), sp: (s + al).sqrt(), sm: (s - al).sqrt() }
    }
}

fn accumulate(acc: &mut FourierMatrix, s: &ScalarFourierSeries, m: &CMat) -> Result<()> {
    if s.is_zero() {
        return Ok(());
    }
    *acc = acc.add(&FourierMatrix::from_scalar(s, m)?)?;
    Ok(())
}

fn rho_a1(p: &DimerParams, g: &Geometry) -> Result<FourierMatrix> {
    let mut a1 = FourierMatrix::zero(4, p.period);
    let pre = im(p.delta.sqrt() / (2.0 * (2.0 * p.vol).sqrt()));
    let x = (g.dc - g.al) / g.sm;
    let y = (g.dc + g.al) / g.sp;
    let m = pblock(0, 1, -pre * x) + pblock(1, 0, -pre * y);
    accumulate(&mut a1, &p.eta1.sub(&p.eta2)?, &m)?;
    Ok(a1)
}

fn kappa_a1(p: &DimerParams, g: &Geometry, scale: KappaBScale) -> Result<FourierMatrix> {
    let mut a1 = FourierMatrix::zero(4, p.period);
    let (s, dc, al, sp, sm) = (g.s, g.dc, g.al, g.sp, g.sm);
    let q = im(p.delta.sqrt() / (4.0 * (2.0 * p.vol).sqrt()));
    let b = im((p.vol / (2.0 * p.delta)).sqrt() / 8.0);
    let bo = match scale {
        KappaBScale::HillConsistent => b * 2.0,
        KappaBScale::AsPrinted => b,
    };
    let (c11, c22, c2) = (p.cap.c11, p.cap.c22, g.c12sq);

    let g1m = pblock(0, 0, q * (sp / al * (al + dc))) + pblock(1, 1, q * (sm / al * (al - dc)));
    let g2m = pblock(0, 0, q * (sp / al * (al - dc))) + pblock(1, 1, q * (sm / al * (al + dc)));
    let gdm = pblock(0, 1, -q * ((al - dc) * s / (al * sm))) + pblock(1, 0, -q * ((al + dc) * s / (al * sp)));
    let dd = b / (al * g.det);
    let h1m = pblock(0, 0, dd * (sp * (c22 * (al + dc) - 2.0 * c2))) + pblock(1, 1, dd * (sm * (c22 * (al - dc) + 2.0 * c2)));
    let h2m = pblock(0, 0, dd * (sp * (c11 * (al - dc) - 2.0 * c2))) + pblock(1, 1, dd * (sm * (c11 * (al + dc) + 2.0 * c2)));
    let hdm = pblock(0, 1, bo * ((dc - al) / (al * sm))) + pblock(1, 0, -bo * ((dc + al) / (al * sp)));

    let g1pp = p.gamma1.differentiate().differentiate();
    let g2pp = p.gamma2.differentiate().differentiate();
    accumulate(&mut a1, &p.gamma1, &g1m)?;
    accumulate(&mut a1, &p.gamma2, &g2m)?;
    accumulate(&mut a1, &p.gamma1.sub(&p.gamma2)?, &gdm)?;
    accumulate(&mut a1, &g1pp, &h1m)?;
    accumulate(&mut a1, &g2pp, &h2m)?;
    accumulate(&mut a1, &g1pp.sub(&g2pp)?, &hdm)?;
    Ok(a1)
}

fn rho_a2(p: &DimerParams, g: &Geometry, variant: A2Variant) -> Result<FourierMatrix> {
    let mut a2 = FourierMatrix::zero(4, p.period);
    let (dc, al, sp, sm, c2) = (g.dc, g.al, g.sp, g.sm, g.c12sq);
    let q = im(p.delta.sqrt() / (2.0 * p.vol).sqrt());
    let q21 = match variant {
        A2Variant::Uniform => q,
        A2Variant::AsPrinted => im(p.delta.sqrt() / (2f64.sqrt() * p.vol)),
    };
    let h = p.eta1.sub(&p.eta2)?;
    let hh = h.multiply(&h)?;
    let sq = p.eta1.multiply(&p.eta1)?.sub(&p.eta2.multiply(&p.eta2)?)?;
    let h2 = h.multiply(&p.eta2)?;
    let mhh = pblock(0, 0, -q * (c2 / (al * sp))) + pblock(1, 1, q * (c2 / (al * sm)));
    let msq = pblock(0, 1, -q * (c2 / (al * sm))) + pblock(1, 0, q21 * (c2 / (al * sp)));
    let mh2 = pblock(0, 1, -q * (dc * (dc - al) / (2.0 * al * sm))) + pblock(1, 0, q21 * (dc * (dc + al) / (2.0 * al * sp)));
    accumulate(&mut a2, &hh, &mhh)?;
    accumulate(&mut a2, &sq, &msq)?;
    accumulate(&mut a2, &h2, &mh2)?;
    Ok(a2)
}

pub fn build_dimer(p: &DimerParams, channels: Channels) -> Result<CoefficientFamily> {
    build_dimer_with(p, channels, DimerOptions::default())
}

/// Density-only families carry `A_1` and `A_2`; families with bulk-modulus modulation are
/// first order only.
pub fn build_dimer_with(p: &DimerParams, channels: Channels, opts: DimerOptions) -> Result<CoefficientFamily> {
    p.validate()?;
    let g = Geometry::of(p);
    let mut a1 = FourierMatrix::zero(4, p.period);
    if channels.has_rho() {
        a1 = a1.add(&rho_a1(p, &g)?)?;
    }
    if channels.has_kappa() {
        a1 = a1.add(&kappa_a1(p, &g, opts.kappa_b)?)?;
    }
    let mut perturbations = vec![a1];
    if channels == Channels::Rho {
        perturbations.push(rho_a2(p, &g, opts.a2_variant)?);
    }
    CoefficientFamily::from_diagonal(p.a0().to_vec(), perturbations, p.period)
}

/// Hill system `Ψ'' + M(t)Ψ = 0` with the material parameters inverted pointwise.
#[derive(Clone, Debug)]
pub struct HillSystem {
    eps: f64,
    period: f64,
    scale: f64,
    cap: CMat,
    eta: [ScalarFourierSeries; 2],
    gamma: [[ScalarFourierSeries; 3]; 2],
}

impl HillSystem {
    pub fn dim(&self) -> usize {
        4
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn m_of_t(&self, t: f64) -> CMat {
        let one = c(1.0);
        let e = self.eps;
        let rho: Vec<C64> = self.eta.iter().map(|s| one / (one + s.evaluate(t) * e)).collect();
        let mut kappa = Vec::with_capacity(2);
        let mut w3 = Vec::with_capacity(2);
        for [g0, g1, g2] in &self.gamma {
            let g = one + g0.evaluate(t) * e;
            let gp = g1.evaluate(t) * e;
            let gpp = g2.evaluate(t) * e;
            kappa.push(one / g);
            w3.push(-gpp / (g * 2.0) + gp * gp / (g * g * 4.0));
        }
        let mut m = CMat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = self.cap[(i, j)] * self.scale * (kappa[i] * kappa[j]).sqrt() * rho[i] / rho[j];
            }
            m[(i, i)] += w3[i];
        }
        m
    }

    /// `[[0, I], [−M(t), 0]]`.
    pub fn first_order(&self, t: f64) -> CMat {
        let m = self.m_of_t(t);
        let mut out = CMat::zeros(4, 4);
        out[(0, 2)] = c(1.0);
        out[(1, 3)] = c(1.0);
        for i in 0..2 {
            for j in 0..2 {
                out[(2 + i, j)] = -m[(i, j)];
            }
        }
        out
    }
}

pub fn build_hill_system(p: &DimerParams, eps: f64) -> Result<HillSystem> {
    p.validate()?;
    let named = [("eta1", &p.eta1), ("eta2", &p.eta2), ("gamma1", &p.gamma1), ("gamma2", &p.gamma2)];
    for (name, s) in named {
        for k in 0..POSITIVITY_SAMPLES {
            let t = p.period * k as f64 / POSITIVITY_SAMPLES as f64;
            let v = 1.0 + eps * s.evaluate(t).re;
            if !(v > 0.0) {
                return Err(Error::NonPositiveMaterialParameter { which: name.into(), t });
            }
        }
    }
    let d = |s: &ScalarFourierSeries| {
        let s1 = s.differentiate();
        let s2 = s1.differentiate();
        [s.clone(), s1, s2]
    };
    Ok(HillSystem {
        eps,
        period: p.period,
        scale: p.delta / p.vol,
        cap: p.cap.matrix(),
        eta: [p.eta1.clone(), p.eta2.clone()],
        gamma: [d(&p.gamma1), d(&p.gamma2)],
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioConvention {
    /// Ratio `±(C11 + C22 − (|D|/δ) n²Ω²)/(2α)` from the block cancellation equations.
    #[default]
    ProofConsistent,
    /// `∓(C11 + C22 ∓ 4 sqrt(det C))/(2 sqrt((C11 − C22)² + 4|C12|))`.
    AsPrinted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonanceCase {
    /// `nΩ = w₊ − w₋`: classes `(1,3)` and `(2,4)`.
    A,
    /// `nΩ = w₊ + w₋`: classes `(1,4)` and `(2,3)`.
    B,
}

impl ResonanceCase {
    fn pairs(self) -> [(usize, usize); 2] {
        match self {
            ResonanceCase::A => [(0, 2), (1, 3)],
            ResonanceCase::B => [(0, 3), (1, 2)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleOmega {
    pub case: ResonanceCase,
    pub n: i64,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimerPairReport {
    /// Zero-based indices into the constant exponents.
    pub pair: (usize, usize),
    pub case: ResonanceCase,
    /// `n_i − n_j`.
    pub n: i64,
    pub upper_vanishes: bool,
    pub lower_vanishes: bool,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimerEpClassification {
    pub verdict: bool,
    pub pairs: Vec<DimerPairReport>,
    pub admissible: Vec<AdmissibleOmega>,
    /// Set when `n²Ω²` lies within the flag tolerance of `(δ/|D|)(C11 + C22)`.
    pub resonance_flag: bool,
    pub reason: String,
}

/// Rejects ratios of the two constant-order frequencies that are close to a rational with
/// small denominator.
pub fn check_frequency_ratio(p: &DimerParams) -> Result<f64> {
    let (wp, wm) = (p.w_plus(), p.w_minus());
    let r = (wp - wm) / (wp + wm);
    for q in 1..=RATIONAL_SEARCH_DENOMINATOR {
        let num = (r * q as f64).round();
        if (r - num / q as f64).abs() <= RATIONAL_SEARCH_TOL {
            return Err(Error::DegeneracyCheckFailed { ratio: r, p: num as i64, q });
        }
    }
    Ok(r)
}

pub fn admissible_omegas(p: &DimerParams, max_n: i64) -> Vec<AdmissibleOmega> {
    let (wp, wm) = (p.w_plus(), p.w_minus());
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.push(AdmissibleOmega { case: ResonanceCase::A, n, omega: (wp - wm) / n as f64 });
        out.push(AdmissibleOmega { case: ResonanceCase::B, n, omega: (wp + wm) / n as f64 });
    }
    out
}

fn matched_cases(p: &DimerParams) -> Vec<ResonanceCase> {
    let om = p.omega();
    let (wp, wm) = (p.w_plus(), p.w_minus());
    let mut out = Vec::new();
    for (case, w) in [(ResonanceCase::A, wp - wm), (ResonanceCase::B, wp + wm)] {
        let n = (w / om).round();
        if n >= 1.0 && (n * om - w).abs() <= OMEGA_RTOL * w {
            out.push(case);
        }
    }
    out
}

fn nonzero(z: C64, scale: f64) -> bool {
    z.norm() > 1e-10 * scale.max(f64::MIN_POSITIVE)
}

fn series_scale(s: &ScalarFourierSeries) -> f64 {
    s.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
}

/// Closed-form first-order exceptional-point classification of a dimer.
///
/// Density-only and bulk-modulus-only families need `C12 = 0`, `C11 ≠ C22` and a resonant
/// `Ω`; the surviving off-diagonal block then decides. With both channels and `C12 ≠ 0` the
/// verdict follows from the ratio of the modulation differences.
pub fn classify_dimer_ep(p: &DimerParams, channels: Channels, conv: RatioConvention) -> Result<DimerEpClassification> {
    p.validate()?;
    if channels != Channels::Both {
        check_frequency_ratio(p)?;
    }
    let mut out = DimerEpClassification {
        verdict: false,
        pairs: Vec::new(),
        admissible: admissible_omegas(p, MAX_LISTED_HARMONIC),
        resonance_flag: false,
        reason: String::new(),
    };
    let diagonal = p.cap.is_diagonal();
    if channels != Channels::Both && !diagonal {
        out.reason = "C12 != 0".into();
        return Ok(out);
    }
    let cases = matched_cases(p);
    if cases.is_empty() {
        out.reason = "omega is not a cross-class resonance".into();
        return Ok(out);
    }
    let g = Geometry::of(p);
    let om = p.omega();
    let a0 = p.a0();
    let h = p.eta1.sub(&p.eta2)?;
    let gd = p.gamma1.sub(&p.gamma2)?;
    let (hs, gs) = match channels {
        Channels::Rho => (h, ScalarFourierSeries::zero(p.period)),
        Channels::Kappa => (ScalarFourierSeries::zero(p.period), gd),
        Channels::Both => (h, gd),
    };
    let scale = series_scale(&hs).max(series_scale(&gs));
    let upper_dead = diagonal && p.cap.c11 > p.cap.c22;
    let lower_dead = diagonal && p.cap.c22 > p.cap.c11;

    for case in cases {
        for (i, j) in case.pairs() {
            let n = ((a0[i].im - a0[j].im) / om).round() as i64;
            let n2w2 = (n as f64 * om).powi(2);
            let ds = p.delta / p.vol * g.s;
            let near = (n2w2 - ds).abs() <= RESONANCE_FLAG_RTOL * ds;
            out.resonance_flag |= near && channels.has_kappa();
            let r = (g.s - p.vol / p.delta * n2w2) / (2.0 * g.al);
            let (ru, rl) = match conv {
                RatioConvention::ProofConsistent => (r, -r),
                RatioConvention::AsPrinted => {
                    let sign = if case == ResonanceCase::A { -1.0 } else { 1.0 };
                    let v = (g.s + sign * 4.0 * g.det.sqrt()) / (2.0 * (g.dc.powi(2) + 4.0 * p.cap.c12.norm()).sqrt());
                    (-v, v)
                }
            };
            let (hu, gu) = (hs.coeff(n), gs.coeff(n));
            let (hl, gl) = (hs.coeff(-n), gs.coeff(-n));
            let (upper_vanishes, lower_vanishes) = match channels {
                Channels::Rho => (upper_dead || !nonzero(hu, scale), lower_dead || !nonzero(hl, scale)),
                Channels::Kappa => {
                    let dead = near || !nonzero(gu, scale);
                    (upper_dead || dead, lower_dead || near || !nonzero(gl, scale))
                }
                Channels::Both if diagonal => (
                    upper_dead || !nonzero(hu - gu * r, scale),
                    lower_dead || !nonzero(hl + gl * r, scale),
                ),
                Channels::Both => (!nonzero(hu - gu * ru, scale), !nonzero(hl - gl * rl, scale)),
            };
            let verdict = upper_vanishes != lower_vanishes;
            out.verdict |= verdict;
            out.pairs.push(DimerPairReport { pair: (i, j), case, n, upper_vanishes, lower_vanishes, verdict });
        }
    }
    out.reason = if out.verdict { "one resonant block vanishes".into() } else { "no resonant block vanishes alone".into() };
    Ok(out)
}
