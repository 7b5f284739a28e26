//! Finite Fourier series of T-periodic matrix- and scalar-valued functions.
//!
//! A coefficient at index `m` multiplies `exp(i 2π m t / T)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const DEFAULT_BANDWIDTH_CAP: i64 = 256;
const DROP_RELATIVE: f64 = 1e-14;
const PERIOD_RTOL: f64 = 1e-12;

pub fn same_period(a: f64, b: f64) -> bool {
    (a - b).abs() <= PERIOD_RTOL * a.abs().max(b.abs())
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn phase(m: i64, t: f64, period: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * m as f64 * t / period)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierMatrix {
    dim: usize,
    period: f64,
    cap: i64,
    coeffs: BTreeMap<i64, CMat>,
}

impl FourierMatrix {
    pub fn zero(dim: usize, period: f64) -> Self {
        assert!(dim > 0 && period > 0.0, "dimension and period must be positive");
        Self { dim, period, cap: DEFAULT_BANDWIDTH_CAP, coeffs: BTreeMap::new() }
    }

    /// Builds a series from `(m, coefficient)` pairs; repeated indices are summed.
    pub fn from_coeffs<I>(dim: usize, period: f64, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, CMat)>,
    {
        let mut out = Self::zero(dim, period);
        for (m, c) in coeffs {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.nrows().max(c.ncols()) });
            }
            match out.coeffs.get_mut(&m) {
                Some(acc) => *acc += c,
                None => {
                    out.coeffs.insert(m, c);
                }
            }
        }
        out.canonicalize();
        out.check_cap()?;
        Ok(out)
    }

    pub fn constant(c: CMat, period: f64) -> Self {
        let dim = c.nrows();
        Self::from_coeffs(dim, period, [(0, c)]).expect("constant series is always valid")
    }

    pub fn identity(dim: usize, period: f64) -> Self {
        Self::constant(CMat::identity(dim, dim), period)
    }

    pub fn singleton(m: i64, c: CMat, period: f64) -> Result<Self> {
        Self::from_coeffs(c.nrows(), period, [(m, c)])
    }

    /// `s(t) * m` for a scalar series `s` and a constant matrix `m`.
    pub fn from_scalar(s: &ScalarFourierSeries, m: &CMat) -> Result<Self> {
        Self::from_coeffs(m.nrows(), s.period(), s.iter().map(|(&k, &c)| (k, m * c)))
    }

    pub fn with_cap(mut self, cap: i64) -> Result<Self> {
        self.cap = cap;
        self.check_cap()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    pub fn bandwidth(&self) -> i64 {
        self.coeffs.keys().map(|m| m.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, m: i64) -> Option<&CMat> {
        self.coeffs.get(&m)
    }

    pub fn coeff_or_zero(&self, m: i64) -> CMat {
        self.coeffs.get(&m).cloned().unwrap_or_else(|| CMat::zeros(self.dim, self.dim))
    }

    /// Entry `(k, l)` of the coefficient at frequency `m`.
    pub fn entry(&self, m: i64, k: usize, l: usize) -> C64 {
        self.coeffs.get(&m).map_or(C64::new(0.0, 0.0), |c| c[(k, l)])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &CMat)> {
        self.coeffs.iter()
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |acc, c| acc.max(max_abs(c)))
    }

    /// Sum of all coefficients, i.e. the value at `t = 0`.
    pub fn coeff_sum(&self) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for c in self.coeffs.values() {
            out += c;
        }
        out
    }

    pub fn evaluate(&self, t: f64) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (&m, c) in &self.coeffs {
            out += c * phase(m, t, self.period);
        }
        out
    }

    pub fn differentiate(&self) -> Self {
        let w = 2.0 * PI / self.period;
        let mut out = Self { coeffs: BTreeMap::new(), ..self.clone() };
        for (&m, c) in &self.coeffs {
            if m != 0 {
                out.coeffs.insert(m, c * C64::new(0.0, w * m as f64));
            }
        }
        out.canonicalize();
        out
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let lo = self.coeffs.keys().next().zip(other.coeffs.keys().next()).map(|(a, b)| a + b);
        let hi = self.coeffs.keys().last().zip(other.coeffs.keys().last()).map(|(a, b)| a + b);
        if let (Some(lo), Some(hi)) = (lo, hi) {
            let cap = self.cap.min(other.cap);
            let bw = lo.abs().max(hi.abs());
            if bw > cap {
                return Err(Error::BandwidthExceeded { bandwidth: bw, cap });
            }
        }
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for (&m, a) in &self.coeffs {
            for (&n, b) in &other.coeffs {
                let prod = a * b;
                match coeffs.get_mut(&(m + n)) {
                    Some(acc) => *acc += prod,
                    None => {
                        coeffs.insert(m + n, prod);
                    }
                }
            }
        }
        let mut out = Self { dim: self.dim, period: self.period, cap: self.cap.min(other.cap), coeffs };
        out.canonicalize();
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out.canonicalize();
        out
    }

    /// `m · a(t)` for a constant matrix `m`.
    pub fn left_mul(&self, m: &CMat) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = m * &*c;
        }
        out.canonicalize();
        out
    }

    /// `a(t) · m` for a constant matrix `m`.
    pub fn right_mul(&self, m: &CMat) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = &*c * m;
        }
        out.canonicalize();
        out
    }

    /// True when `c_{-m} = conj(c_m)` entrywise, i.e. the function is real-valued.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        self.coeffs.iter().all(|(&m, c)| {
            let mirror = self.coeff_or_zero(-m);
            c.iter().zip(mirror.iter()).all(|(a, b)| (a - b.conj()).norm() <= tol * scale)
        })
    }

    fn combine(&self, other: &Self, sign: C64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.cap = self.cap.min(other.cap);
        for (&m, c) in &other.coeffs {
            match out.coeffs.get_mut(&m) {
                Some(acc) => *acc += c * sign,
                None => {
                    out.coeffs.insert(m, c * sign);
                }
            }
        }
        out.canonicalize();
        out.check_cap()?;
        Ok(out)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if !same_period(self.period, other.period) {
            return Err(Error::PeriodMismatch { a: self.period, b: other.period });
        }
        Ok(())
    }

    fn check_cap(&self) -> Result<()> {
        let bw = self.bandwidth();
        if bw > self.cap {
            return Err(Error::BandwidthExceeded { bandwidth: bw, cap: self.cap });
        }
        Ok(())
    }

    fn canonicalize(&mut self) {
        let top = self.max_abs();
        let floor = DROP_RELATIVE * top;
        self.coeffs.retain(|_, c| {
            let a = max_abs(c);
            a > 0.0 && a >= floor
        });
    }

    pub fn to_json(&self) -> FourierMatrixJson {
        FourierMatrixJson {
            dim: self.dim,
            period: self.period,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&m, c)| MatrixCoeffJson {
                    m,
                    re: (0..self.dim).map(|i| (0..self.dim).map(|j| c[(i, j)].re).collect()).collect(),
                    im: (0..self.dim).map(|i| (0..self.dim).map(|j| c[(i, j)].im).collect()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &FourierMatrixJson) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(j.coeffs.len());
        for e in &j.coeffs {
            if e.re.len() != j.dim || e.im.len() != j.dim {
                return Err(Error::DimensionMismatch { expected: j.dim, found: e.re.len() });
            }
            let mut c = CMat::zeros(j.dim, j.dim);
            for i in 0..j.dim {
                if e.re[i].len() != j.dim || e.im[i].len() != j.dim {
                    return Err(Error::DimensionMismatch { expected: j.dim, found: e.re[i].len() });
                }
                for k in 0..j.dim {
                    c[(i, k)] = C64::new(e.re[i][k], e.im[i][k]);
                }
            }
            coeffs.push((e.m, c));
        }
        Self::from_coeffs(j.dim, j.period, coeffs)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixCoeffJson {
    pub m: i64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FourierMatrixJson {
    pub dim: usize,
    pub period: f64,
    pub coeffs: Vec<MatrixCoeffJson>,
}

impl Serialize for FourierMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FourierMatrixJson::deserialize(d)?;
        Self::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// A scalar coefficient entry as used in model configs: `{"m": 1, "re": 0.5, "im": 0}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScalarCoeffJson {
    pub m: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFourierSeries {
    period: f64,
    real_valued: bool,
    coeffs: BTreeMap<i64, C64>,
}

impl ScalarFourierSeries {
    pub fn zero(period: f64) -> Self {
        Self { period, real_valued: true, coeffs: BTreeMap::new() }
    }

    /// With `real_valued` set, the coefficients must satisfy `c_{-m} = conj(c_m)`.
    pub fn new<I>(period: f64, coeffs: I, real_valued: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, C64)>,
    {
        if period <= 0.0 {
            return Err(Error::Invalid(format!("period must be positive, got {period}")));
        }
        let mut out = Self { period, real_valued, coeffs: BTreeMap::new() };
        for (m, c) in coeffs {
            *out.coeffs.entry(m).or_insert(C64::new(0.0, 0.0)) += c;
        }
        out.canonicalize();
        if real_valued && !out.is_conjugate_symmetric(1e-12) {
            return Err(Error::Invalid("real-valued series must satisfy c(-m) = conj(c(m))".into()));
        }
        Ok(out)
    }

    /// `amp * cos(2π a t / T + phi)`.
    pub fn cosine(a: i64, amp: f64, phi: f64, period: f64) -> Self {
        let coeffs = if a == 0 {
            vec![(0, C64::new(amp * phi.cos(), 0.0))]
        } else {
            vec![(a, C64::from_polar(amp / 2.0, phi)), (-a, C64::from_polar(amp / 2.0, -phi))]
        };
        Self::new(period, coeffs, true).expect("cosine is real-valued")
    }

    /// Real-valued series from coefficients given for `m >= 0`; negative indices are mirrored.
    pub fn from_nonnegative<I>(period: f64, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, C64)>,
    {
        let mut all = Vec::new();
        for (m, c) in coeffs {
            if m < 0 {
                return Err(Error::Invalid("expected non-negative frequency".into()));
            }
            if m == 0 {
                all.push((0, C64::new(c.re, 0.0)));
            } else {
                all.push((m, c));
                all.push((-m, c.conj()));
            }
        }
        Self::new(period, all, true)
    }

    pub fn from_entries(period: f64, entries: &[ScalarCoeffJson], real_valued: bool) -> Result<Self> {
        Self::new(period, entries.iter().map(|e| (e.m, C64::new(e.re, e.im))), real_valued)
    }

    pub fn to_entries(&self) -> Vec<ScalarCoeffJson> {
        self.coeffs.iter().map(|(&m, c)| ScalarCoeffJson { m, re: c.re, im: c.im }).collect()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn coeff(&self, m: i64) -> C64 {
        self.coeffs.get(&m).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &C64)> {
        self.coeffs.iter()
    }

    pub fn bandwidth(&self) -> i64 {
        self.coeffs.keys().map(|m| m.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn evaluate(&self, t: f64) -> C64 {
        self.coeffs.iter().map(|(&m, &c)| c * phase(m, t, self.period)).sum()
    }

    pub fn differentiate(&self) -> Self {
        let w = 2.0 * PI / self.period;
        let coeffs = self.coeffs.iter().filter(|(&m, _)| m != 0).map(|(&m, &c)| (m, c * C64::new(0.0, w * m as f64)));
        let mut out = Self { period: self.period, real_valued: self.real_valued, coeffs: coeffs.collect() };
        out.canonicalize();
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out.canonicalize();
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if !same_period(self.period, other.period) {
            return Err(Error::PeriodMismatch { a: self.period, b: other.period });
        }
        let mut coeffs: BTreeMap<i64, C64> = BTreeMap::new();
        for (&m, &a) in &self.coeffs {
            for (&n, &b) in &other.coeffs {
                *coeffs.entry(m + n).or_insert(C64::new(0.0, 0.0)) += a * b;
            }
        }
        let mut out = Self { period: self.period, real_valued: self.real_valued && other.real_valued, coeffs };
        out.canonicalize();
        Ok(out)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        if !same_period(self.period, other.period) {
            return Err(Error::PeriodMismatch { a: self.period, b: other.period });
        }
        let mut out = self.clone();
        out.real_valued = self.real_valued && other.real_valued;
        for (&m, &c) in &other.coeffs {
            *out.coeffs.entry(m).or_insert(C64::new(0.0, 0.0)) += c * sign;
        }
        out.canonicalize();
        Ok(out)
    }

    fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let scale = self.coeffs.values().fold(1.0f64, |a, c| a.max(c.norm()));
        self.coeffs.iter().all(|(&m, c)| (c - self.coeff(-m).conj()).norm() <= tol * scale)
    }

    fn canonicalize(&mut self) {
        let top = self.coeffs.values().fold(0.0f64, |a, c| a.max(c.norm()));
        let floor = DROP_RELATIVE * top;
        self.coeffs.retain(|_, c| c.norm() > 0.0 && c.norm() >= floor);
    }
}
