//! Damped harmonic oscillator (unit mass) with cosine modulation of damping and spring constant,
//! written in the eigenbasis of the unmodulated system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{fold_diagonal, CoefficientFamily};
use crate::fourier::{FourierMatrix, C64, CMat};

const LEMMA_TOL: f64 = 1e-9;

/// Sign convention for the `(2,1)` entry of the spring-modulation block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpringCoupling {
    /// `+(c − α)²/(4k)`, as in the closed-form eigenbasis display.
    #[default]
    Displayed,
    /// `−(c − α)²/(4k)`, the exact similarity transform of `[[0, 0], [−1, 0]]`.
    Physical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub c: f64,
    pub k: f64,
    /// Frequency index of the damping modulation `cos(2π a t / T)`.
    pub a: i64,
    /// Frequency index of the spring modulation `cos(2π b t / T + phi)`.
    pub b: i64,
    pub phi: f64,
    pub period: f64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl OscillatorParams {
    pub fn with_omega(c: f64, k: f64, a: i64, b: i64, phi: f64, omega: f64) -> Self {
        Self { c, k, a, b, phi, period: 2.0 * PI / omega }
    }

    /// Principal square root of `c² − 4k`.
    pub fn alpha(&self) -> C64 {
        C64::new(self.c * self.c - 4.0 * self.k, 0.0).sqrt()
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !(self.c >= 0.0) || !self.c.is_finite() || !self.k.is_finite() {
            return Err(Error::Invalid(format!("need c >= 0 and k > 0, got c = {}, k = {}", self.c, self.k)));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::Invalid(format!("period must be positive, got {}", self.period)));
        }
        if self.a < 0 || self.b < 0 {
            return Err(Error::Invalid("modulation indices must be non-negative".into()));
        }
        if gcd(self.a, self.b) != 1 {
            return Err(Error::Invalid(format!("gcd({}, {}) must be 1", self.a, self.b)));
        }
        if self.alpha().norm() == 0.0 {
            return Err(Error::DegenerateConstantSystem("c² = 4k".into()));
        }
        Ok(())
    }

    pub fn a0(&self) -> [C64; 2] {
        let al = self.alpha();
        let c = C64::new(self.c, 0.0);
        [-(c + al) / 2.0, -(c - al) / 2.0]
    }

    /// Matrix multiplying the damping modulation in the eigenbasis, halved per exponential.
    pub fn damping_block(&self) -> CMat {
        let r = C64::new(self.c, 0.0) / self.alpha();
        let one = C64::new(1.0, 0.0);
        let top = (-one - r) / 4.0;
        let bot = (-one + r) / 4.0;
        CMat::from_row_slice(2, 2, &[top, top, bot, bot])
    }

    /// Matrix multiplying the spring modulation in the eigenbasis, halved per exponential.
    pub fn spring_block(&self, coupling: SpringCoupling) -> CMat {
        let al = self.alpha();
        let c = C64::new(self.c, 0.0);
        let k4 = C64::new(4.0 * self.k, 0.0);
        let s = C64::new(1.0, 0.0) / (al * 2.0);
        let sign = match coupling {
            SpringCoupling::Displayed => 1.0,
            SpringCoupling::Physical => -1.0,
        };
        CMat::from_row_slice(
            2,
            2,
            &[s, s * (c + al) * (c + al) / k4, sign * s * (c - al) * (c - al) / k4, -s],
        )
    }
}

pub fn build_oscillator(p: &OscillatorParams) -> Result<CoefficientFamily> {
    build_oscillator_with(p, SpringCoupling::Displayed)
}

pub fn build_oscillator_with(p: &OscillatorParams, coupling: SpringCoupling) -> Result<CoefficientFamily> {
    p.validate()?;
    let z = p.damping_block();
    let kb = p.spring_block(coupling);
    let e = C64::from_polar(1.0, p.phi);
    let coeffs = vec![
        (-p.a, z.clone()),
        (p.a, z),
        (-p.b, &kb * e.conj()),
        (p.b, &kb * e),
    ];
    let a1 = FourierMatrix::from_coeffs(2, p.period, coeffs)?;
    CoefficientFamily::from_diagonal(p.a0().to_vec(), vec![a1], p.period)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscillatorEpVerdict {
    pub verdict: bool,
    /// Phases (mod 2π) that zero `(A_1^{(-a)})_{12}` and `(A_1^{(a)})_{21}` respectively.
    pub admissible_phases: [f64; 2],
    /// `n_1 − n_2` when the two constant-order exponents fold together.
    pub n: Option<i64>,
    pub reason: String,
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn phase_close(x: f64, y: f64) -> bool {
    wrap_phase(x - y).abs() <= LEMMA_TOL
}

/// Exceptional-point classification from the closed-form lemmas: never for `a ≠ b`; for
/// `a = b` only at `k = 1`, `c ∈ (0, 2)` with one of two phases.
pub fn classify_oscillator_ep(p: &OscillatorParams) -> OscillatorEpVerdict {
    let al = p.alpha();
    let c = C64::new(p.c, 0.0);
    let two_k = C64::new(2.0 * p.k, 0.0);
    let i = C64::new(0.0, 1.0);
    let phi1 = (i * (two_k / (al + c)).ln()).re;
    let phi2 = (-i * (two_k / (al - c)).ln()).re;
    let mut out = OscillatorEpVerdict {
        verdict: false,
        admissible_phases: [wrap_phase(phi1), wrap_phase(phi2)],
        n: None,
        reason: String::new(),
    };
    if p.validate().is_err() {
        out.reason = "invalid parameters".into();
        return out;
    }
    let f = fold_diagonal(&p.a0(), p.period, crate::expansion::default_fold_tol(&p.a0()));
    if f.same_class(0, 1) {
        out.n = Some(f.folding_numbers[0] - f.folding_numbers[1]);
    }
    if p.a != p.b {
        out.reason = "a != b".into();
        return out;
    }
    if (p.k - 1.0).abs() > LEMMA_TOL {
        out.reason = "k != 1".into();
        return out;
    }
    if !(p.c > 0.0 && p.c < 2.0) {
        out.reason = "c outside (0, 2)".into();
        return out;
    }
    // The lemma phases refer to n_1 − n_2 = −a; the opposite orientation mirrors them.
    let sign = match out.n {
        Some(n) if n == -p.a => 1.0,
        Some(n) if n == p.a => -1.0,
        _ => {
            out.reason = "exponents do not fold together at frequency a".into();
            return out;
        }
    };
    out.admissible_phases = [wrap_phase(sign * phi1), wrap_phase(sign * phi2)];
    if out.admissible_phases.iter().any(|&ph| phase_close(p.phi, ph)) {
        out.verdict = true;
        out.reason = "phase matches".into();
    } else {
        out.reason = "phase does not match".into();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a0_at_reference_point() {
        let p = OscillatorParams::with_omega(0.3, 0.3, 1, 1, 0.0, 0.75);
        let [a, b] = p.a0();
        assert!((a - C64::new(-0.15, -0.526783)).norm() < 1e-6);
        assert!((b - C64::new(-0.15, 0.526783)).norm() < 1e-6);
    }

    #[test]
    fn eigenbasis_blocks_reproduce_the_physical_modulation() {
        // V diagonalizes [[0,1],[-k,-c]]; with W = V·diag(1, (c+α)²/(4k)),
        // W^{-1} [[0,0],[-κ,-ζ]] W must equal κ·2K + ζ·2Z.
        let p = OscillatorParams::with_omega(0.7, 1.3, 1, 2, 0.0, 1.0);
        let [l1, l2] = p.a0();
        let one = C64::new(1.0, 0.0);
        let v = CMat::from_row_slice(2, 2, &[one, one, l1, l2]);
        let zeta = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), -one]);
        let kappa = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), -one, C64::new(0.0, 0.0)]);
        let al = p.alpha();
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![one, (al + p.c) * (al + p.c) / (4.0 * p.k)]));
        let w = &v * d;
        let wi = w.clone().try_inverse().unwrap();
        let z = &wi * zeta * &w;
        let k = &wi * kappa * &w;
        let two = C64::new(2.0, 0.0);
        assert!((z - p.damping_block() * two).norm() < 1e-12);
        assert!((&k - p.spring_block(SpringCoupling::Physical) * two).norm() < 1e-12);
        assert!((k - p.spring_block(SpringCoupling::Displayed) * two).norm() > 0.1);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            build_oscillator(&OscillatorParams::with_omega(4.0, 4.0, 1, 1, 0.0, 1.0)),
            Err(Error::DegenerateConstantSystem(_))
        ));
        assert!(build_oscillator(&OscillatorParams::with_omega(1.0, 1.0, 2, 4, 0.0, 1.0)).is_err());
        assert!(build_oscillator(&OscillatorParams::with_omega(1.0, 1.0, 1, 0, 0.0, 1.0)).is_ok());
    }

    #[test]
    fn lemma_phases_at_unit_spring() {
        let om = 3f64.sqrt();
        let p = OscillatorParams::with_omega(1.0, 1.0, 1, 1, PI / 3.0, om);
        let v = classify_oscillator_ep(&p);
        assert_eq!(v.n, Some(-1));
        assert!((v.admissible_phases[0] - PI / 3.0).abs() < 1e-12);
        assert!((v.admissible_phases[1] + 2.0 * PI / 3.0).abs() < 1e-12);
        assert!(v.verdict);
        let q = OscillatorParams { k: 2.0, ..p.clone() };
        assert!(!classify_oscillator_ep(&q).verdict);
        let r = OscillatorParams { a: 2, b: 3, ..p };
        assert!(!classify_oscillator_ep(&r).verdict);
    }
}
