//! Reference Floquet exponents by direct integration of the fundamental solution.

mod eigen;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{fold_value, CoefficientFamily};
use crate::fourier::{C64, CMat};

pub use eigen::eigenvalues;

pub const DEFAULT_STEPS: usize = 4096;
const MIN_STEPS: usize = 64;
const DEFECT_SEPARATION: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Monodromy {
    pub x_at_t: CMat,
    pub steps: usize,
    /// `‖X_h − X_{2h}‖ / 15` in the Frobenius norm.
    pub richardson_error_estimate: f64,
}

fn rk4(samples: &[CMat], stride: usize, h: f64) -> CMat {
    let n = samples[0].nrows();
    let mut x = CMat::identity(n, n);
    let steps = (samples.len() - 1) / (2 * stride);
    let half = C64::new(h / 2.0, 0.0);
    let full = C64::new(h, 0.0);
    let sixth = C64::new(h / 6.0, 0.0);
    for s in 0..steps {
        let a0 = &samples[2 * stride * s];
        let am = &samples[2 * stride * s + stride];
        let a1 = &samples[2 * stride * (s + 1)];
        let k1 = a0 * &x;
        let k2 = am * (&x + &k1 * half);
        let k3 = am * (&x + &k2 * half);
        let k4 = a1 * (&x + &k3 * full);
        x += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * sixth;
    }
    x
}

/// Classical RK4 for `X' = A(t) X`, `X(0) = I` over one period.
pub fn integrate_monodromy<F>(a: F, period: f64, steps: usize) -> Result<Monodromy>
where
    F: Fn(f64) -> CMat,
{
    if steps < MIN_STEPS || steps % 2 != 0 {
        return Err(Error::StepCountTooSmall(steps));
    }
    let h = period / steps as f64;
    let samples: Vec<CMat> = (0..=2 * steps).map(|k| a(k as f64 * h / 2.0)).collect();
    let fine = rk4(&samples, 1, h);
    let coarse = rk4(&samples, 2, 2.0 * h);
    let richardson_error_estimate = (&fine - coarse).norm() / 15.0;
    Ok(Monodromy { x_at_t: fine, steps, richardson_error_estimate })
}

pub fn integrate_family(family: &CoefficientFamily, eps: f64, steps: usize) -> Result<Monodromy> {
    integrate_monodromy(|t| family.evaluate(eps, t), family.period(), steps)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleExponents {
    /// Imaginary parts lie in `[-π/T, π/T)`.
    pub values: Vec<C64>,
    /// Two monodromy eigenvalues closer than the separation threshold.
    pub near_defective: bool,
}

/// `f = log|ξ|/T + i·arg(ξ)/T` with `arg ∈ [-π, π)` for every eigenvalue `ξ` of `X(T)`.
pub fn exponents_from_monodromy(m: &Monodromy, period: f64) -> Result<OracleExponents> {
    let xi = eigenvalues(&m.x_at_t)?;
    let values = xi.iter().map(|z| exponent_of_multiplier(*z, period)).collect();
    let scale = xi.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let mut near_defective = false;
    for i in 0..xi.len() {
        for j in i + 1..xi.len() {
            if (xi[i] - xi[j]).norm() < DEFECT_SEPARATION * scale {
                near_defective = true;
            }
        }
    }
    Ok(OracleExponents { values, near_defective })
}

pub fn exponent_of_multiplier(xi: C64, period: f64) -> C64 {
    let raw = C64::new(xi.norm().ln() / period, xi.im.atan2(xi.re) / period);
    fold_value(raw, period, 0.0).0
}

/// `|Re f − Re g| + min_k |Im f − Im g + k·2π/T|`, `k ∈ {−1, 0, 1}`, after folding both.
pub fn cylinder_distance(f: C64, g: C64, period: f64) -> f64 {
    let w = 2.0 * PI / period;
    let (f, _) = fold_value(f, period, 0.0);
    let (g, _) = fold_value(g, period, 0.0);
    let d = f.im - g.im;
    let wrap = [-1.0, 0.0, 1.0].iter().map(|k| (d + k * w).abs()).fold(f64::INFINITY, f64::min);
    (f.re - g.re).abs() + wrap
}

/// Minimum-cost perfect matching on a square cost matrix; `result[row] = column`.
pub fn min_cost_matching(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // Potentials formulation of the Hungarian method, 1-based with a dummy column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=n {
        out[p[j] - 1] = j - 1;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentMatch {
    /// `pairing[i]` is the oracle index matched to asymptotic exponent `i`.
    pub pairing: Vec<usize>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn compare_exponents(asym: &[C64], orc: &OracleExponents, period: f64) -> Result<ExponentMatch> {
    if asym.len() != orc.values.len() {
        return Err(Error::DimensionMismatch { expected: orc.values.len(), found: asym.len() });
    }
    let cost: Vec<Vec<f64>> = asym
        .iter()
        .map(|a| orc.values.iter().map(|o| cylinder_distance(*a, *o, period)).collect())
        .collect();
    let pairing = min_cost_matching(&cost);
    let residuals: Vec<f64> = pairing.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ExponentMatch { pairing, residuals, max_residual })
}

/// Integrate, take exponents and match them against `asym` in one call.
pub fn oracle_residual(family: &CoefficientFamily, eps: f64, asym: &[C64], steps: usize) -> Result<ExponentMatch> {
    let m = integrate_family(family, eps, steps)?;
    let orc = exponents_from_monodromy(&m, family.period())?;
    compare_exponents(asym, &orc, family.period())
}
