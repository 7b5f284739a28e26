//! Eigenvalue asymptotics of `F_0 + εF_1 + ε²F_2` and the first-order exceptional-point test.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::expansion::{CoefficientFamily, FloquetExpansion, FoldingResult};
use crate::fourier::{max_abs, C64, CMat};
use crate::oracle::{cylinder_distance, eigenvalues, min_cost_matching};

const EP_RTOL: f64 = 1e-10;
const PAIRING_TOL: f64 = 1e-8;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub class_indices: Vec<usize>,
    pub h0: CMat,
    pub h1: CMat,
    pub h2: CMat,
    /// `G_nn = 1 / ((F_0)_ii − (F_0)_nn)` outside the class, zero inside.
    pub g: Vec<C64>,
}

impl EffectiveHamiltonian {
    pub fn dim(&self) -> usize {
        self.class_indices.len()
    }

    pub fn matrix(&self, eps: f64) -> CMat {
        let e = C64::new(eps, 0.0);
        &self.h0 + &self.h1 * e + &self.h2 * (e * e)
    }
}

/// Restriction of `F_0 + εF_1 + ε²(F_1 G F_1 + F_2)` to a multiplicity class of `F_0`.
pub fn effective_hamiltonian(f: &[CMat], class: &[usize], tol: f64) -> Result<EffectiveHamiltonian> {
    let f0 = f.first().ok_or_else(|| Error::Invalid("empty exponent matrix list".into()))?;
    let n = f0.nrows();
    let mut idx = class.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if idx.is_empty() || idx.iter().any(|&i| i >= n) {
        return Err(Error::NotAClass);
    }
    let lead = f0[(idx[0], idx[0])];
    for i in 0..n {
        let inside = idx.contains(&i);
        let close = (f0[(i, i)] - lead).norm() < tol;
        if inside != close {
            return Err(Error::NotAClass);
        }
        for j in 0..n {
            if i != j && f0[(i, j)] != zero() {
                return Err(Error::NotDiagonal);
            }
        }
    }
    let zero_m = CMat::zeros(n, n);
    let f1 = f.get(1).unwrap_or(&zero_m);
    let f2 = f.get(2).unwrap_or(&zero_m);
    let g: Vec<C64> = (0..n).map(|j| if idx.contains(&j) { zero() } else { C64::new(1.0, 0.0) / (lead - f0[(j, j)]) }).collect();

    let d = idx.len();
    let restrict = |m: &CMat| CMat::from_fn(d, d, |a, b| m[(idx[a], idx[b])]);
    let mut h2 = restrict(f2);
    for a in 0..d {
        for b in 0..d {
            let mut s = zero();
            for (j, gj) in g.iter().enumerate() {
                if *gj != zero() {
                    s += f1[(idx[a], j)] * gj * f1[(j, idx[b])];
                }
            }
            h2[(a, b)] += s;
        }
    }
    Ok(EffectiveHamiltonian { class_indices: idx.clone(), h0: restrict(f0), h1: restrict(f1), h2, g })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchNote {
    Simple,
    /// `+` branch of the principal square root.
    PlusRoot,
    MinusRoot,
    /// `h1 = 0`: the split starts at second order.
    Quadratic,
    /// Class dimension above two; numerical eigenvalues.
    Numerical,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentAsymptotics {
    pub index: usize,
    pub f0: C64,
    pub lambda1: C64,
    pub lambda2: Option<C64>,
    pub branch_note: BranchNote,
}

fn split_2x2(m: &CMat) -> (C64, C64) {
    let mean = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let half = (m[(0, 0)] - m[(1, 1)]) * 0.5;
    let root = (half * half + m[(0, 1)] * m[(1, 0)]).sqrt();
    (mean + root, mean - root)
}

pub fn perturb_exponents(h: &EffectiveHamiltonian) -> Result<Vec<ExponentAsymptotics>> {
    let idx = &h.class_indices;
    let f0 = h.h0[(0, 0)];
    let linear = max_abs(&h.h1) > 0.0;
    let entry = |i: usize, l1: C64, l2: Option<C64>, note| ExponentAsymptotics {
        index: idx[i],
        f0,
        lambda1: l1,
        lambda2: l2,
        branch_note: note,
    };
    let out = match h.dim() {
        1 => vec![entry(0, h.h1[(0, 0)], Some(h.h2[(0, 0)]), BranchNote::Simple)],
        2 if linear => {
            let (p, m) = split_2x2(&h.h1);
            vec![entry(0, p, None, BranchNote::PlusRoot), entry(1, m, None, BranchNote::MinusRoot)]
        }
        2 => {
            let (p, m) = split_2x2(&h.h2);
            vec![entry(0, zero(), Some(p), BranchNote::Quadratic), entry(1, zero(), Some(m), BranchNote::Quadratic)]
        }
        _ if linear => eigenvalues(&h.h1)?
            .into_iter()
            .enumerate()
            .map(|(i, l)| entry(i, l, None, BranchNote::Numerical))
            .collect(),
        _ => eigenvalues(&h.h2)?
            .into_iter()
            .enumerate()
            .map(|(i, l)| entry(i, zero(), Some(l), BranchNote::Numerical))
            .collect(),
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResonantFrequencies {
    pub values: BTreeSet<i64>,
    /// Set when two class members share a folding number.
    pub contains_zero: bool,
}

pub fn resonant_frequencies(folding: &FoldingResult, class: &[usize]) -> Result<ResonantFrequencies> {
    if class.len() < 2 {
        return Err(Error::NotMultiple);
    }
    if !folding.is_class(class) {
        return Err(Error::NotAClass);
    }
    let n = &folding.folding_numbers;
    let mut values = BTreeSet::new();
    for &i in class {
        for &j in class {
            if i != j {
                values.insert(n[j] - n[i]);
            }
        }
    }
    let contains_zero = values.contains(&0);
    Ok(ResonantFrequencies { values, contains_zero })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Vanishing {
    #[serde(rename = "ij")]
    Ij,
    #[serde(rename = "ji")]
    Ji,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpReport {
    pub pair: (usize, usize),
    /// `n_i − n_j`.
    pub n: i64,
    pub verdict: bool,
    pub vanishing: Option<Vanishing>,
    /// `(A_1^{(n_i−n_j)})_ij` and `(A_1^{(n_j−n_i)})_ji`.
    pub witnesses: [C64; 2],
    pub tol: f64,
}

impl EpReport {
    pub fn to_json(&self) -> serde_json::Value {
        let [a, b] = self.witnesses;
        json!({
            "pair": [self.pair.0, self.pair.1],
            "n": self.n,
            "verdict": self.verdict,
            "vanishing": self.vanishing,
            "witnesses": {
                "ij": { "re": a.re, "im": a.im },
                "ji": { "re": b.re, "im": b.im },
            },
        })
    }
}

pub fn default_ep_tol(family: &CoefficientFamily) -> f64 {
    EP_RTOL * family.perturbation(1).map_or(0.0, |a| a.max_abs())
}

pub fn detect_first_order_ep(family: &CoefficientFamily, folding: &FoldingResult) -> Result<Vec<EpReport>> {
    detect_first_order_ep_with_tol(family, folding, default_ep_tol(family))
}

/// One report per unordered pair inside each multiple class; the verdict is the exclusive-or
/// of the two resonant entries of `A_1` vanishing.
pub fn detect_first_order_ep_with_tol(
    family: &CoefficientFamily,
    folding: &FoldingResult,
    tol: f64,
) -> Result<Vec<EpReport>> {
    let a1 = family.perturbation(1).ok_or(Error::OrderUnavailable { requested: 1, available: 0 })?;
    if let Some(c) = a1.coeff(0) {
        if max_abs(c) > tol {
            return Err(Error::ConstantModulationPresent);
        }
    }
    let n = &folding.folding_numbers;
    let mut out = Vec::new();
    for class in folding.multiple_classes() {
        for (a, &i) in class.iter().enumerate() {
            for &j in &class[a + 1..] {
                let wij = a1.entry(n[i] - n[j], i, j);
                let wji = a1.entry(n[j] - n[i], j, i);
                let zi = wij.norm() <= tol;
                let zj = wji.norm() <= tol;
                let vanishing = match (zi, zj) {
                    (true, false) => Some(Vanishing::Ij),
                    (false, true) => Some(Vanishing::Ji),
                    _ => None,
                };
                out.push(EpReport {
                    pair: (i, j),
                    n: n[i] - n[j],
                    verdict: zi != zj,
                    vanishing,
                    witnesses: [wij, wji],
                    tol,
                });
            }
        }
    }
    Ok(out)
}

/// Eigenvalues of the truncated exponent matrix `F_0 + εF_1 + …`.
pub fn exponents_at(expansion: &FloquetExpansion, eps: f64) -> Result<Vec<C64>> {
    eigenvalues(&expansion.exponent_matrix(eps))
}

/// Perturbation data for every exponent, ordered by index.
pub fn all_asymptotics(expansion: &FloquetExpansion) -> Result<Vec<ExponentAsymptotics>> {
    let mut out = Vec::new();
    for class in &expansion.folding.classes {
        let h = effective_hamiltonian(&expansion.f, class, expansion.folding.tol)?;
        out.extend(perturb_exponents(&h)?);
    }
    out.sort_by_key(|a| a.index);
    Ok(out)
}

/// True iff the multiset is invariant under complex conjugation modulo `2πi/T`.
pub fn conjugate_pairing_check(exponents: &[C64], period: f64) -> bool {
    conjugate_pairing_residual(exponents, period) <= PAIRING_TOL * exponents.iter().fold(1.0f64, |a, z| a.max(z.norm()))
}

pub fn conjugate_pairing_residual(exponents: &[C64], period: f64) -> f64 {
    if exponents.is_empty() {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = exponents
        .iter()
        .map(|f| exponents.iter().map(|g| cylinder_distance(f.conj(), *g, period)).collect())
        .collect();
    let assign = min_cost_matching(&cost);
    assign.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vanishing_corrections_give_vanishing_h() {
        let f0 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]));
        let h = effective_hamiltonian(&[f0], &[0, 1], 1e-9).unwrap();
        assert_eq!(max_abs(&h.h1), 0.0);
        assert_eq!(max_abs(&h.h2), 0.0);
    }

    #[test]
    fn simple_class_second_order() {
        let f0 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.1, 0.3), c(-0.2, -0.1)]));
        let f1 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.4, 0.2), c(-0.3, 0.5), c(0.0, 0.0)]);
        let f2 = CMat::from_row_slice(2, 2, &[c(0.7, -0.1), c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.2)]);
        let h = effective_hamiltonian(&[f0.clone(), f1.clone(), f2.clone()], &[0], 1e-9).unwrap();
        let expect = f1[(0, 1)] * f1[(1, 0)] / (f0[(0, 0)] - f0[(1, 1)]) + f2[(0, 0)];
        assert!((h.h2[(0, 0)] - expect).norm() < 1e-15);
        let e = perturb_exponents(&h).unwrap();
        assert_eq!(e[0].lambda1, c(0.0, 0.0));
        assert!((e[0].lambda2.unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn off_diagonal_negative_product_is_imaginary_pair() {
        let h = EffectiveHamiltonian {
            class_indices: vec![0, 1],
            h0: CMat::zeros(2, 2),
            h1: CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(-0.5, 0.0), c(0.0, 0.0)]),
            h2: CMat::zeros(2, 2),
            g: vec![c(0.0, 0.0); 2],
        };
        let e = perturb_exponents(&h).unwrap();
        assert!((e[0].lambda1 - c(0.0, 1.0)).norm() < 1e-15);
        assert!((e[1].lambda1 - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_h1_means_zero_lambda1() {
        let h = EffectiveHamiltonian {
            class_indices: vec![2, 5],
            h0: CMat::identity(2, 2),
            h1: CMat::zeros(2, 2),
            h2: CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]),
            g: vec![],
        };
        let e = perturb_exponents(&h).unwrap();
        assert!(e.iter().all(|x| x.lambda1 == c(0.0, 0.0) && x.branch_note == BranchNote::Quadratic));
    }

    #[test]
    fn pairing_examples() {
        let period = 2.0 * PI / 0.75;
        assert!(conjugate_pairing_check(&[c(-0.15, 0.22), c(-0.15, -0.22)], period));
        assert!(!conjugate_pairing_check(&[c(0.1, 0.3)], period));
        let edge = -PI / period;
        assert!(conjugate_pairing_check(&[c(0.2, edge)], period));
    }

    #[test]
    fn equal_folding_numbers_give_zero_frequency() {
        let f = FoldingResult::with_numbers(&[c(0.0, 0.1), c(0.0, 0.1)], 1.0, vec![0, 0], 1e-9).unwrap();
        let r = resonant_frequencies(&f, &[0, 1]).unwrap();
        assert!(r.contains_zero);
        assert_eq!(r.values.into_iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(resonant_frequencies(&f, &[0]).unwrap_err(), Error::NotMultiple);
    }
}
