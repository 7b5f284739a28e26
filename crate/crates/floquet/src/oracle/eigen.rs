//! Eigenvalues of small dense complex matrices: Householder reduction to Hessenberg form
//! followed by single-shift QR with Wilkinson shifts and deflation.

use crate::error::{Error, Result};
use crate::fourier::{C64, CMat};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

fn hessenberg(h: &mut CMat) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vn;
        }
        // H ← (I − 2vv*) H on rows k+1..n.
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (a, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + a, j)];
            }
            for (a, vi) in v.iter().enumerate() {
                h[(k + 1 + a, j)] -= vi * s * 2.0;
            }
        }
        // H ← H (I − 2vv*) on columns k+1..n.
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (a, vi) in v.iter().enumerate() {
                s += h[(i, k + 1 + a)] * vi;
            }
            for (a, vi) in v.iter().enumerate() {
                h[(i, k + 1 + a)] -= s * vi.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    (a.norm() / r, (a / a.norm()) * b.conj() / r)
}

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let root = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let (l1, l2) = (m + root, m - root);
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One shifted QR sweep on the active block `lo..=hi`.
fn qr_sweep(h: &mut CMat, lo: usize, hi: usize, mu: C64) {
    for i in lo..=hi {
        h[(i, i)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (off, &(c, s)) in rots.iter().enumerate() {
        let k = lo + off;
        for i in lo..=(k + 2).min(hi) {
            let p = h[(i, k)];
            let q = h[(i, k + 1)];
            h[(i, k)] = p * c + q * s.conj();
            h[(i, k + 1)] = -p * s + q * c;
        }
    }
    for i in lo..=hi {
        h[(i, i)] += mu;
    }
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Invalid("matrix has non-finite entries".into()));
    }
    let mut h = m.clone();
    hessenberg(&mut h);
    let scale = h.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let tiny = f64::MIN_POSITIVE.max(scale * f64::EPSILON * 1e-3);

    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut since_deflation = 0usize;
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= f64::EPSILON * diag || sub <= tiny {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iter += 1;
        since_deflation += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE * n {
            return Err(Error::Invalid("QR iteration did not converge".into()));
        }
        let mu = if since_deflation % 11 == 10 {
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0) * 0.75
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_sweep(&mut h, lo, hi, mu);
    }
    Ok(out)
}
