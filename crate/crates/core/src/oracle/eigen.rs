//! Dense complex eigenvalues: Householder reduction to upper Hessenberg form
//! followed by single-shift QR sweeps with Givens rotations.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ITERATIONS_PER_EIGENVALUE: usize = 30;

fn hessenberg(h: &mut DMatrix<Complex64>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let norm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0 == ZERO { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= vn;
        }
        // H <- (I - 2vv*) H
        for j in k..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * h[(k + 1 + t, j)]).sum();
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= *vi * dot * 2.0;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| h[(i, k + 1 + t)] * vi).sum();
            for (t, vi) in v.iter().enumerate() {
                h[(i, k + 1 + t)] -= dot * vi.conj() * 2.0;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// `G = [[c, s], [-s̄, c]]` with `G (a, b)ᵀ = (r, 0)ᵀ`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        (1.0, ZERO)
    } else if a == ZERO {
        (0.0, Complex64::new(1.0, 0.0))
    } else {
        (a.norm() / r, a / a.norm() * b.conj() / r)
    }
}

fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (m1, m2) = (mid + disc, mid - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// All eigenvalues, sorted by `(re, im)`.
pub fn eigenvalues_dense(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    hessenberg(&mut h);

    let mut eig = vec![ZERO; n];
    let budget = ITERATIONS_PER_EIGENVALUE * n.max(1);
    let (mut total, mut its) = (0usize, 0usize);
    let mut hi = n - 1;
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let scale = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if h[(l, l - 1)].norm() <= f64::EPSILON * scale {
                h[(l, l - 1)] = ZERO;
                break;
            }
            if h[(l, l - 1)] == ZERO {
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        if total >= budget {
            return Err(Error::NoConvergence { iterations: total });
        }
        total += 1;
        its += 1;

        let mu = if its % 10 == 0 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rot.push((c, s));
            for j in k..=hi {
                let (x, y) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
        }
        for (t, &(c, s)) in rot.iter().enumerate() {
            let k = l + t;
            for i in l..=(k + 1).min(hi) {
                let (x, y) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = x * c + s.conj() * y;
                h[(i, k + 1)] = -s * x + y * c;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}
