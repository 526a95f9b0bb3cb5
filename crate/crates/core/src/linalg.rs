//! Dense Cholesky factorization with a bounded diagonal-jitter ladder.
//!
//! Matrices are square, row-major `Vec<f64>` buffers.

use alloc::vec::Vec;


// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Relative diagonal jitter tried in order until the factorization succeeds.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

const PANEL: usize = 64;

/// Lower-triangular L with L·Lᵀ = Σ + jitter·I.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    lower: Vec<f64>,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major factor; entries above the diagonal are zero.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Absolute jitter added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// ‖L·Lᵀ − Σ‖_F / ‖Σ‖_F against the un-jittered `cov`.
    pub fn reconstruction_error(&self, cov: &[f64]) -> f64 {
        let n = self.n;
        let mut prod = alloc::vec![0.0; n * n];
        if n > 0 {
            // SAFETY: both operands are n×n buffers of the stated strides.
            unsafe {
                matrixmultiply::dgemm(
                    n,
                    n,
                    n,
                    1.0,
                    self.lower.as_ptr(),
                    n as isize,
                    1,
                    self.lower.as_ptr(),
                    1,
                    n as isize,
                    0.0,
                    prod.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (p, c) in prod.iter().zip(cov) {
            num += (p - c) * (p - c);
            den += c * c;
        }
        if den == 0.0 {
            return num.sqrt();
        }
        (num / den).sqrt()
    }
}

/// Factorizes `cov` (n × n), escalating through [`JITTER_LADDER`] relative to the largest
/// diagonal entry. Fails with the index of the leading minor that broke at the last rung.
pub fn cholesky_with_jitter(cov: &[f64], n: usize) -> Result<CholeskyFactor> {
    assert_eq!(cov.len(), n * n, "covariance buffer is not n×n");
    let max_diag = (0..n).map(|i| cov[i * n + i]).fold(0.0, f64::max);
    let mut failed = 0;
    for &rel in &JITTER_LADDER {
        let jitter = rel * max_diag;
        let mut work = cov.to_vec();
        for i in 0..n {
            work[i * n + i] += jitter;
        }
        match factor_in_place(&mut work, n) {
            Ok(()) => {
                return Ok(CholeskyFactor {
                    n,
                    lower: work,
                    jitter,
                })
            }
            Err(minor) => failed = minor,
        }
    }
    Err(Error::SingularCovariance {
        minor: failed,
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * max_diag,
    })
}

/// Right-looking blocked Cholesky. On failure returns the offending pivot index.
fn factor_in_place(a: &mut [f64], n: usize) -> core::result::Result<(), usize> {
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + PANEL).min(n);

        // Diagonal block and the panel below it share the same column recurrence.
        for j in k0..k1 {
            let row_j = j * n;
            let mut s = a[row_j + j];
            for p in k0..j {
                s -= a[row_j + p] * a[row_j + p];
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(j);
            }
            let d = s.sqrt();
            a[row_j + j] = d;
            for i in j + 1..n {
                let row_i = i * n;
                let mut v = a[row_i + j];
                for p in k0..j {
                    v -= a[row_i + p] * a[row_j + p];
                }
                a[row_i + j] = v / d;
            }
        }

        // Trailing update A22 -= L21·L21ᵀ, lower triangle only, one row band at a time.
        let width = k1 - k0;
        let base = a.as_mut_ptr();
        let mut r0 = k1;
        while r0 < n {
            let r1 = (r0 + PANEL).min(n);
            // SAFETY: reads columns k0..k1 and writes columns k1..r1 of rows r0..r1;
            // the regions are disjoint and inside the n×n buffer.
            unsafe {
                matrixmultiply::dgemm(
                    r1 - r0,
                    width,
                    r1 - k1,
                    -1.0,
                    base.add(r0 * n + k0),
                    n as isize,
                    1,
                    base.add(k1 * n + k0),
                    1,
                    n as isize,
                    1.0,
                    base.add(r0 * n + k1),
                    n as isize,
                    1,
                );
            }
            r0 = r1;
        }
        k0 = k1;
    }
    for i in 0..n {
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Smallest and largest eigenvalue of a small symmetric matrix by cyclic Jacobi sweeps.
#[cfg(test)]
pub(crate) fn symmetric_eigen_extremes(a: &[f64], n: usize) -> (f64, f64) {
    let mut m = a.to_vec();
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let diag = (0..n).map(|i| m[i * n + i]);
    let lo = diag.clone().fold(f64::INFINITY, f64::min);
    let hi = diag.fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}
