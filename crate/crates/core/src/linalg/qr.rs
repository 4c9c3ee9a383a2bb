//! Householder QR with a nonnegative-diagonal sign convention.

use super::matrix::{norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Thin QR factorization `A = Q R` of an `m x n` matrix with `m >= n`.
///
/// `Q` is `m x n` with orthonormal columns and `R` is `n x n` upper triangular
/// with `R[k,k] >= 0`. Rank-deficient input still yields an orthonormal `Q`;
/// the affected diagonal entries of `R` are zero.
pub fn qr(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::InvalidShape(format!(
            "qr requires rows >= cols, got {m}x{n}"
        )));
    }
    let mut work = a.clone();
    // Householder vectors, v_k lives in rows k..m.
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);

    for k in 0..n {
        let x: Vec<f64> = (k..m).map(|i| work.get(i, k)).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm2(&v);
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        for vi in &mut v {
            *vi /= vnorm;
        }
        // work[k.., k..] -= 2 v (v^T work[k.., k..])
        for j in k..n {
            let mut s = 0.0;
            for (t, vi) in v.iter().enumerate() {
                s += vi * work.get(k + t, j);
            }
            s *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                let cur = work.get(k + t, j);
                work.set(k + t, j, cur - s * vi);
            }
        }
        reflectors.push(Some(v));
    }

    let mut r = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r.set(i, j, work.get(i, j));
        }
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I_m.
    let mut q = DenseMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for k in (0..n).rev() {
        let Some(v) = &reflectors[k] else { continue };
        for j in 0..n {
            let mut s = 0.0;
            for (t, vi) in v.iter().enumerate() {
                s += vi * q.get(k + t, j);
            }
            if s == 0.0 {
                continue;
            }
            s *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                let cur = q.get(k + t, j);
                q.set(k + t, j, cur - s * vi);
            }
        }
    }

    for k in 0..n {
        if r.get(k, k) < 0.0 {
            for j in k..n {
                let v = r.get(k, j);
                r.set(k, j, -v);
            }
            for i in 0..m {
                let v = q.get(i, k);
                q.set(i, k, -v);
            }
        }
    }
    Ok((q, r))
}
