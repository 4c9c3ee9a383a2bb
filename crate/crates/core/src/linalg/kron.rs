//! Kronecker products and the rearrangement that turns them into rank-1 matrices.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Default upper bound on the number of entries a materialized Kronecker
/// product may have (2^25 doubles, 256 MiB).
pub const DEFAULT_KRON_CAP: usize = 1 << 25;

/// `A ⊗ B` with `(A⊗B)[i·p+k, j·q+l] = A[i,j]·B[k,l]` for `B` of shape `p x q`.
///
/// With row-major `vec`, `vec(B X C^T) = (B ⊗ C) vec(X)`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    kron_with_cap(a, b, DEFAULT_KRON_CAP)
}

pub fn kron_with_cap(a: &DenseMatrix, b: &DenseMatrix, cap: usize) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let rows = m.checked_mul(p);
    let cols = n.checked_mul(q);
    let requested = rows.zip(cols).and_then(|(r, c)| r.checked_mul(c));
    let requested = match requested {
        Some(x) if x <= cap => x,
        Some(x) => return Err(Error::SizeCap { requested: x, cap }),
        None => {
            return Err(Error::SizeCap {
                requested: usize::MAX,
                cap,
            })
        }
    };
    let (rows, cols) = (m * p, n * q);
    let mut data = vec![0.0; requested];
    for i in 0..m {
        for j in 0..n {
            let aij = a.get(i, j);
            if aij == 0.0 {
                continue;
            }
            for k in 0..p {
                let dst = (i * p + k) * cols + j * q;
                let src = b.row(k);
                for (d, &s) in data[dst..dst + q].iter_mut().zip(src) {
                    *d = aij * s;
                }
            }
        }
    }
    DenseMatrix::new(rows, cols, data)
}

/// Van Loan rearrangement of an `m1·m2 x n1·n2` matrix into `m1·n1 x m2·n2`.
///
/// Row `i·n1 + j` of the output is the row-major `vec` of block `(i, j)` of `a`
/// (blocks are `m2 x n2`), so `rearrange(B ⊗ C) = vec(B) vec(C)^T`.
pub fn rearrange(
    a: &DenseMatrix,
    m1: usize,
    n1: usize,
    m2: usize,
    n2: usize,
) -> Result<DenseMatrix> {
    if a.shape() != (m1 * m2, n1 * n2) {
        return Err(Error::InvalidShape(format!(
            "rearrange expects {}x{}, got {}x{}",
            m1 * m2,
            n1 * n2,
            a.rows(),
            a.cols()
        )));
    }
    let out_cols = m2 * n2;
    let mut data = vec![0.0; m1 * n1 * out_cols];
    for i in 0..m1 {
        for j in 0..n1 {
            let dst_row = (i * n1 + j) * out_cols;
            for k in 0..m2 {
                let src = &a.row(i * m2 + k)[j * n2..(j + 1) * n2];
                data[dst_row + k * n2..dst_row + (k + 1) * n2].copy_from_slice(src);
            }
        }
    }
    DenseMatrix::new(m1 * n1, out_cols, data)
}

/// Inverse of [`rearrange`]: maps an `m1·n1 x m2·n2` matrix back to `m1·m2 x n1·n2`.
pub fn unrearrange(
    r: &DenseMatrix,
    m1: usize,
    n1: usize,
    m2: usize,
    n2: usize,
) -> Result<DenseMatrix> {
    if r.shape() != (m1 * n1, m2 * n2) {
        return Err(Error::InvalidShape(format!(
            "unrearrange expects {}x{}, got {}x{}",
            m1 * n1,
            m2 * n2,
            r.rows(),
            r.cols()
        )));
    }
    let cols = n1 * n2;
    let mut data = vec![0.0; m1 * m2 * cols];
    for i in 0..m1 {
        for j in 0..n1 {
            let src_row = r.row(i * n1 + j);
            for k in 0..m2 {
                let dst = (i * m2 + k) * cols + j * n2;
                data[dst..dst + n2].copy_from_slice(&src_row[k * n2..(k + 1) * n2]);
            }
        }
    }
    DenseMatrix::new(m1 * m2, cols, data)
}

/// `⟨F, L ⊗ R⟩` without materializing the product.
pub fn kron_inner(f: &DenseMatrix, l: &DenseMatrix, r: &DenseMatrix) -> Result<f64> {
    let (m1, n1) = l.shape();
    let (m2, n2) = r.shape();
    if f.shape() != (m1 * m2, n1 * n2) {
        return Err(Error::DimensionMismatch {
            op: "kron_inner",
            left: f.shape(),
            right: (m1 * m2, n1 * n2),
        });
    }
    let mut total = 0.0;
    for i in 0..m1 {
        for j in 0..n1 {
            let lij = l.get(i, j);
            let mut block = 0.0;
            for k in 0..m2 {
                let frow = &f.row(i * m2 + k)[j * n2..(j + 1) * n2];
                block += super::matrix::dot(frow, r.row(k));
            }
            total += lij * block;
        }
    }
    Ok(total)
}

/// `‖F − L ⊗ R‖_F` without materializing the product.
pub fn kron_residual(f: &DenseMatrix, l: &DenseMatrix, r: &DenseMatrix) -> Result<f64> {
    let (m1, n1) = l.shape();
    let (m2, n2) = r.shape();
    if f.shape() != (m1 * m2, n1 * n2) {
        return Err(Error::DimensionMismatch {
            op: "kron_residual",
            left: f.shape(),
            right: (m1 * m2, n1 * n2),
        });
    }
    let mut total = 0.0;
    for i in 0..m1 {
        for k in 0..m2 {
            let frow = f.row(i * m2 + k);
            let rrow = r.row(k);
            for j in 0..n1 {
                let lij = l.get(i, j);
                for l_ in 0..n2 {
                    let d = frow[j * n2 + l_] - lij * rrow[l_];
                    total += d * d;
                }
            }
        }
    }
    Ok(total.sqrt())
}
