//! Discrete projector-splitting step for a low-rank approximation under an
//! additive update `F ← F + ΔF`.

use super::factors::{LowRankFactorization, Rank1Factorization};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, qr, DenseMatrix};

/// Columns of the QR input with norm below this are treated as a rank collapse.
pub const COLLAPSE_FLOOR: f64 = 1e-300;

fn check_delta(m: usize, n: usize, delta: &DenseMatrix) -> Result<()> {
    if delta.shape() != (m, n) {
        return Err(Error::DimensionMismatch {
            op: "proj_split_step",
            left: (m, n),
            right: delta.shape(),
        });
    }
    Ok(())
}

fn orthonormal_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (q, tri) = qr(a)?;
    for k in 0..tri.rows() {
        let d = tri.get(k, k);
        if d < COLLAPSE_FLOOR {
            return Err(Error::RankCollapse { column: k, norm: d });
        }
    }
    Ok(q)
}

/// One projector-splitting step:
///
/// ```text
/// Û = U S + ΔF V,     U₊ = QR(Û).Q
/// V̂ = V S^T + ΔF^T U, V₊ = QR(V̂).Q
/// S₊ = U₊^T (U S V^T + ΔF) V₊
/// ```
///
/// `S₊` is expanded as `(U₊^T U) S (V^T V₊) + U₊^T ΔF V₊` so that `U S V^T`
/// is never formed.
pub fn proj_split_step(
    current: &LowRankFactorization,
    delta: &DenseMatrix,
) -> Result<LowRankFactorization> {
    let (u, s, v) = (&current.u, &current.s, &current.v);
    check_delta(u.rows(), v.rows(), delta)?;

    let u_hat = u.matmul(s)?.add(&delta.matmul(v)?)?;
    let u_next = orthonormal_basis(&u_hat)?;
    let v_hat = v.matmul_t(s)?.add(&delta.t_matmul(u)?)?;
    let v_next = orthonormal_basis(&v_hat)?;

    let carried = u_next
        .t_matmul(u)?
        .matmul(s)?
        .matmul(&v.t_matmul(&v_next)?)?;
    let added = u_next.t_matmul(&delta.matmul(&v_next)?)?;
    LowRankFactorization::new(u_next, carried.add(&added)?, v_next)
}

/// Rank-1 specialization of [`proj_split_step`]; the QR factorizations reduce
/// to vector normalizations.
pub fn proj_split_rank1(
    current: &Rank1Factorization,
    delta: &DenseMatrix,
) -> Result<Rank1Factorization> {
    let (u, v, s) = (&current.u, &current.v, current.s);
    check_delta(u.len(), v.len(), delta)?;

    let mut u_next = delta.matvec(v)?;
    u_next.iter_mut().zip(u).for_each(|(a, b)| *a += s * b);
    normalize_or_collapse(&mut u_next)?;
    let mut v_next = delta.t_matvec(u)?;
    v_next.iter_mut().zip(v).for_each(|(a, b)| *a += s * b);
    normalize_or_collapse(&mut v_next)?;

    let s_next = dot(&u_next, u) * s * dot(v, &v_next) + dot(&u_next, &delta.matvec(&v_next)?);
    Ok(Rank1Factorization {
        u: u_next,
        v: v_next,
        s: s_next,
    })
}

fn normalize_or_collapse(x: &mut [f64]) -> Result<()> {
    let n = norm2(x);
    if n < COLLAPSE_FLOOR {
        return Err(Error::RankCollapse { column: 0, norm: n });
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok(())
}
