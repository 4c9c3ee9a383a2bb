use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::optim::{DyKafParamState, SoapState};

/// Largest `m·n` accepted by [`fisher_reconstruct`].
pub const FISHER_MAX_DIM: usize = 4096;

/// `(Q_L ⊗ Q_R) diag(vec V) (Q_L ⊗ Q_R)^T` for `V` of shape `m x n`.
///
/// Built block by block: with `W_a = Q_R diag(V[a, :]) Q_R^T`, block `(i, k)`
/// of the result is `Σ_a Q_L[i, a] Q_L[k, a] W_a`.
pub fn fisher_reconstruct(
    q_l: &DenseMatrix,
    q_r: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<DenseMatrix> {
    let (m, n) = v.shape();
    if q_l.shape() != (m, m) || q_r.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            op: "fisher_reconstruct",
            left: (q_l.rows(), q_r.rows()),
            right: (m, n),
        });
    }
    if m * n > FISHER_MAX_DIM {
        return Err(Error::SizeCap {
            requested: m * n,
            cap: FISHER_MAX_DIM,
        });
    }
    let w: Vec<DenseMatrix> = (0..m)
        .map(|a| {
            let scaled = DenseMatrix::from_fn(n, n, |j, b| q_r[(j, b)] * v[(a, b)]);
            scaled.matmul_t(q_r)
        })
        .collect::<Result<_>>()?;
    let mut f = DenseMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for k in i..m {
            let mut block = DenseMatrix::zeros(n, n);
            for (a, wa) in w.iter().enumerate() {
                let c = q_l[(i, a)] * q_l[(k, a)];
                if c != 0.0 {
                    block.add_scaled(c, wa)?;
                }
            }
            for j in 0..n {
                for l in 0..n {
                    f[(i * n + j, k * n + l)] = block[(j, l)];
                    f[(k * n + l, i * n + j)] = block[(j, l)];
                }
            }
        }
    }
    Ok(f)
}

/// Fisher estimate held by a DyKAF state; a rank-1 second moment is
/// materialized as `v_l v_r^T`.
pub fn fisher_from_dykaf(state: &DyKafParamState) -> Result<DenseMatrix> {
    fisher_reconstruct(&state.q_l, &state.q_r, &state.second.to_dense())
}

pub fn fisher_from_soap(state: &SoapState) -> Result<DenseMatrix> {
    fisher_reconstruct(&state.q_l, &state.q_r, &state.v)
}
