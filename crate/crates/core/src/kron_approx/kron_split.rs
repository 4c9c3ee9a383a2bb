//! Projector splitting on the rearranged Fisher matrix, carried out directly on
//! the Kronecker factors.
//!
//! Under rearrangement the pair `(L, R)` is the rank-1 matrix
//! `‖L‖‖R‖ · vec(L̄) vec(R̄)^T` (bars denote normalization) and the update
//! `vec(G) vec(G)^T` becomes `G ⊗ G`. Products with `G ⊗ G` reduce to
//! `G X G^T`, so nothing of size `mn x mn` is formed.

use super::factors::{KroneckerFactorList, KroneckerFactorPair};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseTensor};

/// Smallest core value `S` accepted before taking its square root.
pub const S_FLOOR: f64 = 1e-30;
/// Factors with Frobenius norm below this cannot be normalized.
pub const ZERO_FACTOR_FLOOR: f64 = 1e-300;

fn factor_norm(m: &DenseMatrix) -> Result<f64> {
    let n = m.frobenius_norm();
    if n.is_nan() || n < ZERO_FACTOR_FLOOR {
        return Err(Error::ZeroFactor { norm: n });
    }
    Ok(n)
}

/// `G X G^T`.
fn sandwich(g: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    g.matmul(x)?.matmul_t(g)
}

/// `G^T X G`.
fn sandwich_t(g: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    g.t_matmul(x)?.matmul(g)
}

/// Returns `(L₊, R₊, S)` with unit-norm directions and the raw core value.
fn split_parts(
    pair: &KroneckerFactorPair,
    g: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix, f64)> {
    pair.check_gradient(g)?;
    let (l, r) = (&pair.l, &pair.r);
    let nl = factor_norm(l)?;
    let nr = factor_norm(r)?;

    let l_hat = l.scale(nr).add(&sandwich(g, &r.scale(1.0 / nr))?)?;
    let r_hat = r.scale(nl).add(&sandwich_t(g, &l.scale(1.0 / nl))?)?;
    let l_next = l_hat.scale(1.0 / factor_norm(&l_hat)?);
    let r_next = r_hat.scale(1.0 / factor_norm(&r_hat)?);

    let s = l.frobenius_inner(&l_next)? * r.frobenius_inner(&r_next)?
        + l_next.frobenius_inner(&sandwich(g, &r_next)?)?;
    Ok((l_next, r_next, s))
}

fn assemble(l: DenseMatrix, r: DenseMatrix, s: f64) -> KroneckerFactorPair {
    let root = s.sqrt();
    KroneckerFactorPair {
        l: l.scale(root).symmetrize(),
        r: r.scale(root).symmetrize(),
    }
}

/// One step of the Kronecker-structured projector splitting:
///
/// ```text
/// L̂ = L‖R‖ + G (R/‖R‖) G^T        L₊ = L̂/‖L̂‖
/// R̂ = R‖L‖ + G^T (L/‖L‖) G        R₊ = R̂/‖R̂‖
/// S = ⟨L, L₊⟩⟨R, R₊⟩ + ⟨L₊, G R₊ G^T⟩
/// ```
///
/// and returns `(√S L₊, √S R₊)`, symmetrized. Fails with `NonPositiveS` when
/// `S <= S_FLOOR`; see [`kron_proj_split_clamped`] for a total variant.
pub fn kron_proj_split(pair: &KroneckerFactorPair, g: &DenseMatrix) -> Result<KroneckerFactorPair> {
    let (l, r, s) = split_parts(pair, g)?;
    if s.is_nan() || s <= S_FLOOR {
        return Err(Error::NonPositiveS { value: s });
    }
    Ok(assemble(l, r, s))
}

/// Like [`kron_proj_split`] but clamps `S` at `S_FLOOR`; the flag reports
/// whether clamping happened.
pub fn kron_proj_split_clamped(
    pair: &KroneckerFactorPair,
    g: &DenseMatrix,
) -> Result<(KroneckerFactorPair, bool)> {
    let (l, r, s) = split_parts(pair, g)?;
    let clamped = s.is_nan() || s <= S_FLOOR;
    Ok((assemble(l, r, if clamped { S_FLOOR } else { s }), clamped))
}

/// `G ×_{j≠skip} M_j` over all modes except `skip`.
fn contract_except(
    g: &DenseTensor,
    mats: &[DenseMatrix],
    skip: Option<usize>,
) -> Result<DenseTensor> {
    let mut y = g.clone();
    for (j, m) in mats.iter().enumerate() {
        if Some(j) != skip {
            y = y.mode_product(j, m)?;
        }
    }
    Ok(y)
}

/// `vec(G)^T (M_1 ⊗ … ⊗ M_d) vec(G)` computed as `⟨G, G ×_1 M_1 … ×_d M_d⟩`.
pub fn kron_quadratic_form(mats: &[DenseMatrix], g: &DenseTensor) -> Result<f64> {
    if mats.len() != g.ndim() {
        return Err(Error::InvalidArgument(format!(
            "{} factors for a {}-way tensor",
            mats.len(),
            g.ndim()
        )));
    }
    let y = contract_except(g, mats, None)?;
    Ok(crate::linalg::dot(g.data(), y.data()))
}

/// Tensor version of [`kron_proj_split`] for `d >= 2` factors.
///
/// For every mode `k`, `norm_k = Π_{j≠k} ‖L^(j)‖` and
/// `L̂^(k) = L^(k) norm_k² + G_(k) (⊗_{j≠k} L^(j)) G_(k)^T`, all from the
/// incoming factors. The core is
/// `S = Π_k ⟨L^(k), L₊^(k)⟩ + vec(G)^T (⊗_k L₊^(k)) vec(G)` and the result is
/// `{S^{1/d} L₊^(k)}`. Kronecker products are applied as mode products.
pub fn kron_proj_split_tensor(
    list: &KroneckerFactorList,
    g: &DenseTensor,
) -> Result<KroneckerFactorList> {
    let d = list.factors.len();
    if g.shape() != list.shape().as_slice() {
        return Err(Error::InvalidShape(format!(
            "gradient of shape {:?} does not match factors {:?}",
            g.shape(),
            list.shape()
        )));
    }
    let norms = list
        .factors
        .iter()
        .map(factor_norm)
        .collect::<Result<Vec<_>>>()?;
    // Mode products with L^T give unfold_k(Y) = G_(k) (⊗_{j≠k} L^(j)).
    let transposed: Vec<DenseMatrix> = list.factors.iter().map(|f| f.transpose()).collect();

    let mut next = Vec::with_capacity(d);
    for k in 0..d {
        let norm_k: f64 = (0..d).filter(|&j| j != k).map(|j| norms[j]).product();
        let y = contract_except(g, &transposed, Some(k))?;
        let term = y.unfold(k)?.matmul_t(&g.unfold(k)?)?;
        let hat = list.factors[k].scale(norm_k * norm_k).add(&term)?;
        next.push(hat.scale(1.0 / factor_norm(&hat)?));
    }

    let mut s = 1.0;
    for (old, new) in list.factors.iter().zip(&next) {
        s *= old.frobenius_inner(new)?;
    }
    s += kron_quadratic_form(&next, g)?;
    if s.is_nan() || s <= S_FLOOR {
        return Err(Error::NonPositiveS { value: s });
    }
    let root = s.powf(1.0 / d as f64);
    Ok(KroneckerFactorList {
        factors: next
            .into_iter()
            .map(|f| f.scale(root).symmetrize())
            .collect(),
    })
}
