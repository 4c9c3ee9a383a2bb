use super::{check_param, Hyperparams};
use crate::error::Result;
use crate::kron_approx::{shampoo_factor_update, KroneckerFactorPair};
use crate::linalg::{sym_power, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ShampooState {
    pub step: u64,
    pub factors: KroneckerFactorPair,
}

impl ShampooState {
    /// `L = R = εI` with `ε = shampoo_matrix_eps`.
    pub fn new(rows: usize, cols: usize, hp: &Hyperparams) -> Self {
        Self {
            step: 0,
            factors: KroneckerFactorPair::scaled_identity(rows, cols, hp.shampoo_matrix_eps),
        }
    }
}

/// `L^{-1/4} G R^{-1/4}` with eigenvalues clamped below at `eps`.
pub fn shampoo_precondition(
    pair: &KroneckerFactorPair,
    g: &DenseMatrix,
    eps: f64,
) -> Result<DenseMatrix> {
    pair.check_gradient(g)?;
    let l = sym_power(&pair.l, -0.25, eps)?;
    let r = sym_power(&pair.r, -0.25, eps)?;
    l.matmul(g)?.matmul(&r)
}

/// Shampoo step: update the factors with `g` (decay `shampoo_decay`), then
/// `w − η (L^{-1/4} G R^{-1/4} + λ w)`.
pub fn shampoo_step(
    state: &ShampooState,
    w: &DenseMatrix,
    g: &DenseMatrix,
    hp: &Hyperparams,
) -> Result<(ShampooState, DenseMatrix)> {
    check_param(w, g, state.factors.dims())?;
    let factors = shampoo_factor_update(&state.factors, g, hp.shampoo_decay)?;
    let mut step = shampoo_precondition(&factors, g, hp.shampoo_matrix_eps)?;
    step.add_scaled(hp.weight_decay, w)?;
    let mut w_next = w.clone();
    w_next.add_scaled(-hp.learning_rate, &step)?;
    Ok((
        ShampooState {
            step: state.step + 1,
            factors,
        },
        w_next,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factors_give_gradient() {
        let g = DenseMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let p = KroneckerFactorPair::scaled_identity(2, 2, 1.0);
        assert!(
            shampoo_precondition(&p, &g, 1e-12)
                .unwrap()
                .max_abs_diff(&g)
                < 1e-15
        );
    }

    #[test]
    fn inverse_fourth_root() {
        let p = KroneckerFactorPair::new(
            DenseMatrix::from_diag(&[16.0, 1.0]),
            DenseMatrix::identity(2),
        )
        .unwrap();
        let mut g = DenseMatrix::zeros(2, 2);
        g.set(0, 0, 1.0);
        let out = shampoo_precondition(&p, &g, 1e-12).unwrap();
        assert!(out.max_abs_diff(&g.scale(0.5)) < 1e-15);
    }
}
