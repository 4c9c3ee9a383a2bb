use super::Hyperparams;
use crate::error::Result;
use crate::linalg::DenseMatrix;

/// AdamW state: first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub step: u64,
    pub m: DenseMatrix,
    pub v: DenseMatrix,
}

impl AdamWState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            step: 0,
            m: DenseMatrix::zeros(rows, cols),
            v: DenseMatrix::zeros(rows, cols),
        }
    }
}

/// One AdamW step with decoupled weight decay `w − η (m̂/(√v̂ + ε) + λ w)`.
pub fn adamw_step(
    state: &AdamWState,
    w: &DenseMatrix,
    g: &DenseMatrix,
    hp: &Hyperparams,
) -> Result<(AdamWState, DenseMatrix)> {
    super::check_param(w, g, state.m.shape())?;
    let t = state.step + 1;
    let (bc1, bc2) = super::bias_corrections(hp, t);
    let mut m = state.m.clone();
    let mut v = state.v.clone();
    let mut w_next = w.clone();
    let (b1, b2) = (hp.beta1, hp.beta2);
    for (((mi, vi), wi), &gi) in m
        .data_mut()
        .iter_mut()
        .zip(v.data_mut().iter_mut())
        .zip(w_next.data_mut().iter_mut())
        .zip(g.data())
    {
        *mi = b1 * *mi + (1.0 - b1) * gi;
        *vi = b2 * *vi + (1.0 - b2) * (gi * gi);
        let m_hat = *mi / bc1;
        let v_hat = *vi / bc2;
        let n = m_hat / (v_hat.sqrt() + hp.epsilon);
        *wi -= hp.learning_rate * (n + hp.weight_decay * *wi);
    }
    Ok((AdamWState { step: t, m, v }, w_next))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_weights() {
        let hp = Hyperparams::default();
        let w = DenseMatrix::from_rows(&[&[1.0, -2.0]]);
        let (_, w1) =
            adamw_step(&AdamWState::new(1, 2), &w, &DenseMatrix::zeros(1, 2), &hp).unwrap();
        assert_eq!(w1, w);
    }

    #[test]
    fn memoryless_step_is_sign_like() {
        let hp = Hyperparams {
            beta1: 0.0,
            beta2: 0.0,
            learning_rate: 0.1,
            ..Hyperparams::default()
        };
        let g = DenseMatrix::from_rows(&[&[3.0, -0.5]]);
        let (_, w1) =
            adamw_step(&AdamWState::new(1, 2), &DenseMatrix::zeros(1, 2), &g, &hp).unwrap();
        for (wi, gi) in w1.data().iter().zip(g.data()) {
            let expect = -0.1 * gi / (gi.abs() + 1e-8);
            assert!((wi - expect).abs() < 1e-15);
        }
    }
}
