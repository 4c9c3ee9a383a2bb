use super::dykaf::{adam_direction, rotate, unrotate};
use super::{bias_corrections, check_param, eigenvectors_refresh, Hyperparams};
use crate::error::Result;
use crate::kron_approx::KroneckerFactorPair;
use crate::linalg::{sym_eig, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SoapState {
    pub step: u64,
    pub m: DenseMatrix,
    pub v: DenseMatrix,
    pub factors: KroneckerFactorPair,
    pub q_l: DenseMatrix,
    pub q_r: DenseMatrix,
    /// False until the first full eigendecomposition of the factors; later
    /// refreshes use orthogonal iteration.
    pub eigenbasis_ready: bool,
}

impl SoapState {
    /// `L = R = εI`, identity bases, zero moments.
    pub fn new(rows: usize, cols: usize, hp: &Hyperparams) -> Self {
        Self {
            step: 0,
            m: DenseMatrix::zeros(rows, cols),
            v: DenseMatrix::zeros(rows, cols),
            factors: KroneckerFactorPair::scaled_identity(rows, cols, hp.epsilon),
            q_l: DenseMatrix::identity(rows),
            q_r: DenseMatrix::identity(cols),
            eigenbasis_ready: false,
        }
    }
}

/// SOAP step: the DyKAF pipeline with a full second moment and the EMA factor
/// update `L ← β₂ L + (1−β₂) G G^T`, `R ← β₂ R + (1−β₂) G^T G`.
pub fn soap_step(
    state: &SoapState,
    w: &DenseMatrix,
    g: &DenseMatrix,
    hp: &Hyperparams,
) -> Result<(SoapState, DenseMatrix)> {
    check_param(w, g, state.m.shape())?;
    let t = state.step + 1;
    let (q_l, q_r) = (&state.q_l, &state.q_r);
    let g_rot = rotate(q_l, g, q_r)?;

    let mut m = state.m.scale(hp.beta1);
    m.add_scaled(1.0 - hp.beta1, g)?;
    let (bc1, bc2) = bias_corrections(hp, t);
    let m_rot = rotate(q_l, &m, q_r)?.scale(1.0 / bc1);

    let mut v = state.v.scale(hp.beta2);
    v.add_scaled(1.0 - hp.beta2, &g_rot.hadamard(&g_rot)?)?;
    let n_rot = adam_direction(&m_rot, &v.scale(1.0 / bc2), hp.epsilon)?;
    let mut step = unrotate(q_l, &n_rot, q_r)?;
    step.add_scaled(hp.weight_decay, w)?;
    let mut w_next = w.clone();
    w_next.add_scaled(-hp.learning_rate, &step)?;

    let mut l = state.factors.l.scale(hp.beta2);
    l.add_scaled(1.0 - hp.beta2, &g.matmul_t(g)?)?;
    let mut r = state.factors.r.scale(hp.beta2);
    r.add_scaled(1.0 - hp.beta2, &g.t_matmul(g)?)?;
    let factors = KroneckerFactorPair {
        l: l.symmetrize(),
        r: r.symmetrize(),
    };

    let (q_l, q_r, ready) = if !state.eigenbasis_ready {
        (
            sym_eig(&factors.l)?.eigenvectors,
            sym_eig(&factors.r)?.eigenvectors,
            true,
        )
    } else if t.is_multiple_of(hp.precond_frequency) {
        (
            eigenvectors_refresh(&factors.l, q_l)?,
            eigenvectors_refresh(&factors.r, q_r)?,
            true,
        )
    } else {
        (q_l.clone(), q_r.clone(), true)
    };
    Ok((
        SoapState {
            step: t,
            m,
            v,
            factors,
            q_l,
            q_r,
            eigenbasis_ready: ready,
        },
        w_next,
    ))
}
