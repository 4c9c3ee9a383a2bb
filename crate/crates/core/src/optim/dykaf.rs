use super::{bias_corrections, check_param, eigenvectors_refresh, Hyperparams};
use crate::error::Result;
use crate::kron_approx::{
    init_from_gradient, kron_proj_split, proj_split_rank1, KroneckerFactorPair, Rank1Factorization,
};
use crate::linalg::{sym_eig, DenseMatrix};

/// Relative damping added to the initial rank-1 factors.
pub const INIT_DAMPING: f64 = 1e-12;
/// Lower bound on the entries of the rank-1 second-moment vectors.
pub const RANK1_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub enum SecondMoment {
    Full(DenseMatrix),
    /// `V ≈ v_l v_r^T`.
    Rank1 {
        v_l: Vec<f64>,
        v_r: Vec<f64>,
    },
}

impl SecondMoment {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            SecondMoment::Full(v) => v.clone(),
            SecondMoment::Rank1 { v_l, v_r } => DenseMatrix::outer(v_l, v_r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyKafParamState {
    pub step: u64,
    pub m: DenseMatrix,
    pub second: SecondMoment,
    pub factors: KroneckerFactorPair,
    pub q_l: DenseMatrix,
    pub q_r: DenseMatrix,
}

/// State from the first gradient: factors are the nearest Kronecker product of
/// `vec(g1) vec(g1)^T` plus `δI` with `δ = 1e-12 σ₁(g1)`, and the bases are
/// their eigenvectors. Momentum starts at zero; the second moment at zero
/// (full mode) or `ε 1` vectors (rank-1 mode).
pub fn dykaf_init(g1: &DenseMatrix, hp: &Hyperparams) -> Result<DyKafParamState> {
    let pair = init_from_gradient(g1)?;
    let sigma = pair.l.frobenius_norm();
    let (m, n) = g1.shape();
    let delta = INIT_DAMPING * sigma;
    let factors = KroneckerFactorPair {
        l: pair.l.add(&DenseMatrix::identity(m).scale(delta))?,
        r: pair.r.add(&DenseMatrix::identity(n).scale(delta))?,
    };
    let q_l = sym_eig(&factors.l)?.eigenvectors;
    let q_r = sym_eig(&factors.r)?.eigenvectors;
    let second = if hp.rank1_second_moment {
        SecondMoment::Rank1 {
            v_l: vec![hp.epsilon; m],
            v_r: vec![hp.epsilon; n],
        }
    } else {
        SecondMoment::Full(DenseMatrix::zeros(m, n))
    };
    Ok(DyKafParamState {
        step: 0,
        m: DenseMatrix::zeros(m, n),
        second,
        factors,
        q_l,
        q_r,
    })
}

/// `Q_L^T X Q_R`.
pub(crate) fn rotate(q_l: &DenseMatrix, x: &DenseMatrix, q_r: &DenseMatrix) -> Result<DenseMatrix> {
    q_l.t_matmul(x)?.matmul(q_r)
}

/// `Q_L X Q_R^T`.
pub(crate) fn unrotate(
    q_l: &DenseMatrix,
    x: &DenseMatrix,
    q_r: &DenseMatrix,
) -> Result<DenseMatrix> {
    q_l.matmul(x)?.matmul_t(q_r)
}

/// `M ⊘ (V^{∘1/2} + ε)` with negative entries of `V` clamped to zero.
pub(crate) fn adam_direction(m: &DenseMatrix, v: &DenseMatrix, eps: f64) -> Result<DenseMatrix> {
    let denom = v.map(|x| x.max(0.0)).hadamard_pow(0.5)?.map(|x| x + eps);
    m.hadamard_div(&denom)
}

/// One DyKAF step on `w` with gradient `g` (the gradient of the loss, so the
/// update descends).
///
/// Order: rotate `g` and the momentum into the eigenbasis, update the second
/// moment, form `N = Q_L N' Q_R^T`, apply `w − η (N + λ w)`, feed
/// `(√β L, √β R, √(1−β) g)` to [`kron_proj_split`] and refresh the bases every
/// `precond_frequency` steps.
pub fn dykaf_step(
    state: &DyKafParamState,
    w: &DenseMatrix,
    g: &DenseMatrix,
    hp: &Hyperparams,
) -> Result<(DyKafParamState, DenseMatrix)> {
    check_param(w, g, state.m.shape())?;
    let t = state.step + 1;
    let (q_l, q_r) = (&state.q_l, &state.q_r);
    let g_rot = rotate(q_l, g, q_r)?;

    let mut m = state.m.scale(hp.beta1);
    m.add_scaled(1.0 - hp.beta1, g)?;
    let (bc1, bc2) = bias_corrections(hp, t);
    let m_rot = rotate(q_l, &m, q_r)?.scale(1.0 / bc1);

    let g_sq = g_rot.hadamard(&g_rot)?;
    let (second, n_rot) = match &state.second {
        SecondMoment::Full(v) => {
            let mut v = v.scale(hp.beta2);
            v.add_scaled(1.0 - hp.beta2, &g_sq)?;
            let n_rot = adam_direction(&m_rot, &v.scale(1.0 / bc2), hp.epsilon)?;
            (SecondMoment::Full(v), n_rot)
        }
        SecondMoment::Rank1 { v_l, v_r } => {
            let (v_l, v_r) = rank1_second_moment_update(v_l, v_r, &g_sq, hp)?;
            let n_rot = adam_direction(&m_rot, &DenseMatrix::outer(&v_l, &v_r), hp.epsilon)?;
            (SecondMoment::Rank1 { v_l, v_r }, n_rot)
        }
    };
    let n = unrotate(q_l, &n_rot, q_r)?;
    let mut w_next = w.clone();
    let mut step = n;
    step.add_scaled(hp.weight_decay, w)?;
    w_next.add_scaled(-hp.learning_rate, &step)?;

    let beta = hp.factor_beta();
    let scaled = state.factors.scale(beta.sqrt());
    let factors = kron_proj_split(&scaled, &g.scale((1.0 - beta).sqrt()))?;

    let (q_l, q_r) = if t.is_multiple_of(hp.precond_frequency) {
        (
            eigenvectors_refresh(&factors.l, q_l)?,
            eigenvectors_refresh(&factors.r, q_r)?,
        )
    } else {
        (q_l.clone(), q_r.clone())
    };
    Ok((
        DyKafParamState {
            step: t,
            m,
            second,
            factors,
            q_l,
            q_r,
        },
        w_next,
    ))
}

/// Projector-splitting update of `v_l v_r^T` by `G' ⊙ G'`, returning vectors
/// with a balanced norm split, nonnegative orientation and entries clamped at
/// `RANK1_FLOOR`.
fn rank1_second_moment_update(
    v_l: &[f64],
    v_r: &[f64],
    g_sq: &DenseMatrix,
    hp: &Hyperparams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut current = Rank1Factorization::from_outer(v_l, v_r)?;
    let delta = match hp.second_moment_decay {
        Some(b) => {
            current.s *= b;
            g_sq.scale(1.0 - b)
        }
        None => g_sq.clone(),
    };
    let mut next = proj_split_rank1(&current, &delta)?;
    if next.u.iter().sum::<f64>() < 0.0 {
        next.u.iter_mut().for_each(|x| *x = -*x);
        next.v.iter_mut().for_each(|x| *x = -*x);
    }
    let (a, b) = next.to_outer();
    let clamp = |x: Vec<f64>| {
        x.into_iter()
            .map(|y| y.max(RANK1_FLOOR))
            .collect::<Vec<_>>()
    };
    Ok((clamp(a), clamp(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kron_approx::nkp_best;
    use crate::linalg::kron_residual;
    use crate::linalg::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn init_from_basis_gradient() {
        let mut g = DenseMatrix::zeros(2, 2);
        g.set(0, 0, 1.0);
        let s = dykaf_init(&g, &Hyperparams::default()).unwrap();
        let expect = g.add(&DenseMatrix::identity(2).scale(1e-12)).unwrap();
        assert!(s.factors.l.max_abs_diff(&expect) < 1e-15);
        assert!(s.factors.r.max_abs_diff(&expect) < 1e-15);
        assert!(s.q_l.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
        assert_eq!(s.m, DenseMatrix::zeros(2, 2));
        assert_eq!(s.second, SecondMoment::Full(DenseMatrix::zeros(2, 2)));
        let hp = Hyperparams {
            rank1_second_moment: true,
            ..Hyperparams::default()
        };
        let s = dykaf_init(&g, &hp).unwrap();
        assert_eq!(
            s.second,
            SecondMoment::Rank1 {
                v_l: vec![1e-8; 2],
                v_r: vec![1e-8; 2]
            }
        );
    }

    #[test]
    fn init_residual_near_nkp_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let g = random(4, 3, &mut rng);
        let s = dykaf_init(&g, &Hyperparams::default()).unwrap();
        let v = vec(&g);
        let f = DenseMatrix::outer(&v, &v);
        let best = nkp_best(&f, 4, 3).unwrap().residual;
        let res = kron_residual(&f, &s.factors.l, &s.factors.r).unwrap();
        assert!((res - best).abs() <= 1e-9 * f.frobenius_norm());
    }

    #[test]
    fn zero_gradient_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let hp = Hyperparams::default();
        let g0 = random(3, 2, &mut rng);
        let mut s = dykaf_init(&g0, &hp).unwrap();
        let mut w = random(3, 2, &mut rng);
        (s, w) = dykaf_step(&s, &w, &g0, &hp).unwrap();
        let zero = DenseMatrix::zeros(3, 2);
        let (s1, w1) = dykaf_step(&s, &w, &zero, &hp).unwrap();
        assert!(s1.m.max_abs_diff(&s.m.scale(0.9)) < 1e-15);
        let bound = hp.learning_rate * s.m.frobenius_norm() / hp.epsilon;
        assert!(w1.sub(&w).unwrap().frobenius_norm() <= bound);
        let before = s.factors.kron().unwrap();
        let after = s1.factors.kron().unwrap();
        let c = after.frobenius_inner(&before).unwrap()
            / (after.frobenius_norm() * before.frobenius_norm());
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_freezes_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let hp = Hyperparams {
            learning_rate: 0.0,
            weight_decay: 0.5,
            ..Hyperparams::default()
        };
        let g = random(2, 3, &mut rng);
        let w = random(2, 3, &mut rng);
        let s = dykaf_init(&g, &hp).unwrap();
        let (_, w1) = dykaf_step(&s, &w, &g, &hp).unwrap();
        assert_eq!(w1, w);
    }

    #[test]
    fn rank1_second_moment_tracks_rank1_increments() {
        // From a matching state v_l v_r^T = a b^T, adding (c a)(b)^T stays rank-1.
        let a = [1.0, 2.0, 0.5];
        let b = [0.3, 0.7];
        let g_sq = DenseMatrix::outer(&a, &b).scale(2.0);
        let hp = Hyperparams::default();
        let (vl, vr) = rank1_second_moment_update(&a, &b, &g_sq, &hp).unwrap();
        let expect = DenseMatrix::outer(&a, &b).scale(3.0);
        assert!(DenseMatrix::outer(&vl, &vr).max_abs_diff(&expect) <= 1e-9);
        assert!(vl.iter().chain(&vr).all(|&x| x >= RANK1_FLOOR));
    }

    #[test]
    fn rank1_mode_soak() {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let hp = Hyperparams {
            rank1_second_moment: true,
            precond_frequency: 3,
            ..Hyperparams::default()
        };
        let mut w = random(5, 4, &mut rng);
        let g = random(5, 4, &mut rng);
        let mut s = dykaf_init(&g, &hp).unwrap();
        for _ in 0..30 {
            let g = random(5, 4, &mut rng);
            (s, w) = dykaf_step(&s, &w, &g, &hp).unwrap();
            assert!(s.q_l.orthogonality_defect() <= 1e-8);
            let SecondMoment::Rank1 { v_l, v_r } = &s.second else {
                unreachable!()
            };
            assert!(v_l.iter().chain(v_r).all(|&x| x >= RANK1_FLOOR));
            assert!(w.is_finite());
        }
    }
}
