//! Nearest Kronecker products, the power-method initialization and the
//! Shampoo factor recursions used as baselines.

use super::factors::KroneckerFactorPair;
use crate::error::{Error, Result};
use crate::linalg::{
    dominant_singular_triplet_from, kron, kron_residual, mat, rearrange, sym_power, DenseMatrix,
    SingularTriplet,
};

pub const POWER_MAX_ITERS: usize = 20_000;
pub const POWER_TOL: f64 = 1e-13;

/// Best Kronecker approximation of `vec(G) vec(G)^T`:
/// `L = σ₁ u₁ u₁^T`, `R = σ₁ v₁ v₁^T` from the leading singular triplet of `G`.
pub fn init_from_gradient(g: &DenseMatrix) -> Result<KroneckerFactorPair> {
    let t = leading_triplet(g, None)?;
    Ok(KroneckerFactorPair {
        l: DenseMatrix::outer(&t.u, &t.u).scale(t.sigma),
        r: DenseMatrix::outer(&t.v, &t.v).scale(t.sigma),
    })
}

fn leading_triplet(g: &DenseMatrix, start: Option<&[f64]>) -> Result<SingularTriplet> {
    let ones;
    let start = match start {
        Some(s) => s,
        None => {
            ones = vec![1.0 / (g.rows() as f64).sqrt(); g.rows()];
            &ones
        }
    };
    dominant_singular_triplet_from(g, start, POWER_MAX_ITERS, POWER_TOL)
}

/// Result of [`nkp_best`].
#[derive(Debug, Clone)]
pub struct NearestKronecker {
    pub pair: KroneckerFactorPair,
    /// `‖F − L ⊗ R‖`.
    pub residual: f64,
    /// Left singular vector of the rearranged matrix; pass it back to
    /// [`nkp_best_from`] to warm-start the next solve.
    pub start: Vec<f64>,
    pub converged: bool,
}

/// Brute-force optimum of `min ‖F − L ⊗ R‖` for `F` of size `mn x mn`, through
/// the leading singular triplet of `rearrange(F)`.
///
/// The singular value is split evenly (`‖L‖ = ‖R‖ = √σ`) and the sign is
/// chosen so that `trace(L) >= 0`.
pub fn nkp_best(f: &DenseMatrix, m: usize, n: usize) -> Result<NearestKronecker> {
    nkp_best_from(f, m, n, None)
}

pub fn nkp_best_from(
    f: &DenseMatrix,
    m: usize,
    n: usize,
    start: Option<&[f64]>,
) -> Result<NearestKronecker> {
    let r = rearrange(f, m, m, n, n)?;
    let t = match leading_triplet(&r, start) {
        Ok(t) => t,
        Err(Error::ZeroGradient) => {
            return Ok(NearestKronecker {
                pair: KroneckerFactorPair::scaled_identity(m, n, 0.0),
                residual: 0.0,
                start: vec![0.0; m * m],
                converged: true,
            })
        }
        Err(e) => return Err(e),
    };
    let root = t.sigma.sqrt();
    let mut l = mat(&t.u, m, m)?.scale(root);
    let mut r = mat(&t.v, n, n)?.scale(root);
    if l.trace() < 0.0 {
        l.scale_in_place(-1.0);
        r.scale_in_place(-1.0);
    }
    let residual = kron_residual(f, &l, &r)?;
    Ok(NearestKronecker {
        pair: KroneckerFactorPair { l, r },
        residual,
        start: t.u,
        converged: t.converged,
    })
}

/// Shampoo factor recursion. With `beta == 1` the factors accumulate,
/// `L + G G^T`, `R + G^T G`; otherwise the EMA `β L + (1 − β) G G^T` is used.
pub fn shampoo_factor_update(
    pair: &KroneckerFactorPair,
    g: &DenseMatrix,
    beta: f64,
) -> Result<KroneckerFactorPair> {
    pair.check_gradient(g)?;
    let (keep, add) = if beta == 1.0 {
        (1.0, 1.0)
    } else {
        (beta, 1.0 - beta)
    };
    let mut l = pair.l.scale(keep);
    l.add_scaled(add, &g.matmul_t(g)?)?;
    let mut r = pair.r.scale(keep);
    r.add_scaled(add, &g.t_matmul(g)?)?;
    Ok(KroneckerFactorPair {
        l: l.symmetrize(),
        r: r.symmetrize(),
    })
}

/// `(L^{1/2}, R^{1/2})` with negative eigenvalues clamped to zero.
pub fn shampoo_sqrt_factors(pair: &KroneckerFactorPair) -> Result<KroneckerFactorPair> {
    Ok(KroneckerFactorPair {
        l: sym_power(&pair.l, 0.5, 0.0)?,
        r: sym_power(&pair.r, 0.5, 0.0)?,
    })
}

/// `L^{1/2} ⊗ R^{1/2}`, materialized.
pub fn shampoo_estimate(pair: &KroneckerFactorPair) -> Result<DenseMatrix> {
    let roots = shampoo_sqrt_factors(pair)?;
    kron(&roots.l, &roots.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn init_on_basis_and_diagonal() {
        let mut e = DenseMatrix::zeros(2, 2);
        e.set(0, 0, 1.0);
        let p = init_from_gradient(&e).unwrap();
        assert!(p.l.max_abs_diff(&e) < 1e-15 && p.r.max_abs_diff(&e) < 1e-15);
        let p = init_from_gradient(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert!(p.l.max_abs_diff(&e.scale(3.0)) < 1e-12);
        assert!(p.r.max_abs_diff(&e.scale(3.0)) < 1e-12);
        assert!(matches!(
            init_from_gradient(&DenseMatrix::zeros(2, 2)),
            Err(Error::ZeroGradient)
        ));
    }

    #[test]
    fn init_matches_nkp_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let g = random(4, 3, &mut rng);
        let v = vec(&g);
        let f = DenseMatrix::outer(&v, &v);
        let p = init_from_gradient(&g).unwrap();
        let best = nkp_best(&f, 4, 3).unwrap();
        let res = kron_residual(&f, &p.l, &p.r).unwrap();
        assert!((res - best.residual).abs() <= 1e-9 * best.residual);
        let diff = p.kron().unwrap().max_abs_diff(&best.pair.kron().unwrap());
        assert!(diff <= 1e-9);
    }

    #[test]
    fn nkp_exact_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        let b = random(2, 2, &mut rng);
        let c = random(3, 3, &mut rng);
        let f = kron(&b, &c).unwrap();
        let best = nkp_best(&f, 2, 3).unwrap();
        assert!(best.residual <= 1e-10 * f.frobenius_norm());
        let (nl, nr) = (best.pair.l.frobenius_norm(), best.pair.r.frobenius_norm());
        assert!((nl - nr).abs() <= 1e-12 * nl);

        let best = nkp_best(&DenseMatrix::identity(4), 2, 2).unwrap();
        assert!(best.residual <= 1e-14);
        assert!(
            best.pair
                .kron()
                .unwrap()
                .max_abs_diff(&DenseMatrix::identity(4))
                <= 1e-14
        );
        assert!(best.pair.l.trace() > 0.0);
    }

    #[test]
    fn shampoo_recursions() {
        let g = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let p = KroneckerFactorPair::scaled_identity(2, 2, 1e-3);
        let q = shampoo_factor_update(&p, &g, 1.0).unwrap();
        let expect = DenseMatrix::identity(2)
            .scale(1e-3)
            .add(&g.matmul_t(&g).unwrap())
            .unwrap();
        assert_eq!(q.l, expect);
        let z = shampoo_factor_update(&q, &DenseMatrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(z, q);

        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let mut pair = KroneckerFactorPair::scaled_identity(3, 2, 0.0);
        let mut l = DenseMatrix::zeros(3, 3);
        for _ in 0..10 {
            let g = random(3, 2, &mut rng);
            pair = shampoo_factor_update(&pair, &g, 0.9).unwrap();
            l = DenseMatrix::from_fn(3, 3, |i, j| {
                let gg: f64 = (0..2).map(|k| g[(i, k)] * g[(j, k)]).sum();
                0.9 * l[(i, j)] + 0.1 * gg
            });
        }
        assert!(pair.l.max_abs_diff(&l) <= 1e-12);
    }

    #[test]
    fn shampoo_estimate_cases() {
        let p = KroneckerFactorPair::scaled_identity(2, 2, 1.0);
        assert!(
            shampoo_estimate(&p)
                .unwrap()
                .max_abs_diff(&DenseMatrix::identity(4))
                < 1e-15
        );
        let p = KroneckerFactorPair::new(
            DenseMatrix::from_diag(&[4.0, 1.0]),
            DenseMatrix::from_diag(&[9.0]),
        )
        .unwrap();
        let e = shampoo_estimate(&p).unwrap();
        assert!(e.max_abs_diff(&DenseMatrix::from_diag(&[6.0, 3.0])) < 1e-14);
    }
}
