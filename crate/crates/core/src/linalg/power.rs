//! Power iteration for the leading singular triplet.

use super::matrix::{norm2, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SingularTriplet {
    pub sigma: f64,
    /// Unit left singular vector (length = rows).
    pub u: Vec<f64>,
    /// Unit right singular vector (length = cols).
    pub v: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iters` ran out before the residual reached `tol · ‖G‖`;
    /// the best iterate is still returned.
    pub converged: bool,
}

/// Leading singular triplet of `g` by power iteration on `G G^T`.
///
/// Starts from the normalized all-ones vector in the row space. If that start
/// is (numerically) annihilated by `G^T`, the row of `G` with the largest norm
/// is used instead. Convergence is declared when `‖G^T u − σ v‖ <= tol · ‖G‖`
/// with `u = G v / σ`, which makes `G v = σ u` hold exactly.
pub fn dominant_singular_triplet(
    g: &DenseMatrix,
    max_iters: usize,
    tol: f64,
) -> Result<SingularTriplet> {
    let m = g.rows();
    let start = vec![1.0 / (m as f64).sqrt(); m];
    dominant_singular_triplet_from(g, &start, max_iters, tol)
}

/// Same as [`dominant_singular_triplet`] with a caller-supplied start vector in
/// the row space (length `rows`).
pub fn dominant_singular_triplet_from(
    g: &DenseMatrix,
    start: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<SingularTriplet> {
    let m = g.rows();
    if start.len() != m {
        return Err(Error::DimensionMismatch {
            op: "dominant_singular_triplet",
            left: g.shape(),
            right: (start.len(), 1),
        });
    }
    let gnorm = g.frobenius_norm();
    if gnorm == 0.0 {
        return Err(Error::ZeroGradient);
    }

    let mut v = g.t_matvec(start)?;
    if norm2(&v) <= 1e-10 * gnorm * norm2(start) {
        let best_row = (0..m)
            .max_by(|&a, &b| norm2(g.row(a)).total_cmp(&norm2(g.row(b))))
            .unwrap_or(0);
        v = g.row(best_row).to_vec();
    }
    normalize(&mut v);

    let mut u = vec![0.0; m];
    let mut sigma = 0.0;
    let mut best = None;
    let mut best_res = f64::INFINITY;
    for it in 1..=max_iters.max(1) {
        u = g.matvec(&v)?;
        sigma = norm2(&u);
        if sigma == 0.0 {
            break;
        }
        u.iter_mut().for_each(|x| *x /= sigma);
        let mut next_v = g.t_matvec(&u)?;
        let s2 = norm2(&next_v);
        // Residual of the pair (u, v) against G^T u = σ v.
        let res = next_v
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - sigma * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if res < best_res {
            best_res = res;
            best = Some((sigma, u.clone(), v.clone(), it));
        }
        if res <= tol * gnorm {
            return Ok(SingularTriplet {
                sigma,
                u,
                v,
                iterations: it,
                converged: true,
            });
        }
        if s2 == 0.0 {
            break;
        }
        next_v.iter_mut().for_each(|x| *x /= s2);
        v = next_v;
    }
    let (sigma, u, v, iterations) = best.unwrap_or((sigma, u, v, max_iters));
    Ok(SingularTriplet {
        sigma,
        u,
        v,
        iterations,
        converged: false,
    })
}

fn normalize(x: &mut [f64]) {
    let n = norm2(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}
