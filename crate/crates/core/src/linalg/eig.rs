//! Symmetric eigendecomposition by the cyclic Jacobi method.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Sweeps stop once the off-diagonal norm drops below this fraction of `‖A‖`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Components smaller than this are skipped when fixing eigenvector signs.
const SIGN_THRESHOLD: f64 = 1e-8;

/// `A = Q diag(λ) Q^T` with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: DenseMatrix,
    pub sweeps: usize,
}

impl SymEigDecomposition {
    /// `Q diag(f(λ)) Q^T`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let q = &self.eigenvectors;
        let n = q.rows();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for (k, &w) in fl.iter().enumerate() {
                    s += q.get(i, k) * w * q.get(j, k);
                }
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.apply_fn(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of the symmetric part `(A + A^T)/2` of a square matrix.
///
/// Eigenvector signs are fixed so that the first component with magnitude
/// above `1e-8` is positive.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEigDecomposition> {
    if !a.is_square() {
        return Err(Error::InvalidShape(format!(
            "sym_eig requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut w = a.symmetrize();
    let mut v = DenseMatrix::identity(n);
    let scale = w.frobenius_norm();
    let mut sweeps = 0;

    if scale > 0.0 {
        let threshold = JACOBI_TOL * scale;
        while sweeps < JACOBI_MAX_SWEEPS {
            if off_norm(&w) <= threshold {
                break;
            }
            sweeps += 1;
            for p in 0..n {
                for q in p + 1..n {
                    let apq = w.get(p, q);
                    if apq == 0.0 {
                        continue;
                    }
                    let app = w.get(p, p);
                    let aqq = w.get(q, q);
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate(&mut w, &mut v, p, q, c, s, t, apq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = w.diag();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.col(src);
        if let Some(first) = col.iter().find(|x| x.abs() > SIGN_THRESHOLD) {
            if *first < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
        eigenvectors.set_col(dst, &col);
    }
    Ok(SymEigDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

fn off_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j) * a.get(i, j);
            }
        }
    }
    s.sqrt()
}

#[allow(clippy::too_many_arguments)]
fn rotate(
    w: &mut DenseMatrix,
    v: &mut DenseMatrix,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    t: f64,
    apq: f64,
) {
    let n = w.rows();
    let app = w.get(p, p);
    let aqq = w.get(q, q);
    w.set(p, p, app - t * apq);
    w.set(q, q, aqq + t * apq);
    w.set(p, q, 0.0);
    w.set(q, p, 0.0);
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w.get(k, p);
        let akq = w.get(k, q);
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        w.set(k, p, new_kp);
        w.set(p, k, new_kp);
        w.set(k, q, new_kq);
        w.set(q, k, new_kq);
    }
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

/// `A^p` for symmetric `A`, with eigenvalues clamped below at `floor` first.
pub fn sym_power(a: &DenseMatrix, power: f64, floor: f64) -> Result<DenseMatrix> {
    let eig = sym_eig(a)?;
    Ok(eig.apply_fn(|l| l.max(floor).powf(power)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_input() {
        let e = sym_eig(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(e.eigenvectors, DenseMatrix::identity(2));

        let d = [0.5, -2.0, 7.0, 1.5];
        let e = sym_eig(&DenseMatrix::from_diag(&d)).unwrap();
        let mut sorted = d.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in e.eigenvalues.iter().zip(&sorted) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn swap_matrix() {
        let e = sym_eig(&DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = DenseMatrix::from_rows(&[&[h, h], &[h, -h]]);
        assert!(e.eigenvectors.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn random_symmetric_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let b = DenseMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let a = b.symmetrize();
        let e = sym_eig(&a).unwrap();
        let q = &e.eigenvectors;
        let aq = a.matmul(q).unwrap();
        let ql = q.matmul(&DenseMatrix::from_diag(&e.eigenvalues)).unwrap();
        let norm = a.frobenius_norm();
        assert!(aq.sub(&ql).unwrap().frobenius_norm() <= 1e-9 * norm);
        assert!(q.orthogonality_defect() <= 1e-10 * 8.0);
        assert!(e.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-8 * norm);
        for w in e.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(sym_eig(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_matrix() {
        let e = sym_eig(&DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0; 3]);
        assert_eq!(e.eigenvectors, DenseMatrix::identity(3));
    }

    #[test]
    fn matrix_power() {
        let a = DenseMatrix::from_diag(&[16.0, 1.0]);
        let r = sym_power(&a, -0.25, 1e-12).unwrap();
        assert!(r.max_abs_diff(&DenseMatrix::from_diag(&[0.5, 1.0])) < 1e-14);
    }
}
