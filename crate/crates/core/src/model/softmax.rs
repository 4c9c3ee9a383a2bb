//! Multinomial softmax regression with analytic derivatives.

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Largest `m·n` for which [`SoftmaxModel::hessian`] will materialize `H`.
pub const HESSIAN_MAX_DIM: usize = 4096;

/// Logits `z = W x` with `W` of shape `classes x features`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    pub w: DenseMatrix,
}

/// Numerically stable softmax of `z`, returned with `log Σ exp z`.
pub fn softmax(z: &[f64]) -> (Vec<f64>, f64) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    (p, max + sum.ln())
}

impl SoftmaxModel {
    pub fn new(w: DenseMatrix) -> Self {
        Self { w }
    }

    pub fn zeros(classes: usize, features: usize) -> Self {
        Self::new(DenseMatrix::zeros(classes, features))
    }

    pub fn classes(&self) -> usize {
        self.w.rows()
    }

    pub fn features(&self) -> usize {
        self.w.cols()
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if ds.features() != self.features() || ds.classes() > self.classes() {
            return Err(Error::DimensionMismatch {
                op: "softmax model",
                left: self.w.shape(),
                right: (ds.classes(), ds.features()),
            });
        }
        Ok(())
    }

    /// Class probabilities for every sample, one row per sample.
    pub fn probabilities(&self, ds: &Dataset) -> Result<DenseMatrix> {
        self.check(ds)?;
        let z = ds.x.matmul_t(&self.w)?;
        let mut out = DenseMatrix::zeros(ds.len(), self.classes());
        for s in 0..ds.len() {
            out.row_mut(s).copy_from_slice(&softmax(z.row(s)).0);
        }
        Ok(out)
    }

    /// Mean cross-entropy, stabilized with log-sum-exp.
    pub fn loss(&self, ds: &Dataset) -> Result<f64> {
        self.check(ds)?;
        let z = ds.x.matmul_t(&self.w)?;
        let mut total = 0.0;
        for (s, &y) in ds.y.iter().enumerate() {
            let row = z.row(s);
            let (_, lse) = softmax(row);
            total += lse - row[y];
        }
        Ok(total / ds.len() as f64)
    }

    /// `(1/N) Σ (p_i − y_i) x_i^T`.
    pub fn gradient(&self, ds: &Dataset) -> Result<DenseMatrix> {
        let mut r = self.probabilities(ds)?;
        for (s, &y) in ds.y.iter().enumerate() {
            r[(s, y)] -= 1.0;
        }
        Ok(r.t_matmul(&ds.x)?.scale(1.0 / ds.len() as f64))
    }

    /// `(1/N) Σ (diag(p_i) − p_i p_i^T) ⊗ (x_i x_i^T)`, indexed consistently
    /// with the row-major `vec(W)`.
    pub fn hessian(&self, ds: &Dataset) -> Result<DenseMatrix> {
        let (m, n) = self.w.shape();
        if m * n > HESSIAN_MAX_DIM {
            return Err(Error::SizeCap {
                requested: m * n,
                cap: HESSIAN_MAX_DIM,
            });
        }
        let p = self.probabilities(ds)?;
        let inv_n = 1.0 / ds.len() as f64;
        let mut h = DenseMatrix::zeros(m * n, m * n);
        // Block (k, l) is Σ_s H^z_s[k, l] x_s x_s^T = X^T diag(c) X.
        for k in 0..m {
            for l in k..m {
                let mut scaled = ds.x.clone();
                for s in 0..ds.len() {
                    let ps = p.row(s);
                    let c = if k == l {
                        ps[k] - ps[k] * ps[k]
                    } else {
                        -ps[k] * ps[l]
                    };
                    scaled.row_mut(s).iter_mut().for_each(|v| *v *= c * inv_n);
                }
                let block = scaled.t_matmul(&ds.x)?;
                for i in 0..n {
                    for j in 0..n {
                        let v = block[(i, j)];
                        h[(k * n + i, l * n + j)] = v;
                        h[(l * n + i, k * n + j)] = v;
                    }
                }
            }
        }
        Ok(h)
    }

    pub fn accuracy(&self, ds: &Dataset) -> Result<f64> {
        let p = self.probabilities(ds)?;
        let hits =
            ds.y.iter()
                .enumerate()
                .filter(|&(s, &y)| {
                    let row = p.row(s);
                    (0..row.len()).all(|k| row[k] <= row[y])
                })
                .count();
        Ok(hits as f64 / ds.len() as f64)
    }
}
