//! Row-major dense tensors, mode unfoldings and mode products.
//!
//! Modes are 0-based. The mode-`k` unfolding has `n_k` rows; its columns run
//! over the remaining modes in increasing mode order, last index fastest. The
//! same ordering is used whenever a Kronecker product over "all modes but `k`"
//! is formed.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || shape.contains(&0) || len != data.len() {
            return Err(Error::InvalidShape(format!(
                "tensor of shape {shape:?} cannot hold {} entries",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn from_matrix(m: &DenseMatrix) -> Self {
        Self {
            shape: vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::matrix::norm2(&self.data)
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for k in (0..self.shape.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.shape[k + 1];
        }
        s
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.ndim() {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range for a {}-way tensor",
                self.ndim()
            )));
        }
        Ok(())
    }

    /// Mode-`mode` unfolding, shape `n_mode x Π_{j≠mode} n_j`.
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        self.check_mode(mode)?;
        let nk = self.shape[mode];
        let cols = self.data.len() / nk;
        let mut out = vec![0.0; self.data.len()];
        // Walk the tensor in row-major order and scatter into the unfolding.
        let mut idx = vec![0usize; self.ndim()];
        for &value in &self.data {
            let row = idx[mode];
            let mut col = 0;
            for (j, &i) in idx.iter().enumerate() {
                if j != mode {
                    col = col * self.shape[j] + i;
                }
            }
            out[row * cols + col] = value;
            increment(&mut idx, &self.shape);
        }
        DenseMatrix::new(nk, cols, out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn refold(m: &DenseMatrix, shape: &[usize], mode: usize) -> Result<Self> {
        let t = Self::zeros(shape.to_vec());
        t.check_mode(mode)?;
        let nk = shape[mode];
        let len = t.data.len();
        if m.shape() != (nk, len / nk) {
            return Err(Error::InvalidShape(format!(
                "cannot refold {}x{} into {shape:?} along mode {mode}",
                m.rows(),
                m.cols()
            )));
        }
        let cols = len / nk;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            let row = idx[mode];
            let mut col = 0;
            for (j, &i) in idx.iter().enumerate() {
                if j != mode {
                    col = col * shape[j] + i;
                }
            }
            data.push(m.data()[row * cols + col]);
            increment(&mut idx, shape);
        }
        Self::new(shape.to_vec(), data)
    }

    /// Mode product `T ×_mode M`: `out[.., i, ..] = Σ_j M[i, j] T[.., j, ..]`.
    pub fn mode_product(&self, mode: usize, m: &DenseMatrix) -> Result<Self> {
        self.check_mode(mode)?;
        if m.cols() != self.shape[mode] {
            return Err(Error::DimensionMismatch {
                op: "mode_product",
                left: m.shape(),
                right: (self.shape[mode], 0),
            });
        }
        let strides = self.strides();
        let outer: usize = self.shape[..mode].iter().product();
        let inner = strides[mode];
        let nk = self.shape[mode];
        let p = m.rows();
        let mut shape = self.shape.clone();
        shape[mode] = p;
        let mut data = vec![0.0; outer * p * inner];
        for o in 0..outer {
            for i in 0..p {
                let dst = (o * p + i) * inner;
                for j in 0..nk {
                    let w = m.get(i, j);
                    if w == 0.0 {
                        continue;
                    }
                    let src = (o * nk + j) * inner;
                    for t in 0..inner {
                        data[dst + t] += w * self.data[src + t];
                    }
                }
            }
        }
        Self::new(shape, data)
    }
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

pub fn unfold(t: &DenseTensor, mode: usize) -> Result<DenseMatrix> {
    t.unfold(mode)
}

pub fn refold(m: &DenseMatrix, shape: &[usize], mode: usize) -> Result<DenseTensor> {
    DenseTensor::refold(m, shape, mode)
}
