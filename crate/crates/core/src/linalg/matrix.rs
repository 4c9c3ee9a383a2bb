//! Row-major dense matrix and the elementwise / product kernels built on it.
//!
//! Storage is `data[i * cols + j] = A[i, j]`. Every reduction runs in a fixed
//! loop order, so results are bit-reproducible for identical inputs.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Entries of a divisor with magnitude below this are rejected by
/// [`DenseMatrix::hadamard_div`].
pub const DIV_FLOOR: f64 = 1e-30;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Wraps row-major `data`; fails unless `data.len() == rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    /// Builds a matrix from row slices.
    ///
    /// # Panics
    /// Panics on ragged input; intended for literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(
                r.len(),
                cols,
                "row {i} has {} entries, expected {cols}",
                r.len()
            );
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Column vector (n x 1).
    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Outer product `a b^T`.
    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self.set(i, j, x);
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    /// `self · other`, summed in fixed i-k-j order.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// `self^T · other` without forming the transpose.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                op: "t_matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (k, m, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        for p in 0..k {
            let a_row = &self.data[p * m..(p + 1) * m];
            let b_row = &other.data[p * n..(p + 1) * n];
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// `self · other^T` without forming the transpose.
    pub fn matmul_t(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op: "matmul_t",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (m, n) = (self.rows, other.rows);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let a = self.row(i);
            for j in 0..n {
                out[i * n + j] = dot(a, other.row(j));
            }
        }
        Ok(Self {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.cols != x.len() {
            return Err(Error::DimensionMismatch {
                op: "matvec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `self^T x`.
    pub fn t_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.rows != x.len() {
            return Err(Error::DimensionMismatch {
                op: "t_matvec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|x| x * alpha)
    }

    pub fn scale_in_place(&mut self, alpha: f64) {
        for x in &mut self.data {
            *x *= alpha;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn frobenius_inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "frobenius_inner")?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrize(&self) -> Self {
        debug_assert!(self.is_square());
        let n = self.rows;
        Self::from_fn(n, n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    /// Frobenius norm of `A - A^T`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.rows;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self.get(i, j) - self.get(j, i);
                s += d * d;
            }
        }
        s.sqrt()
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "hadamard")?;
        Ok(self.zip_map(other, |a, b| a * b))
    }

    /// Elementwise power. Non-integer exponents require nonnegative entries.
    pub fn hadamard_pow(&self, alpha: f64) -> Result<Self> {
        if alpha.fract() == 0.0 && alpha.abs() <= i32::MAX as f64 {
            let p = alpha as i32;
            return Ok(self.map(|x| x.powi(p)));
        }
        if let Some((index, &value)) = self.data.iter().enumerate().find(|(_, &x)| x < 0.0) {
            return Err(Error::NegativeBase { index, value });
        }
        Ok(self.map(|x| x.powf(alpha)))
    }

    /// Elementwise quotient; divisors with `|b| < DIV_FLOOR` are rejected.
    pub fn hadamard_div(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "hadamard_div")?;
        if let Some((index, &value)) = other
            .data
            .iter()
            .enumerate()
            .find(|(_, &b)| b.is_nan() || b.abs() < DIV_FLOOR)
        {
            return Err(Error::DivisionUnderflow { index, value });
        }
        Ok(self.zip_map(other, |a, b| a / b))
    }

    /// `off(A) = A - diag(A)`.
    pub fn off_diagonal(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out.set(i, i, 0.0);
        }
        out
    }

    /// Norm of the diagonal part.
    pub fn diag_norm(&self) -> f64 {
        norm2(&self.diag())
    }

    /// `‖Q^T Q − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let qtq = self.t_matmul(self).expect("square Gram");
        qtq.sub(&Self::identity(self.cols))
            .expect("same shape")
            .frobenius_norm()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.matmul(b)
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.frobenius_norm()
}

pub fn frobenius_inner(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    a.frobenius_inner(b)
}

/// Row-major vectorization: rows stacked one after another.
pub fn vec(x: &DenseMatrix) -> Vec<f64> {
    x.data.clone()
}

/// Inverse of [`vec`]: packs `x` into an `m x n` matrix row by row.
pub fn mat(x: &[f64], m: usize, n: usize) -> Result<DenseMatrix> {
    DenseMatrix::new(m, n, x.to_vec())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(3, 3, &mut rng);
        assert_eq!(DenseMatrix::identity(3).matmul(&a).unwrap(), a);
    }

    #[test]
    fn small_product_by_hand() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[0.0], &[1.0]]);
        assert_eq!(
            a.matmul(&b).unwrap(),
            DenseMatrix::from_rows(&[&[2.0], &[4.0]])
        );
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(5, 3, &mut rng);
        let b = random(3, 4, &mut rng);
        let c = a.matmul(&b).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a[(i, k)] * b[(k, j)];
                }
                assert!((c[(i, j)] - s).abs() <= 1e-12);
            }
        }
        assert!(a.t_matmul(&b).is_err());
        assert!(
            a.t_matmul(&a)
                .unwrap()
                .max_abs_diff(&a.transpose().matmul(&a).unwrap())
                <= 1e-14
        );
        assert!(
            a.matmul_t(&a)
                .unwrap()
                .max_abs_diff(&a.matmul(&a.transpose()).unwrap())
                <= 1e-14
        );
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norms_and_inner_products() {
        assert!((DenseMatrix::identity(2).frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(4, 4, &mut rng);
        let b = random(4, 4, &mut rng);
        let n = a.frobenius_norm();
        assert!((a.frobenius_inner(&a).unwrap() - n * n).abs() < 1e-13);
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += a[(i, j)] * b[(i, j)];
            }
        }
        assert!((a.frobenius_inner(&b).unwrap() - s).abs() <= 1e-13);
        assert!(a.frobenius_inner(&DenseMatrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn vec_and_mat_are_row_major_inverses() {
        let x = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(vec(&x), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mat(&vec(&x), 2, 2).unwrap(), x);
        assert!(mat(&[1.0, 2.0, 3.0], 2, 2).is_err());
        let (m, n) = (3, 4);
        for i in 0..m {
            for j in 0..n {
                let mut e = DenseMatrix::zeros(m, n);
                e[(i, j)] = 1.0;
                let v = vec(&e);
                assert_eq!(v.iter().position(|&x| x == 1.0), Some(n * i + j));
            }
        }
    }

    #[test]
    fn hadamard_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random(3, 5, &mut rng);
        assert_eq!(a.hadamard_pow(1.0).unwrap(), a);
        let sq = DenseMatrix::from_rows(&[&[4.0, 9.0]]);
        assert_eq!(
            sq.hadamard_pow(0.5).unwrap(),
            DenseMatrix::from_rows(&[&[2.0, 3.0]])
        );
        let b = DenseMatrix::from_fn(3, 5, |_, _| {
            let x: f64 = rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) {
                x
            } else {
                -x
            }
        });
        let back = a.hadamard_div(&b).unwrap().hadamard(&b).unwrap();
        assert!(back.max_abs_diff(&a) <= 1e-12);
    }

    #[test]
    fn hadamard_errors() {
        let neg = DenseMatrix::from_rows(&[&[1.0, -4.0]]);
        assert!(matches!(
            neg.hadamard_pow(0.5),
            Err(Error::NegativeBase { index: 1, .. })
        ));
        assert!(neg.hadamard_pow(2.0).is_ok());
        let tiny = DenseMatrix::from_rows(&[&[1.0, 1e-31]]);
        assert!(matches!(
            neg.hadamard_div(&tiny),
            Err(Error::DivisionUnderflow { index: 1, .. })
        ));
    }
}
