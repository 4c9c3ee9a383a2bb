use crate::error::{Error, Result};
use crate::linalg::{kron, norm2, qr, DenseMatrix};

/// Tolerance on `‖U^T U − I‖` accepted by [`LowRankFactorization::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Rank-1 approximation `s · u v^T` with unit `u`, `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Factorization {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub s: f64,
}

impl Rank1Factorization {
    /// Normalizes `u` and `v`, folding their norms into `s`.
    pub fn new(u: Vec<f64>, v: Vec<f64>, s: f64) -> Result<Self> {
        let (nu, nv) = (norm2(&u), norm2(&v));
        if nu == 0.0 || nv == 0.0 {
            return Err(Error::ZeroFactor { norm: nu.min(nv) });
        }
        Ok(Self {
            u: u.into_iter().map(|x| x / nu).collect(),
            v: v.into_iter().map(|x| x / nv).collect(),
            s: s * nu * nv,
        })
    }

    /// `a b^T` as a rank-1 factorization.
    pub fn from_outer(a: &[f64], b: &[f64]) -> Result<Self> {
        Self::new(a.to_vec(), b.to_vec(), 1.0)
    }

    /// Splits `s` evenly: returns `(a, b)` with `a b^T = s u v^T` and `‖a‖ = ‖b‖`.
    pub fn to_outer(&self) -> (Vec<f64>, Vec<f64>) {
        let root = self.s.abs().sqrt();
        let sign = if self.s < 0.0 { -1.0 } else { 1.0 };
        (
            self.u.iter().map(|x| sign * root * x).collect(),
            self.v.iter().map(|x| root * x).collect(),
        )
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::outer(&self.u, &self.v).scale(self.s)
    }
}

/// `U S V^T` with orthonormal `U` (m x r), `V` (n x r) and invertible `S` (r x r).
#[derive(Debug, Clone)]
pub struct LowRankFactorization {
    pub u: DenseMatrix,
    pub s: DenseMatrix,
    pub v: DenseMatrix,
}

impl LowRankFactorization {
    /// Validates shapes and orthonormality. A singular core is shifted by
    /// `1e-12 · max(‖S‖, 1e-300) · I` so that it is invertible.
    pub fn new(u: DenseMatrix, s: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        let r = s.rows();
        if !s.is_square() || u.cols() != r || v.cols() != r {
            return Err(Error::InvalidShape(format!(
                "low-rank factors {:?}, {:?}, {:?} do not conform",
                u.shape(),
                s.shape(),
                v.shape()
            )));
        }
        for (name, q) in [("U", &u), ("V", &v)] {
            let defect = q.orthogonality_defect();
            if defect > ORTHONORMAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "{name} columns are not orthonormal (defect {defect:e})"
                )));
            }
        }
        let (_, tri) = qr(&s)?;
        let singular = (0..r).any(|k| tri.get(k, k) == 0.0);
        let s = if singular {
            let shift = 1e-12 * s.frobenius_norm().max(1e-300);
            s.add(&DenseMatrix::identity(r).scale(shift))?
        } else {
            s
        };
        Ok(Self { u, s, v })
    }

    pub fn rank(&self) -> usize {
        self.s.rows()
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        self.u.matmul(&self.s)?.matmul_t(&self.v)
    }
}

/// The pair `(L, R)` standing for `L ⊗ R`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerFactorPair {
    pub l: DenseMatrix,
    pub r: DenseMatrix,
}

impl KroneckerFactorPair {
    pub fn new(l: DenseMatrix, r: DenseMatrix) -> Result<Self> {
        if !l.is_square() || !r.is_square() {
            return Err(Error::InvalidShape(format!(
                "Kronecker factors must be square, got {:?} and {:?}",
                l.shape(),
                r.shape()
            )));
        }
        Ok(Self { l, r })
    }

    /// `L = R = eps · I`.
    pub fn scaled_identity(m: usize, n: usize, eps: f64) -> Self {
        Self {
            l: DenseMatrix::identity(m).scale(eps),
            r: DenseMatrix::identity(n).scale(eps),
        }
    }

    /// `(m, n)`: the gradient shape this pair preconditions.
    pub fn dims(&self) -> (usize, usize) {
        (self.l.rows(), self.r.rows())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            l: self.l.scale(alpha),
            r: self.r.scale(alpha),
        }
    }

    /// Materialized `L ⊗ R`.
    pub fn kron(&self) -> Result<DenseMatrix> {
        kron(&self.l, &self.r)
    }

    pub fn check_gradient(&self, g: &DenseMatrix) -> Result<()> {
        if g.shape() != self.dims() {
            return Err(Error::DimensionMismatch {
                op: "Kronecker factor update",
                left: self.dims(),
                right: g.shape(),
            });
        }
        Ok(())
    }
}

/// Factors `L^(1), …, L^(d)` standing for `L^(1) ⊗ … ⊗ L^(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerFactorList {
    pub factors: Vec<DenseMatrix>,
}

impl KroneckerFactorList {
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::InvalidArgument(
                "a Kronecker factor list needs at least two factors".into(),
            ));
        }
        if let Some(f) = factors.iter().find(|f| !f.is_square()) {
            return Err(Error::InvalidShape(format!(
                "Kronecker factors must be square, got {:?}",
                f.shape()
            )));
        }
        Ok(Self { factors })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn kron(&self) -> Result<DenseMatrix> {
        let mut out = self.factors[0].clone();
        for f in &self.factors[1..] {
            out = kron(&out, f)?;
        }
        Ok(out)
    }
}

impl From<KroneckerFactorPair> for KroneckerFactorList {
    fn from(p: KroneckerFactorPair) -> Self {
        Self {
            factors: vec![p.l, p.r],
        }
    }
}
