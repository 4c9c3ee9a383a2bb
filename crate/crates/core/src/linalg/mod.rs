//! Dense real linear algebra in row-major `f64`.

pub mod eig;
pub mod kron;
pub mod matrix;
pub mod power;
pub mod qr;
pub mod tensor;

pub use eig::{sym_eig, sym_power, SymEigDecomposition};
pub use kron::{kron, kron_inner, kron_residual, kron_with_cap, rearrange, unrearrange};
pub use matrix::{dot, frobenius_inner, frobenius_norm, mat, matmul, norm2, vec, DenseMatrix};
pub use power::{dominant_singular_triplet, dominant_singular_triplet_from, SingularTriplet};
pub use qr::qr;
pub use tensor::{refold, unfold, DenseTensor};
