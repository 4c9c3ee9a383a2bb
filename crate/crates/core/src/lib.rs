//! DyKAF: a SOAP-style optimizer whose Kronecker factors of the empirical
//! Fisher matrix are tracked by projector-splitting low-rank integration,
//! together with Shampoo, SOAP and AdamW baselines and an experiment harness.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod kron_approx;
pub mod linalg;
pub mod model;
pub mod optim;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseTensor};
