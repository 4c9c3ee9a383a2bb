//! DyKAF and the SOAP, Shampoo and AdamW baselines for matrix parameters.
//!
//! Steps take the gradient of the loss and move against it.

mod adamw;
mod dykaf;
mod eigvec;
mod hyperparams;
mod optimizer;
mod shampoo;
mod soap;

pub use adamw::{adamw_step, AdamWState};
pub use dykaf::{dykaf_init, dykaf_step, DyKafParamState, SecondMoment, INIT_DAMPING, RANK1_FLOOR};
pub use eigvec::eigenvectors_refresh;
pub use hyperparams::Hyperparams;
pub use optimizer::{OptimizerKind, ParamOptimizer, ParamState};
pub use shampoo::{shampoo_precondition, shampoo_step, ShampooState};
pub use soap::{soap_step, SoapState};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

fn check_param(w: &DenseMatrix, g: &DenseMatrix, shape: (usize, usize)) -> Result<()> {
    for (name, x) in [("weight", w), ("gradient", g)] {
        if x.shape() != shape {
            return Err(Error::DimensionMismatch {
                op: if name == "weight" {
                    "optimizer weight"
                } else {
                    "optimizer gradient"
                },
                left: shape,
                right: x.shape(),
            });
        }
    }
    Ok(())
}

/// `(1 − β₁^t, 1 − β₂^t)`, or ones when bias correction is off.
fn bias_corrections(hp: &Hyperparams, t: u64) -> (f64, f64) {
    if hp.bias_correction {
        let t = t as f64;
        (1.0 - hp.beta1.powf(t), 1.0 - hp.beta2.powf(t))
    } else {
        (1.0, 1.0)
    }
}
