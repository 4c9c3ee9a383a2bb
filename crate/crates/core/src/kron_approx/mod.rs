//! Kronecker approximations of the empirical Fisher matrix.

pub mod factors;
pub mod kron_split;
pub mod nkp;
pub mod proj_split;

pub use factors::{
    KroneckerFactorList, KroneckerFactorPair, LowRankFactorization, Rank1Factorization,
};
pub use kron_split::{
    kron_proj_split, kron_proj_split_clamped, kron_proj_split_tensor, kron_quadratic_form, S_FLOOR,
};
pub use nkp::{
    init_from_gradient, nkp_best, nkp_best_from, shampoo_estimate, shampoo_factor_update,
    shampoo_sqrt_factors, NearestKronecker,
};
pub use proj_split::{proj_split_rank1, proj_split_step};
