//! Experiment harness: the Fisher approximation simulation, the Hessian gap
//! study on softmax regression, property validators and a self-test.

mod config;
mod fisher_sim;
mod hessian_gap;
pub mod props;
mod record;
mod selftest;

pub use config::ExperimentConfig;
pub use fisher_sim::{
    fisher_sim_seed, run_fisher_sim, FISHER_SIM, FISHER_SIM_MAX_DIM, FISHER_SIM_STEPS,
};
pub use hessian_gap::{
    dataset_path, hessian_fd_error, hessian_gap_seed, load_dataset, run_hessian_gap, run_train,
    train_model, LoadedData, FD_GUARD_TOL, HESSIAN_GAP, HESSIAN_GAP_STEPS, TRAIN, TRAIN_STEPS,
};
pub use props::{run_prop_validators, SuiteSummary, DYNAMICAL_K, PROPS};
pub use record::{emit, read_records, sort_records, write_records, ExperimentRecord, OutputFormat};
pub use selftest::{run_selftest, selftest_records, SelfCheck, SELFTEST};

use std::sync::Mutex;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{kron, rearrange, vec, DenseMatrix};

/// Matrix with independent standard normal entries.
pub fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub(crate) fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    randn(n, n, rng).symmetrize()
}

/// `X Xᵀ / n + shift · I` for a standard normal `X`.
pub(crate) fn random_psd(n: usize, rng: &mut ChaCha8Rng, shift: f64) -> DenseMatrix {
    let x = randn(n, n, rng);
    let mut p = x
        .matmul_t(&x)
        .expect("square")
        .scale(1.0 / n as f64)
        .symmetrize();
    p.add_scaled(shift, &DenseMatrix::identity(n))
        .expect("same shape");
    p
}

/// Independent stream id for `(seed, tag)`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Checks `rearrange(B ⊗ C) = vec(B) vec(C)ᵀ` on a small seeded instance.
pub fn check_master_identity(seed: u64) -> Result<()> {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(derive_seed(seed, 99));
    let (b, c) = (randn(3, 2, &mut rng), randn(2, 3, &mut rng));
    let err = rearrange(&kron(&b, &c)?, 3, 2, 2, 3)?
        .max_abs_diff(&DenseMatrix::outer(&vec(&b), &vec(&c)));
    if err > 1e-14 {
        return Err(Error::InvalidArgument(format!(
            "rearrangement identity violated by {err:e}"
        )));
    }
    Ok(())
}

/// Runs `f` for every configured seed on up to `cfg.jobs` threads and
/// concatenates the results in seed order.
pub fn run_seeds<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<ExperimentRecord>>
where
    F: Fn(&ExperimentConfig, u64) -> Result<Vec<ExperimentRecord>> + Sync,
{
    let seeds = cfg.seeds();
    let jobs = cfg.jobs.clamp(1, seeds.len());
    let slots: Vec<Mutex<Option<Result<Vec<ExperimentRecord>>>>> =
        seeds.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let k = {
                    let mut n = next.lock().expect("counter lock");
                    let k = *n;
                    *n += 1;
                    k
                };
                if k >= seeds.len() {
                    break;
                }
                let result = f(cfg, seeds[k]);
                *slots[k].lock().expect("slot lock") = Some(result);
            });
        }
    });
    let mut out = Vec::new();
    for slot in slots {
        let result = slot
            .into_inner()
            .expect("slot lock")
            .expect("every seed ran");
        out.extend(result?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_does_not_depend_on_jobs() {
        let base = ExperimentConfig {
            rows: 3,
            cols: 2,
            steps: Some(5),
            num_seeds: 4,
            ..Default::default()
        };
        let serial = run_fisher_sim(&base).unwrap();
        let parallel = run_fisher_sim(&ExperimentConfig { jobs: 3, ..base }).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.iter().filter(|r| r.seed == 2).count(), 5 * 8);
    }
}
