use std::path::PathBuf;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, run_seeds, ExperimentConfig, ExperimentRecord};
use crate::error::{Error, Result};
use crate::linalg::{vec, DenseMatrix};
use crate::model::{
    fisher_from_dykaf, fisher_from_soap, read_libsvm, synth_blobs_with, Dataset, SoftmaxModel,
};
use crate::optim::{OptimizerKind, ParamOptimizer, ParamState};

pub const HESSIAN_GAP: &str = "hessian-gap";
pub const TRAIN: &str = "train";
pub const HESSIAN_GAP_STEPS: usize = 500;
pub const TRAIN_STEPS: usize = 100;
/// Tolerance of the finite-difference check on the analytic Hessian.
pub const FD_GUARD_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
const FD_DIRECTIONS: usize = 3;

/// A loaded dataset and whether it is the synthetic stand-in.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub synthetic: bool,
    pub path: PathBuf,
}

pub fn dataset_path(cfg: &ExperimentConfig) -> PathBuf {
    match &cfg.data_dir {
        Some(dir) if cfg.dataset.is_relative() => dir.join(&cfg.dataset),
        _ => cfg.dataset.clone(),
    }
}

/// Reads the configured libsvm file; when it does not exist, falls back to
/// `synth_blobs` if allowed and fails with `DatasetUnavailable` otherwise.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<LoadedData> {
    let path = dataset_path(cfg);
    if path.is_file() {
        return Ok(LoadedData {
            dataset: read_libsvm(&path)?,
            synthetic: false,
            path,
        });
    }
    if !cfg.synth_fallback {
        return Err(Error::DatasetUnavailable(path));
    }
    let dataset = synth_blobs_with(
        cfg.synth_classes,
        cfg.synth_features,
        cfg.synth_count,
        cfg.seed,
        cfg.synth_separation,
    )?;
    Ok(LoadedData {
        dataset,
        synthetic: true,
        path,
    })
}

/// Trains a zero-initialized model on `ds`. Batches are drawn uniformly
/// without replacement from `batch_seed`, so two runs with the same seed see
/// the same batches.
pub fn train_model(
    ds: &Dataset,
    kind: OptimizerKind,
    cfg: &ExperimentConfig,
    steps: usize,
    batch_seed: u64,
    mut observe: impl FnMut(usize, &SoftmaxModel) -> Result<()>,
) -> Result<(SoftmaxModel, ParamOptimizer)> {
    let mut model = SoftmaxModel::zeros(ds.classes(), ds.features());
    let mut opt = ParamOptimizer::new(kind, cfg.hyperparams.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(batch_seed);
    for step in 1..=steps {
        let g = match cfg.batch_size {
            Some(b) if b < ds.len() => {
                let idx = sample(&mut rng, ds.len(), b).into_vec();
                model.gradient(&ds.select(&idx)?)?
            }
            _ => model.gradient(ds)?,
        };
        opt.step(&mut model.w, &g)?;
        observe(step, &model)?;
    }
    Ok((model, opt))
}

/// Largest relative error of `H v` against central differences of the
/// gradient over a few random directions.
pub fn hessian_fd_error(
    model: &SoftmaxModel,
    ds: &Dataset,
    h: &DenseMatrix,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = model.w.shape();
    let mut worst: f64 = 0.0;
    for _ in 0..FD_DIRECTIONS {
        let dir = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let mut plus = model.clone();
        plus.w.add_scaled(FD_STEP, &dir)?;
        let mut minus = model.clone();
        minus.w.add_scaled(-FD_STEP, &dir)?;
        let mut fd = plus.gradient(ds)?;
        fd.add_scaled(-1.0, &minus.gradient(ds)?)?;
        let fd = vec(&fd.scale(0.5 / FD_STEP));
        let hv = h.matvec(&vec(&dir))?;
        let scale = crate::linalg::norm2(&hv).max(1e-12);
        let diff: f64 = hv
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / scale);
    }
    Ok(worst)
}

/// `‖H − F̃‖` for SOAP and DyKAF on subsets of the data of each configured
/// size, both methods trained with identical batches.
pub fn run_hessian_gap(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.check_experiment(HESSIAN_GAP)?;
    let data = load_dataset(cfg)?;
    let dim = data.dataset.classes() * data.dataset.features();
    if dim > crate::model::HESSIAN_MAX_DIM {
        return Err(Error::SizeCap {
            requested: dim,
            cap: crate::model::HESSIAN_MAX_DIM,
        });
    }
    run_seeds(cfg, |cfg, seed| hessian_gap_seed(cfg, &data, seed))
}

pub fn hessian_gap_seed(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    let ds = &data.dataset;
    let steps = cfg.steps_or(HESSIAN_GAP_STEPS);
    let mut out = vec![ExperimentRecord::new(
        HESSIAN_GAP,
        seed,
        "dataset",
        "synthetic",
        0,
        if data.synthetic { 1.0 } else { 0.0 },
    )];
    for (k, &size) in cfg.sample_sizes.iter().enumerate() {
        let sub = ds.subsample(size, derive_seed(seed, 2 * k as u64))?;
        let x = sub.len() as u64;
        let batch_seed = derive_seed(seed, 2 * k as u64 + 1);
        for kind in [OptimizerKind::Soap, OptimizerKind::Dykaf] {
            let (model, opt) = train_model(&sub, kind, cfg, steps, batch_seed, |_, _| Ok(()))?;
            let h = model.hessian(&sub)?;
            let fd = hessian_fd_error(&model, &sub, &h, batch_seed)?;
            if fd > FD_GUARD_TOL {
                return Err(Error::InvalidArgument(format!(
                    "analytic Hessian disagrees with finite differences (relative error {fd:e})"
                )));
            }
            let (f, t) = match &opt.state {
                ParamState::Dykaf(s) => (fisher_from_dykaf(s)?, s.step),
                ParamState::Soap(s) => (fisher_from_soap(s)?, s.step),
                _ => {
                    return Err(Error::InvalidArgument(
                        "parameter is not matrix-shaped".into(),
                    ))
                }
            };
            let f = if cfg.fisher_bias_correction {
                f.scale(1.0 / (1.0 - cfg.hyperparams.beta2.powf(t as f64)))
            } else {
                f
            };
            let h_norm = h.frobenius_norm();
            let gap = h.sub(&f)?.frobenius_norm();
            let name = kind.name();
            out.push(ExperimentRecord::new(
                HESSIAN_GAP,
                seed,
                name,
                "hessian_gap",
                x,
                gap,
            ));
            out.push(ExperimentRecord::new(
                HESSIAN_GAP,
                seed,
                name,
                "relative_gap",
                x,
                gap / h_norm.max(1e-300),
            ));
            out.push(ExperimentRecord::new(
                HESSIAN_GAP,
                seed,
                name,
                "fd_error",
                x,
                fd,
            ));
            out.push(ExperimentRecord::new(
                HESSIAN_GAP,
                seed,
                name,
                "loss",
                x,
                model.loss(&sub)?,
            ));
        }
    }
    Ok(out)
}

/// Loss and accuracy per step for the configured optimizer.
pub fn run_train(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.check_experiment(TRAIN)?;
    let data = load_dataset(cfg)?;
    run_seeds(cfg, |cfg, seed| {
        let mut out = Vec::new();
        let name = cfg.optimizer.name();
        let ds = &data.dataset;
        train_model(
            ds,
            cfg.optimizer,
            cfg,
            cfg.steps_or(TRAIN_STEPS),
            derive_seed(seed, 0),
            |step, model| {
                let x = step as u64;
                out.push(ExperimentRecord::new(
                    TRAIN,
                    seed,
                    name,
                    "loss",
                    x,
                    model.loss(ds)?,
                ));
                out.push(ExperimentRecord::new(
                    TRAIN,
                    seed,
                    name,
                    "accuracy",
                    x,
                    model.accuracy(ds)?,
                ));
                Ok(())
            },
        )?;
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            dataset: PathBuf::from("/nonexistent/mushrooms"),
            synth_classes: 3,
            synth_features: 4,
            synth_count: 100,
            sample_sizes: vec![20, 40],
            steps: Some(30),
            ..Default::default()
        }
    }

    #[test]
    fn fallback_is_flagged_and_optional() {
        let recs = run_hessian_gap(&tiny()).unwrap();
        let flag = recs.iter().find(|r| r.metric == "synthetic").unwrap();
        assert_eq!(flag.value, 1.0);
        assert_eq!(recs, run_hessian_gap(&tiny()).unwrap());
        for r in recs.iter().filter(|r| r.metric == "fd_error") {
            assert!(r.value <= FD_GUARD_TOL);
        }
        let strict = ExperimentConfig {
            synth_fallback: false,
            ..tiny()
        };
        match run_hessian_gap(&strict) {
            Err(Error::DatasetUnavailable(p)) => {
                assert_eq!(p, PathBuf::from("/nonexistent/mushrooms"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reads_libsvm_from_data_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("toy"),
            "1 1:1.0\n2 2:1.0\n1 1:0.8 2:0.1\n2 2:0.9\n",
        )
        .unwrap();
        let cfg = ExperimentConfig {
            dataset: PathBuf::from("toy"),
            data_dir: Some(dir.path().to_path_buf()),
            sample_sizes: vec![4],
            steps: Some(5),
            ..Default::default()
        };
        let data = load_dataset(&cfg).unwrap();
        assert!(!data.synthetic);
        assert_eq!(data.dataset.len(), 4);
        let recs = run_hessian_gap(&cfg).unwrap();
        assert!(recs
            .iter()
            .any(|r| r.method == "dykaf" && r.metric == "hessian_gap" && r.x == 4));
    }

    #[test]
    fn training_reduces_loss() {
        let cfg = ExperimentConfig {
            hyperparams: crate::optim::Hyperparams {
                learning_rate: 0.05,
                ..Default::default()
            },
            steps: Some(40),
            ..tiny()
        };
        let recs = run_train(&cfg).unwrap();
        let loss: Vec<f64> = recs
            .iter()
            .filter(|r| r.metric == "loss")
            .map(|r| r.value)
            .collect();
        assert_eq!(loss.len(), 40);
        assert!(loss[39] < loss[0]);
    }
}
