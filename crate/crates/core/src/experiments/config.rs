use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::optim::{Hyperparams, OptimizerKind};

/// Harness configuration. Every field has a default; JSON files and
/// `key=value` overrides may set any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When set, must name the experiment being run.
    pub experiment: Option<String>,
    pub seed: u64,
    /// Seeds `seed, seed + 1, …`.
    pub num_seeds: u64,
    /// Worker threads across seeds; output does not depend on it.
    pub jobs: usize,
    pub rows: usize,
    pub cols: usize,
    /// Per-experiment default when unset.
    pub steps: Option<usize>,
    pub ema_beta: f64,
    /// `F ← βF + (1 − β)ggᵀ` when true, `F ← βF + ggᵀ` otherwise.
    pub ema_normalized: bool,
    pub hyperparams: Hyperparams,
    pub optimizer: OptimizerKind,
    /// libsvm file; relative paths are resolved against `data_dir`.
    pub dataset: PathBuf,
    pub data_dir: Option<PathBuf>,
    pub synth_fallback: bool,
    pub synth_classes: usize,
    pub synth_features: usize,
    pub synth_count: usize,
    pub synth_separation: f64,
    pub sample_sizes: Vec<usize>,
    /// Uniform random minibatch size; full batch when unset.
    pub batch_size: Option<usize>,
    /// Divide the second moment by `1 − β₂^t` before rebuilding the Fisher
    /// estimate; the raw optimizer state is used otherwise.
    pub fisher_bias_correction: bool,
    /// Instances per randomized property suite.
    pub trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            num_seeds: 1,
            jobs: 1,
            rows: 32,
            cols: 32,
            steps: None,
            ema_beta: 0.9,
            ema_normalized: true,
            hyperparams: Hyperparams::default(),
            optimizer: OptimizerKind::Dykaf,
            dataset: PathBuf::from("mushrooms"),
            data_dir: None,
            synth_fallback: true,
            synth_classes: 4,
            synth_features: 16,
            synth_count: 2048,
            synth_separation: 1.0,
            sample_sizes: vec![64, 128, 256, 512, 1024],
            batch_size: None,
            fisher_bias_correction: false,
            trials: 100,
        }
    }
}

impl ExperimentConfig {
    /// Defaults, then `file`, then `overrides` (`key=value`, dotted keys reach
    /// into `hyperparams`). Values are parsed as JSON, falling back to a
    /// plain string.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::default()).map_err(config_err)?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let from_file: Value =
                serde_json::from_str(&text).map_err(|e| Error::Serialization {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })?;
            let Value::Object(entries) = from_file else {
                return Err(Error::Config(format!(
                    "{}: expected a JSON object",
                    path.display()
                )));
            };
            merge(&mut value, entries);
        }
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{item}' is not key=value")))?;
            set_path(&mut value, key.trim(), parse_value(raw.trim()))?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyperparams.validate()?;
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.num_seeds == 0 {
            return bad("num_seeds must be positive");
        }
        if self.rows == 0 || self.cols == 0 {
            return bad("rows and cols must be positive");
        }
        if !(0.0..1.0).contains(&self.ema_beta) {
            return bad("ema_beta must lie in [0, 1)");
        }
        if self.sample_sizes.contains(&0) || self.batch_size == Some(0) {
            return bad("sample sizes and batch_size must be positive");
        }
        if self.synth_classes < 2 || self.synth_features == 0 || self.synth_count == 0 {
            return bad("synthetic data needs at least 2 classes, 1 feature and 1 sample");
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.num_seeds)
            .map(|k| self.seed.wrapping_add(k))
            .collect()
    }

    pub fn steps_or(&self, default: usize) -> usize {
        self.steps.unwrap_or(default)
    }

    /// Errors when `experiment` is set to something other than `name`.
    pub fn check_experiment(&self, name: &str) -> Result<()> {
        match &self.experiment {
            Some(e) if e != name => Err(Error::Config(format!(
                "config is for experiment '{e}', not '{name}'"
            ))),
            _ => Ok(()),
        }
    }
}

fn config_err(e: serde_json::Error) -> Error {
    Error::Config(e.to_string())
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn merge(target: &mut Value, entries: Map<String, Value>) {
    for (k, v) in entries {
        match (target.get_mut(&k), v) {
            (Some(slot @ Value::Object(_)), Value::Object(inner)) => merge(slot, inner),
            (_, v) => {
                target[k.as_str()] = v;
            }
        }
    }
}

fn set_path(target: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut slot = target;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("empty key segment in '{key}'")));
        }
        let Value::Object(map) = slot else {
            return Err(Error::Config(format!(
                "'{key}' does not name a nested field"
            )));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        slot = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}
