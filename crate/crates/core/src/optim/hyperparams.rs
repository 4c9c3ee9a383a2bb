use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer hyperparameters shared by DyKAF and the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Eigenbases are refreshed on steps divisible by this.
    pub precond_frequency: u64,
    pub rank1_second_moment: bool,
    pub weight_decay: f64,
    pub bias_correction: bool,
    /// Eigenvalue floor for the Shampoo inverse roots and its initial `εI`.
    pub shampoo_matrix_eps: f64,
    /// Decay used when feeding gradients into the DyKAF factors; `beta1` if unset.
    pub factor_beta: Option<f64>,
    /// Optional EMA decay for the rank-1 second moment; unset means plain
    /// accumulation.
    pub second_moment_decay: Option<f64>,
    /// Shampoo factor decay; `1.0` accumulates.
    pub shampoo_decay: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            precond_frequency: 10,
            rank1_second_moment: false,
            weight_decay: 0.0,
            bias_correction: true,
            shampoo_matrix_eps: 1e-12,
            factor_beta: None,
            second_moment_decay: None,
            shampoo_decay: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn factor_beta(&self) -> f64 {
        self.factor_beta.unwrap_or(self.beta1)
    }

    pub fn validate(&self) -> Result<()> {
        let open01 = |x: f64| x > 0.0 && x < 1.0;
        let checks = [
            (
                self.learning_rate >= 0.0 && self.learning_rate.is_finite(),
                "learning_rate must be >= 0",
            ),
            (
                open01(self.beta1) || self.beta1 == 0.0,
                "beta1 must lie in [0, 1)",
            ),
            (
                open01(self.beta2) || self.beta2 == 0.0,
                "beta2 must lie in [0, 1)",
            ),
            (self.epsilon > 0.0, "epsilon must be > 0"),
            (
                self.precond_frequency > 0,
                "precond_frequency must be positive",
            ),
            (self.weight_decay >= 0.0, "weight_decay must be >= 0"),
            (
                self.shampoo_matrix_eps > 0.0,
                "shampoo_matrix_eps must be > 0",
            ),
            (
                self.factor_beta.is_none_or(|b| (0.0..1.0).contains(&b)),
                "factor_beta must lie in [0, 1)",
            ),
            (
                self.second_moment_decay
                    .is_none_or(|b| (0.0..1.0).contains(&b)),
                "second_moment_decay must lie in [0, 1)",
            ),
            (
                self.shampoo_decay > 0.0 && self.shampoo_decay <= 1.0,
                "shampoo_decay must lie in (0, 1]",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).to_string())),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let hp = Hyperparams::default();
        hp.validate().unwrap();
        assert_eq!(hp.factor_beta(), 0.9);
        let bad = Hyperparams {
            beta2: 1.0,
            ..Hyperparams::default()
        };
        assert!(bad.validate().is_err());
        let hp: Hyperparams =
            serde_json::from_str(r#"{"beta1": 0.5, "factor_beta": 0.99}"#).unwrap();
        assert_eq!(hp.factor_beta(), 0.99);
        assert_eq!(hp.precond_frequency, 10);
        assert!(serde_json::from_str::<Hyperparams>(r#"{"lr": 1}"#).is_err());
    }
}
