use serde::{Deserialize, Serialize};

use super::{
    adamw_step, dykaf_init, dykaf_step, shampoo_step, soap_step, AdamWState, DyKafParamState,
    Hyperparams, ShampooState, SoapState,
};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Dykaf,
    Soap,
    Shampoo,
    Adamw,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Dykaf => "dykaf",
            OptimizerKind::Soap => "soap",
            OptimizerKind::Shampoo => "shampoo",
            OptimizerKind::Adamw => "adamw",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dykaf" => Ok(Self::Dykaf),
            "soap" => Ok(Self::Soap),
            "shampoo" => Ok(Self::Shampoo),
            "adamw" => Ok(Self::Adamw),
            other => Err(Error::Config(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamState {
    Uninit,
    Dykaf(DyKafParamState),
    Soap(SoapState),
    Shampoo(ShampooState),
    Adamw(AdamWState),
}

/// Optimizer for a single parameter. DyKAF state is created from the first
/// gradient, which is then also used for the first step. Row or column
/// vectors always use AdamW.
#[derive(Debug, Clone)]
pub struct ParamOptimizer {
    pub kind: OptimizerKind,
    pub hp: Hyperparams,
    pub state: ParamState,
}

impl ParamOptimizer {
    pub fn new(kind: OptimizerKind, hp: Hyperparams) -> Result<Self> {
        hp.validate()?;
        Ok(Self {
            kind,
            hp,
            state: ParamState::Uninit,
        })
    }

    /// The optimizer actually used for a parameter of this shape.
    pub fn effective_kind(&self, rows: usize, cols: usize) -> OptimizerKind {
        if rows == 1 || cols == 1 {
            OptimizerKind::Adamw
        } else {
            self.kind
        }
    }

    pub fn step(&mut self, w: &mut DenseMatrix, g: &DenseMatrix) -> Result<()> {
        if let ParamState::Uninit = self.state {
            let (rows, cols) = g.shape();
            self.state = match self.effective_kind(rows, cols) {
                OptimizerKind::Dykaf => ParamState::Dykaf(dykaf_init(g, &self.hp)?),
                OptimizerKind::Soap => ParamState::Soap(SoapState::new(rows, cols, &self.hp)),
                OptimizerKind::Shampoo => {
                    ParamState::Shampoo(ShampooState::new(rows, cols, &self.hp))
                }
                OptimizerKind::Adamw => ParamState::Adamw(AdamWState::new(rows, cols)),
            };
        }
        let hp = &self.hp;
        let (state, w_next) = match &self.state {
            ParamState::Dykaf(s) => {
                let (s, w) = dykaf_step(s, w, g, hp)?;
                (ParamState::Dykaf(s), w)
            }
            ParamState::Soap(s) => {
                let (s, w) = soap_step(s, w, g, hp)?;
                (ParamState::Soap(s), w)
            }
            ParamState::Shampoo(s) => {
                let (s, w) = shampoo_step(s, w, g, hp)?;
                (ParamState::Shampoo(s), w)
            }
            ParamState::Adamw(s) => {
                let (s, w) = adamw_step(s, w, g, hp)?;
                (ParamState::Adamw(s), w)
            }
            ParamState::Uninit => unreachable!("state initialized above"),
        };
        self.state = state;
        *w = w_next;
        Ok(())
    }
}
