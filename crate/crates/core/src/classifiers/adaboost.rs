//! Multiclass AdaBoost (SAMME) over decision stumps.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::softmax;
use super::stump::{DecisionStump, StumpTrainer};
use crate::data::ProbabilityVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaBoostConfig {
    pub rounds: usize,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self { rounds: 100 }
    }
}

impl AdaBoostConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidHyperparameter("adaboost rounds must be >= 1".into()));
        }
        Ok(())
    }
}

/// Error floor used when a round classifies every sample correctly.
const MIN_ERROR: f64 = 1e-10;

/// Round weight `ln((1 - err) / err) + ln(m - 1)`, or `None` when the stump
/// is no better than chance (`err >= (m - 1) / m`).
pub fn samme_alpha(err: f64, m: usize) -> Option<f64> {
    let chance = (m - 1) as f64 / m as f64;
    if err >= chance {
        return None;
    }
    let err = err.max(MIN_ERROR);
    Some(((1.0 - err) / err).ln() + ((m - 1) as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub stump: DecisionStump,
    pub alpha: f64,
    /// Weighted training error of the stump (weights normalized to sum 1).
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub rounds: Vec<BoostRound>,
    n_classes: usize,
    input_dim: usize,
}

impl AdaBoostModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `F(x, k) = sum_t alpha_t [stump_t(x) = k]`.
    pub fn class_scores(&self, x: ArrayView1<'_, f64>) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_classes];
        for r in &self.rounds {
            scores[r.stump.predict(x)] += r.alpha;
        }
        scores
    }

    /// `softmax(F / sum alpha)`; uniform when no round was kept.
    pub(crate) fn predict_proba(&self, x: ArrayView1<'_, f64>) -> ProbabilityVector {
        let total: f64 = self.rounds.iter().map(|r| r.alpha).sum();
        if total <= 0.0 {
            return ProbabilityVector::uniform(self.n_classes);
        }
        let scores: Vec<f64> = self.class_scores(x).into_iter().map(|s| s / total).collect();
        softmax(&scores)
    }
}

pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[usize], m: usize, cfg: &AdaBoostConfig) -> Result<AdaBoostModel> {
    let n = x.nrows();
    let trainer = StumpTrainer::new(x);
    let mut weights = vec![1.0 / n as f64; n];
    let mut rounds = Vec::new();
    for _ in 0..cfg.rounds {
        let fit = trainer.fit(y, &weights, m)?;
        let Some(alpha) = samme_alpha(fit.error, m) else {
            break;
        };
        rounds.push(BoostRound { stump: fit.stump, alpha, error: fit.error });
        if fit.error <= 0.0 {
            break;
        }
        let boost = alpha.exp();
        for (i, w) in weights.iter_mut().enumerate() {
            if fit.stump.predict(x.row(i)) != y[i] {
                *w *= boost;
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
    }
    Ok(AdaBoostModel { rounds, n_classes: m, input_dim: x.ncols() })
}
