use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::distinct_classes;
use crate::data::argmax;
use crate::error::{Error, Result};

/// Depth-one tree: `x[feature_index] <= threshold` goes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature_index: usize,
    pub threshold: f64,
    pub left_class: usize,
    pub right_class: usize,
}

impl DecisionStump {
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> usize {
        if x[self.feature_index] <= self.threshold {
            self.left_class
        } else {
            self.right_class
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpFit {
    pub stump: DecisionStump,
    /// Weighted 0/1 error, in the units of the supplied weights.
    pub error: f64,
}

/// Caches per-feature sort orders so repeated fits (boosting rounds) only
/// pay for the sweep.
pub struct StumpTrainer<'a> {
    x: ArrayView2<'a, f64>,
    orders: Vec<Vec<usize>>,
}

impl<'a> StumpTrainer<'a> {
    pub fn new(x: ArrayView2<'a, f64>) -> Self {
        let orders = (0..x.ncols())
            .map(|f| {
                let mut idx: Vec<usize> = (0..x.nrows()).collect();
                idx.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { x, orders }
    }

    /// Exhaustive search over features, midpoint thresholds and class pairs
    /// for the minimum weighted error. Ties go to the lowest feature, then
    /// the lowest threshold, then the lowest class indices.
    pub fn fit(&self, y: &[usize], weights: &[f64], m: usize) -> Result<StumpFit> {
        let n = self.x.nrows();
        if y.len() != n || weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len().min(weights.len()) });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidHyperparameter("sample weights must be nonnegative with positive sum".into()));
        }
        if distinct_classes(y) < 2 {
            return Err(Error::SingleClassData);
        }
        let mut totals = vec![0.0; m];
        for (&c, &w) in y.iter().zip(weights) {
            totals[c] += w;
        }
        let total: f64 = totals.iter().sum();

        let mut best: Option<StumpFit> = None;
        let mut left = vec![0.0; m];
        let mut right = vec![0.0; m];
        for (f, order) in self.orders.iter().enumerate() {
            left.iter_mut().for_each(|v| *v = 0.0);
            right.copy_from_slice(&totals);
            for pos in 0..n - 1 {
                let i = order[pos];
                left[y[i]] += weights[i];
                right[y[i]] -= weights[i];
                let (lo, hi) = (self.x[[i, f]], self.x[[order[pos + 1], f]]);
                if lo >= hi {
                    continue;
                }
                let lc = argmax(&left);
                let rc = argmax(&right);
                let error = total - left[lc] - right[rc];
                if best.is_none_or(|b| error < b.error) {
                    best = Some(StumpFit {
                        stump: DecisionStump { feature_index: f, threshold: 0.5 * (lo + hi), left_class: lc, right_class: rc },
                        error,
                    });
                }
            }
        }
        // every feature constant: a single-class predictor
        Ok(best.unwrap_or_else(|| {
            let c = argmax(&totals);
            StumpFit {
                stump: DecisionStump { feature_index: 0, threshold: self.x[[0, 0]], left_class: c, right_class: c },
                error: total - totals[c],
            }
        }))
    }
}

/// One-shot stump fit; see [`StumpTrainer::fit`].
pub fn train_stump(x: ArrayView2<'_, f64>, y: &[usize], weights: &[f64], m: usize) -> Result<StumpFit> {
    StumpTrainer::new(x).fit(y, weights, m)
}
