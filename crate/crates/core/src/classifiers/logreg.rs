//! Multinomial logistic regression trained by full-batch gradient descent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, softmax};
use crate::data::ProbabilityVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    /// L2 penalty on the weight matrix (bias excluded).
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop once the relative loss decrease of an accepted step drops below this.
    pub tolerance: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { lambda: 1e-3, max_iter: 500, tolerance: 1e-8 }
    }
}

impl LogRegConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("logreg lambda must be > 0, got {}", self.lambda)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidHyperparameter("logreg max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Weight matrix (`d x m`) and per-class bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LogRegParams {
    pub fn zeros(d: usize, m: usize) -> Self {
        Self { weights: Array2::zeros((d, m)), bias: Array1::zeros(m) }
    }

    fn scaled_add(&self, step: f64, dir: &LogRegParams) -> LogRegParams {
        LogRegParams { weights: &self.weights + &(&dir.weights * step), bias: &self.bias + &(&dir.bias * step) }
    }
}

pub type LogRegModel = LogRegParams;

impl LogRegModel {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub(crate) fn predict_proba(&self, x: ArrayView1<'_, f64>) -> ProbabilityVector {
        let z = x.dot(&self.weights) + &self.bias;
        softmax(z.as_slice().expect("contiguous"))
    }
}

/// Mean cross-entropy plus `(lambda / 2) * ||W||^2`, and its exact gradient.
pub fn logreg_loss_grad(params: &LogRegParams, x: ArrayView2<'_, f64>, y: &[usize], lambda: f64) -> Result<(f64, LogRegParams)> {
    let (n, d) = x.dim();
    let m = params.bias.len();
    if params.weights.dim() != (d, m) {
        return Err(Error::DimensionMismatch { expected: d, got: params.weights.nrows() });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= m) {
        return Err(Error::DimensionMismatch { expected: m, got: bad + 1 });
    }
    Ok(loss_grad_unchecked(params, x, y, lambda))
}

fn loss_grad_unchecked(params: &LogRegParams, x: ArrayView2<'_, f64>, y: &[usize], lambda: f64) -> (f64, LogRegParams) {
    let n = x.nrows() as f64;
    let mut z = x.dot(&params.weights) + &params.bias;
    let mut nll = 0.0;
    for (mut row, &label) in z.axis_iter_mut(Axis(0)).zip(y) {
        let lse = log_sum_exp(row.as_slice().expect("contiguous"));
        nll += lse - row[label];
        // row becomes softmax - onehot
        row.mapv_inplace(|v| (v - lse).exp());
        row[label] -= 1.0;
    }
    let reg = 0.5 * lambda * params.weights.iter().map(|w| w * w).sum::<f64>();
    let grad_w = x.t().dot(&z) / n + &params.weights * lambda;
    let grad_b = z.sum_axis(Axis(0)) / n;
    (nll / n + reg, LogRegParams { weights: grad_w, bias: grad_b })
}

/// Gradient descent from zero with a step that only ever halves: a step is
/// accepted iff it lowers the loss. Returns the model and the loss after
/// initialization and after every accepted step.
pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[usize], m: usize, cfg: &LogRegConfig) -> (LogRegModel, Vec<f64>) {
    const MAX_HALVINGS: usize = 60;
    let mut params = LogRegParams::zeros(x.ncols(), m);
    let (mut loss, mut grad) = loss_grad_unchecked(&params, x, y, cfg.lambda);
    let mut trace = vec![loss];
    let mut step = 1.0;
    'outer: for _ in 0..cfg.max_iter {
        let mut halvings = 0;
        loop {
            let candidate = params.scaled_add(-step, &grad);
            let (cand_loss, cand_grad) = loss_grad_unchecked(&candidate, x, y, cfg.lambda);
            if cand_loss < loss {
                let rel = (loss - cand_loss) / loss.abs().max(f64::MIN_POSITIVE);
                params = candidate;
                loss = cand_loss;
                grad = cand_grad;
                trace.push(loss);
                if rel < cfg.tolerance {
                    break 'outer;
                }
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                break 'outer;
            }
            step *= 0.5;
        }
    }
    (params, trace)
}
