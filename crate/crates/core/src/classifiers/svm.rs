//! Linear one-vs-rest SVM with a single softmax temperature fitted on a
//! held-out calibration slice.
//!
//! Each binary subproblem minimizes `lambda/2 ||w||^2 + mean hinge` with
//! `lambda = 1 / (C n)`, which has the same minimizer as the classic
//! `1/2 ||w||^2 + C * sum hinge` primal. Optimization is full-batch
//! subgradient descent where a step is kept only if the objective drops, so
//! the objective is monotone across epochs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_data, distinct_classes, log_sum_exp, softmax};
use crate::crossval::make_folds;
use crate::data::{class_counts, ProbabilityVector};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Candidate regularization constants, tried in order; ties keep the earlier one.
    pub c_grid: Vec<f64>,
    /// Folds of the internal C-selection cross-validation.
    pub cv_folds: usize,
    pub max_epochs: usize,
    /// Fraction of each class held out for temperature fitting.
    pub calibration_fraction: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c_grid: vec![0.1, 1.0, 10.0], cv_folds: 3, max_epochs: 200, calibration_fraction: 0.2 }
    }
}

impl SvmConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidHyperparameter("svm c_grid must be non-empty with every C > 0".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidHyperparameter("svm cv_folds must be >= 2".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidHyperparameter("svm max_epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.calibration_fraction) {
            return Err(Error::InvalidHyperparameter("svm calibration_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

const MIN_INV_TEMPERATURE: f64 = 1e-3;
const MAX_INV_TEMPERATURE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// One hyperplane per class, `m x d`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Probabilities are `softmax(inv_temperature * margins)`.
    pub inv_temperature: f64,
    /// Regularization constant picked by internal cross-validation.
    pub c: f64,
}

impl SvmModel {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn margins(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.weights.dot(&x) + &self.bias
    }

    pub(crate) fn predict_proba(&self, x: ArrayView1<'_, f64>) -> ProbabilityVector {
        let z = self.margins(x) * self.inv_temperature;
        softmax(z.as_slice().expect("contiguous"))
    }
}

/// Hyperplane of one binary subproblem plus its objective after each epoch.
pub(crate) struct BinaryFit {
    pub weights: Array1<f64>,
    pub bias: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub objective_trace: Vec<f64>,
}

fn hinge_objective(w: &Array1<f64>, b: f64, x: ArrayView2<'_, f64>, signs: &[f64], lambda: f64) -> f64 {
    let margins = x.dot(w);
    let hinge: f64 = margins.iter().zip(signs).map(|(&m, &s)| (1.0 - s * (m + b)).max(0.0)).sum();
    0.5 * lambda * w.dot(w) + hinge / signs.len() as f64
}

pub(crate) fn fit_binary(x: ArrayView2<'_, f64>, signs: &[f64], c: f64, max_epochs: usize) -> BinaryFit {
    const MAX_HALVINGS: usize = 40;
    let n = x.nrows() as f64;
    let lambda = 1.0 / (c * n);
    let mut w = Array1::<f64>::zeros(x.ncols());
    let mut b = 0.0;
    let mut obj = hinge_objective(&w, b, x, signs, lambda);
    let mut trace = vec![obj];
    let mut step: f64 = 1.0;
    for _ in 0..max_epochs {
        let margins = x.dot(&w);
        let mut gw = &w * lambda;
        let mut gb = 0.0;
        for (i, (&mg, &s)) in margins.iter().zip(signs).enumerate() {
            if s * (mg + b) < 1.0 {
                gw.scaled_add(-s / n, &x.row(i));
                gb -= s / n;
            }
        }
        // allow the step to recover after earlier halvings
        step = (step * 2.0).min(1e6);
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand_w = &w - &(&gw * step);
            let cand_b = b - step * gb;
            let cand = hinge_objective(&cand_w, cand_b, x, signs, lambda);
            if cand < obj {
                w = cand_w;
                b = cand_b;
                obj = cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(obj);
    }
    BinaryFit { weights: w, bias: b, objective_trace: trace }
}

fn fit_ovr(x: ArrayView2<'_, f64>, y: &[usize], m: usize, c: f64, max_epochs: usize) -> (Array2<f64>, Array1<f64>) {
    let mut weights = Array2::zeros((m, x.ncols()));
    let mut bias = Array1::zeros(m);
    for k in 0..m {
        let signs: Vec<f64> = y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
        let fit = fit_binary(x, &signs, c, max_epochs);
        weights.row_mut(k).assign(&fit.weights);
        bias[k] = fit.bias;
    }
    (weights, bias)
}

fn ovr_accuracy(weights: &Array2<f64>, bias: &Array1<f64>, x: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
    let scores = x.dot(&weights.t()) + bias;
    let correct =
        scores.axis_iter(Axis(0)).zip(y).filter(|(row, &l)| crate::data::argmax(row.as_slice().expect("contiguous")) == l).count();
    correct as f64 / y.len() as f64
}

fn select_c(x: ArrayView2<'_, f64>, y: &[usize], m: usize, cfg: &SvmConfig, seed: u64) -> f64 {
    let counts = class_counts(y, m);
    let present_min = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    if cfg.c_grid.len() == 1 || present_min < cfg.cv_folds {
        return cfg.c_grid[cfg.c_grid.len() / 2];
    }
    let Ok(plan) = make_folds(y, cfg.cv_folds, rng::derive_seed(seed, streams::SVM_C_SELECTION)) else {
        return cfg.c_grid[cfg.c_grid.len() / 2];
    };
    let mut best = (f64::NEG_INFINITY, cfg.c_grid[0]);
    for &c in &cfg.c_grid {
        let mut total = 0.0;
        for f in 0..plan.k {
            let (train_idx, test_idx) = plan.split(f);
            let xt = x.select(Axis(0), &train_idx);
            let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
            let (w, b) = fit_ovr(xt.view(), &yt, m, c, cfg.max_epochs);
            let xv = x.select(Axis(0), &test_idx);
            let yv: Vec<usize> = test_idx.iter().map(|&i| y[i]).collect();
            total += ovr_accuracy(&w, &b, xv.view(), &yv);
        }
        let mean = total / plan.k as f64;
        if mean > best.0 {
            best = (mean, c);
        }
    }
    best.1
}

/// Minimizes the calibration NLL of `softmax(beta * margins)` over `beta`.
/// The NLL is convex in `beta`, so the root of its derivative is bracketed
/// and bisected.
pub(crate) fn fit_inv_temperature(margins: &[Array1<f64>], y: &[usize]) -> f64 {
    if margins.is_empty() {
        return 1.0;
    }
    let derivative = |beta: f64| -> f64 {
        let mut total = 0.0;
        for (z, &l) in margins.iter().zip(y) {
            let scaled: Vec<f64> = z.iter().map(|v| v * beta).collect();
            let lse = log_sum_exp(&scaled);
            let expected: f64 = z.iter().zip(&scaled).map(|(zk, sk)| zk * (sk - lse).exp()).sum();
            total += expected - z[l];
        }
        total / margins.len() as f64
    };
    if derivative(MIN_INV_TEMPERATURE) >= 0.0 {
        return MIN_INV_TEMPERATURE;
    }
    let mut lo = MIN_INV_TEMPERATURE;
    let mut hi = 1.0;
    while derivative(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi >= MAX_INV_TEMPERATURE {
            return MAX_INV_TEMPERATURE;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if derivative(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stratified calibration hold-out: indices `(fit, calibrate)`. Classes with
/// a single sample stay entirely in the fit slice.
fn calibration_split(y: &[usize], m: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng::stream(seed, streams::SVM_CALIBRATION);
    let mut fit = Vec::new();
    let mut cal = Vec::new();
    for c in 0..m {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        members.shuffle(&mut rng);
        let held = ((members.len() as f64 * fraction).round() as usize).min(members.len().saturating_sub(1));
        cal.extend_from_slice(&members[..held]);
        fit.extend_from_slice(&members[held..]);
    }
    fit.sort_unstable();
    cal.sort_unstable();
    (fit, cal)
}

pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[usize], m: usize, cfg: &SvmConfig, seed: u64) -> Result<SvmModel> {
    let (mut fit_idx, mut cal_idx) = calibration_split(y, m, cfg.calibration_fraction, seed);
    let fit_y: Vec<usize> = fit_idx.iter().map(|&i| y[i]).collect();
    if distinct_classes(&fit_y) < 2 {
        fit_idx = (0..y.len()).collect();
        cal_idx.clear();
    }
    let xf = x.select(Axis(0), &fit_idx);
    let yf: Vec<usize> = fit_idx.iter().map(|&i| y[i]).collect();
    check_training_data(xf.view(), &yf, m)?;

    let c = select_c(xf.view(), &yf, m, cfg, seed);
    let (weights, bias) = fit_ovr(xf.view(), &yf, m, c, cfg.max_epochs);

    let cal_margins: Vec<Array1<f64>> = cal_idx.iter().map(|&i| weights.dot(&x.row(i)) + &bias).collect();
    let cal_y: Vec<usize> = cal_idx.iter().map(|&i| y[i]).collect();
    let inv_temperature = fit_inv_temperature(&cal_margins, &cal_y);
    Ok(SvmModel { weights, bias, inv_temperature, c })
}
