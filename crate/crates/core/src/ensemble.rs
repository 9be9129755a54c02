//! Late-fusion combination rules and the final decision.
//!
//! Five strategies are available: confidence summation and rank summation,
//! each with or without concept-priority weighting, plus a stacked
//! meta-classifier over the concatenated per-group probabilities.

use std::fmt;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ClassifierSpec, FittedClassifier, Learner, ProbabilisticClassifier};
use crate::crossval::make_folds_labeled;
use crate::data::{argmax, LabelSpace, ProbabilityVector, ScoreVector, TIE_TOLERANCE};
use crate::error::{Error, Result};

/// How stacking builds the meta-classifier's training rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StackingMode {
    /// In-sample probabilities of first-layer models fit on all training rows.
    Naive,
    /// Each row's probabilities come from first-layer models that never saw it.
    OutOfFold,
}

/// Folds used to produce out-of-fold meta features.
pub const STACKING_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnsembleStrategy {
    ConfidenceSum { weighted: bool },
    RankSum { weighted: bool },
    Stacking { mode: StackingMode, meta: ClassifierSpec },
}

impl EnsembleStrategy {
    /// The five strategies compared side by side: both sums with and without
    /// weighting, then stacking.
    pub fn five(stacking_mode: StackingMode, meta: ClassifierSpec) -> [EnsembleStrategy; 5] {
        [
            EnsembleStrategy::ConfidenceSum { weighted: true },
            EnsembleStrategy::ConfidenceSum { weighted: false },
            EnsembleStrategy::RankSum { weighted: true },
            EnsembleStrategy::RankSum { weighted: false },
            EnsembleStrategy::Stacking { mode: stacking_mode, meta },
        ]
    }

    pub fn is_stacking(&self) -> bool {
        matches!(self, EnsembleStrategy::Stacking { .. })
    }

    /// Stable short name used in reports.
    pub fn label(&self) -> String {
        match self {
            EnsembleStrategy::ConfidenceSum { weighted: true } => "confidence-sum-weighted".into(),
            EnsembleStrategy::ConfidenceSum { weighted: false } => "confidence-sum".into(),
            EnsembleStrategy::RankSum { weighted: true } => "rank-sum-weighted".into(),
            EnsembleStrategy::RankSum { weighted: false } => "rank-sum".into(),
            EnsembleStrategy::Stacking { mode: StackingMode::Naive, .. } => "stacking-naive".into(),
            EnsembleStrategy::Stacking { mode: StackingMode::OutOfFold, .. } => "stacking-out-of-fold".into(),
        }
    }
}

impl fmt::Display for EnsembleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Ranks 1 (lowest confidence) through m (highest); tied entries share the
/// mean of the positions they jointly occupy. Ties use the same tolerance as
/// [`decide`].
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector(Vec<f64>);

impl RankVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn assign_ranks(p: &ProbabilityVector) -> RankVector {
    let v = p.as_slice();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let tol = TIE_TOLERANCE * v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] - v[order[start]] <= tol {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    RankVector(ranks)
}

fn check_inputs(probs: &[ProbabilityVector], priorities: &[f64], weighted: bool) -> Result<usize> {
    let first = probs.first().ok_or(Error::EmptyEnsemble)?;
    let m = first.len();
    if let Some(p) = probs.iter().find(|p| p.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: p.len() });
    }
    if weighted {
        if priorities.len() != probs.len() {
            return Err(Error::LengthMismatch { left: priorities.len(), right: probs.len() });
        }
        if let Some(&bad) = priorities.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidPriority(bad));
        }
        if priorities.iter().all(|&w| w == 0.0) {
            return Err(Error::AllZeroPriorities);
        }
    }
    Ok(m)
}

fn weighted_sum<'a>(rows: impl Iterator<Item = (&'a [f64], f64)>, m: usize) -> Result<ScoreVector> {
    let mut s = vec![0.0; m];
    for (row, w) in rows {
        for (acc, &v) in s.iter_mut().zip(row) {
            *acc += w * v;
        }
    }
    ScoreVector::new(s)
}

/// `sum_g w_g p_g` with `w_g` the priority when `weighted`, else 1.
pub fn confidence_sum(probs: &[ProbabilityVector], priorities: &[f64], weighted: bool) -> Result<ScoreVector> {
    let m = check_inputs(probs, priorities, weighted)?;
    weighted_sum(probs.iter().enumerate().map(|(g, p)| (p.as_slice(), if weighted { priorities[g] } else { 1.0 })), m)
}

/// `sum_g w_g ranks(p_g)` with `w_g` as in [`confidence_sum`].
pub fn rank_sum(probs: &[ProbabilityVector], priorities: &[f64], weighted: bool) -> Result<ScoreVector> {
    let m = check_inputs(probs, priorities, weighted)?;
    let ranks: Vec<RankVector> = probs.iter().map(assign_ranks).collect();
    weighted_sum(ranks.iter().enumerate().map(|(g, r)| (r.as_slice(), if weighted { priorities[g] } else { 1.0 })), m)
}

/// Highest score wins; ties (see [`crate::data::argmax`]) go to the lowest
/// class index.
pub fn decide(s: &ScoreVector) -> usize {
    argmax(s.as_slice())
}

/// Horizontal concatenation of per-group probability rows:
/// `groups[g][i]` lands in row `i`, columns `g*m .. (g+1)*m`.
pub fn meta_features(groups: &[Vec<ProbabilityVector>]) -> Result<Array2<f64>> {
    let first = groups.first().ok_or(Error::EmptyEnsemble)?;
    let n = first.len();
    let m = first.first().map_or(0, ProbabilityVector::len);
    let mut out = Array2::zeros((n, groups.len() * m));
    for (g, rows) in groups.iter().enumerate() {
        if rows.len() != n {
            return Err(Error::LengthMismatch { left: rows.len(), right: n });
        }
        for (i, p) in rows.iter().enumerate() {
            if p.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: p.len() });
            }
            for (k, &v) in p.as_slice().iter().enumerate() {
                out[[i, g * m + k]] = v;
            }
        }
    }
    Ok(out)
}

/// Single meta-feature row for one sample.
pub fn meta_row(probs: &[ProbabilityVector]) -> Vec<f64> {
    probs.iter().flat_map(|p| p.as_slice().iter().copied()).collect()
}

/// Fits the stacking meta-classifier on concatenated first-layer
/// probabilities. `groups_probs_train[g][i]` is group `g`'s output for
/// training row `i`; priorities are not applied.
pub fn train_stacking(
    groups_probs_train: &[Vec<ProbabilityVector>],
    y: &[usize],
    labels: &LabelSpace,
    meta: &ClassifierSpec,
) -> Result<FittedClassifier> {
    let features = meta_features(groups_probs_train)?;
    if features.nrows() != y.len() {
        return Err(Error::LengthMismatch { left: features.nrows(), right: y.len() });
    }
    classifiers::train(meta, features.view(), y, labels)
}

/// Out-of-fold probabilities of one group: each row is predicted by a model
/// trained on the other folds.
pub fn out_of_fold_probabilities<L: Learner>(
    learner: &L,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    labels: &LabelSpace,
    k: usize,
    seed: u64,
) -> Result<Vec<ProbabilityVector>> {
    let plan = make_folds_labeled(y, labels, k, seed)?;
    let per_fold: Vec<(Vec<usize>, Vec<ProbabilityVector>)> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let (train_idx, held) = plan.split(f);
            let xt = x.select(Axis(0), &train_idx);
            let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
            let model = learner.fit(xt.view(), &yt, labels)?;
            let probs = held.iter().map(|&i| model.predict_proba(x.row(i))).collect::<Result<Vec<_>>>()?;
            Ok((held, probs))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Option<ProbabilityVector>> = vec![None; y.len()];
    for (held, probs) in per_fold {
        for (i, p) in held.into_iter().zip(probs) {
            out[i] = Some(p);
        }
    }
    Ok(out.into_iter().map(|p| p.expect("folds partition the rows")).collect())
}
