//! Stratified k-fold plans and concept-priority estimation.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Learner, ProbabilisticClassifier};
use crate::data::{class_counts, LabelSpace};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

pub const DEFAULT_K: usize = 5;

/// Fold index per sample. Within each class, fold sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train rows, held-out rows)` for fold `f`, both ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Shuffles each class with a seeded stream and deals its members round-robin
/// into folds. The dealing position carries over between classes so total
/// fold sizes stay balanced too.
pub fn make_folds(y: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    folds_impl(y, k, seed, |c| format!("class index {c}"))
}

/// Like [`make_folds`], but errors name the class from `labels`.
pub fn make_folds_labeled(y: &[usize], labels: &LabelSpace, k: usize, seed: u64) -> Result<FoldPlan> {
    folds_impl(y, k, seed, |c| labels.names().get(c).cloned().unwrap_or_else(|| format!("class index {c}")))
}

fn folds_impl(y: &[usize], k: usize, seed: u64, class_name: impl Fn(usize) -> String) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::BadK(k));
    }
    let m = y.iter().copied().max().map_or(0, |c| c + 1);
    let counts = class_counts(y, m);
    if let Some((c, &available)) = counts.iter().enumerate().find(|(_, &n)| n > 0 && n < k) {
        return Err(Error::TooFewSamplesPerClass { class: class_name(c), available, k });
    }
    let mut rng = rng::stream(seed, streams::FOLDS);
    let mut assignments = vec![0; y.len()];
    let mut next = 0;
    for c in 0..m {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Estimated accuracy of one concept group's classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptPriority {
    pub group_name: String,
    pub value: f64,
}

/// Held-out top-1 accuracy on each fold, in fold order.
pub fn fold_accuracies<L: Learner>(
    learner: &L,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    labels: &LabelSpace,
    plan: &FoldPlan,
) -> Result<Vec<f64>> {
    if plan.assignments.len() != y.len() || x.nrows() != y.len() {
        return Err(Error::LengthMismatch { left: plan.assignments.len(), right: y.len() });
    }
    (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let (train_idx, test_idx) = plan.split(f);
            let xt = x.select(Axis(0), &train_idx);
            let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
            let model = learner.fit(xt.view(), &yt, labels)?;
            let mut correct = 0usize;
            for &i in &test_idx {
                if model.predict(x.row(i))? == y[i] {
                    correct += 1;
                }
            }
            Ok(correct as f64 / test_idx.len() as f64)
        })
        .collect()
}

/// Unweighted mean of the per-fold held-out accuracies.
pub fn concept_priority<L: Learner>(
    group_name: &str,
    learner: &L,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    labels: &LabelSpace,
    plan: &FoldPlan,
) -> Result<ConceptPriority> {
    let accs = fold_accuracies(learner, x, y, labels, plan)?;
    Ok(ConceptPriority { group_name: group_name.to_owned(), value: accs.iter().sum::<f64>() / accs.len() as f64 })
}
