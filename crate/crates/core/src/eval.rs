//! Accuracy metrics, strategy and classifier comparisons, and group-count
//! ablation. Report tables render as CSV with accuracies to 4 decimals.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, ClassifierSpec};
use crate::data::{validate_dataset, MultiViewDataset};
use crate::ensemble::{EnsembleStrategy, StackingMode};
use crate::error::{Error, Result};
use crate::pipeline::{assemble, train_concat_baseline, train_ensemble, train_members, GroupMember, Prediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the truth.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub n_test: usize,
}

impl EvaluationReport {
    pub fn n_classes(&self) -> usize {
        self.confusion.len()
    }

    /// `metric,value` lines followed by one row per class.
    pub fn to_text(&self, class_names: &[String]) -> String {
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "accuracy,{:.4}", self.accuracy);
        let _ = writeln!(out, "n_test,{}", self.n_test);
        out.push_str("\nclass,accuracy,confusion\n");
        for (c, row) in self.confusion.iter().enumerate() {
            let name = class_names.get(c).cloned().unwrap_or_else(|| c.to_string());
            let acc = self.per_class_accuracy[c].map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
            let counts: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{name},{acc},{}", counts.join(" "));
        }
        out
    }
}

/// Scores decided class indices against `truth` over `m` classes.
pub fn evaluate_decisions(decided: &[usize], truth: &[usize], m: usize) -> Result<EvaluationReport> {
    if decided.len() != truth.len() {
        return Err(Error::LengthMismatch { left: decided.len(), right: truth.len() });
    }
    if decided.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut confusion = vec![vec![0usize; m]; m];
    for (&p, &t) in decided.iter().zip(truth) {
        if p >= m || t >= m {
            return Err(Error::DimensionMismatch { expected: m, got: p.max(t) + 1 });
        }
        confusion[t][p] += 1;
    }
    let n_test = truth.len();
    let correct: usize = (0..m).map(|c| confusion[c][c]).sum();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect();
    Ok(EvaluationReport { accuracy: correct as f64 / n_test as f64, confusion, per_class_accuracy, n_test })
}

pub fn evaluate(preds: &[Prediction], truth: &[usize]) -> Result<EvaluationReport> {
    let m = preds.first().map_or(0, |p| p.scores.len());
    let decided: Vec<usize> = preds.iter().map(|p| p.decided).collect();
    evaluate_decisions(&decided, truth, m)
}

/// One `(row label, accuracy)` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub key: String,
    pub rows: Vec<(String, f64)>,
}

impl AccuracyTable {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|(l, _)| l == label).map(|r| r.1)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{},accuracy\n", self.key);
        for (label, acc) in &self.rows {
            let _ = writeln!(out, "{label},{acc:.4}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub subset: Vec<String>,
    pub strategy: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub entries: Vec<AblationEntry>,
}

impl AblationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("subset,size,strategy,accuracy\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{},{:.4}", e.subset.join("+"), e.subset.len(), e.strategy, e.accuracy);
        }
        out
    }
}

/// `[g0], [g0, g1], ...` over `names` in the given order.
pub fn nested_prefixes<S: AsRef<str>>(names: &[S]) -> Vec<Vec<String>> {
    (1..=names.len()).map(|n| names[..n].iter().map(|s| s.as_ref().to_owned()).collect()).collect()
}

/// Group names ordered by descending priority, ties by name.
pub fn priority_order(members: &[GroupMember]) -> Vec<String> {
    let mut ranked: Vec<(&str, f64)> = members.iter().map(|m| (m.group_name.as_str(), m.priority.value)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().map(|(n, _)| n.to_owned()).collect()
}

fn accuracy_of(e: &crate::pipeline::TrainedEnsemble, test: &MultiViewDataset) -> Result<f64> {
    Ok(evaluate(&e.predict(&test.views)?, &test.labels)?.accuracy)
}

/// Per-group members are trained once and shared across every cell. Group
/// classifiers are seeded by group name and the fold plan depends only on
/// the labels, so each cell equals training on its subset from scratch.
pub fn ablate(
    train: &MultiViewDataset,
    test: &MultiViewDataset,
    spec: &ClassifierSpec,
    strategies: &[EnsembleStrategy],
    subset_plan: &[Vec<String>],
    k: usize,
    seed: u64,
) -> Result<AblationReport> {
    let train = validate_dataset(train.clone())?;
    let members = train_members(&train, spec, k, seed)?;
    ablate_with_members(&train, test, spec, &members, strategies, subset_plan, k, seed)
}

/// [`ablate`] over members already trained on `train` with the same
/// `(spec, k, seed)`.
#[allow(clippy::too_many_arguments)]
pub fn ablate_with_members(
    train: &MultiViewDataset,
    test: &MultiViewDataset,
    spec: &ClassifierSpec,
    members: &[GroupMember],
    strategies: &[EnsembleStrategy],
    subset_plan: &[Vec<String>],
    k: usize,
    seed: u64,
) -> Result<AblationReport> {
    let all: Vec<String> = train.views.group_names().into_iter().map(str::to_owned).collect();
    if members.iter().map(|m| &m.group_name).ne(all.iter()) {
        return Err(Error::GroupSchemaMismatch {
            group: members.first().map(|m| m.group_name.clone()).unwrap_or_default(),
            reason: "members do not match the training groups".into(),
        });
    }
    let mut plan: Vec<Vec<String>> = Vec::with_capacity(subset_plan.len() + 1);
    for subset in subset_plan {
        if subset.is_empty() {
            return Err(Error::BadSpec("ablation subset is empty".into()));
        }
        if let Some(unknown) = subset.iter().find(|n| !all.contains(n)) {
            return Err(Error::UnknownGroupName(unknown.clone()));
        }
        plan.push(subset.clone());
    }
    let covers_all = |s: &Vec<String>| s.len() == all.len() && all.iter().all(|n| s.contains(n));
    if !plan.iter().any(covers_all) {
        plan.push(all.clone());
    }
    let cells: Vec<(usize, usize)> = (0..plan.len()).flat_map(|s| (0..strategies.len()).map(move |t| (s, t))).collect();
    let entries = cells
        .par_iter()
        .map(|&(s, t)| {
            let subset = &plan[s];
            let sub_train = train.restrict(subset)?;
            let sub_test = test.restrict(subset)?;
            let sub_members: Vec<GroupMember> =
                subset.iter().map(|n| members.iter().find(|m| &m.group_name == n).cloned().expect("validated subset")).collect();
            let e = assemble(sub_members, &sub_train, spec, strategies[t].clone(), k, seed)?;
            Ok(AblationEntry { subset: subset.clone(), strategy: strategies[t].label(), accuracy: accuracy_of(&e, &sub_test)? })
        })
        .collect::<Result<_>>()?;
    Ok(AblationReport { entries })
}

/// Accuracy of each strategy over one shared set of group members.
pub fn evaluate_strategies(
    train: &MultiViewDataset,
    test: &MultiViewDataset,
    spec: &ClassifierSpec,
    strategies: &[EnsembleStrategy],
    k: usize,
    seed: u64,
) -> Result<AccuracyTable> {
    let train = validate_dataset(train.clone())?;
    let members = train_members(&train, spec, k, seed)?;
    let rows = strategies
        .par_iter()
        .map(|s| {
            let e = assemble(members.clone(), &train, spec, s.clone(), k, seed)?;
            Ok((s.label(), accuracy_of(&e, test)?))
        })
        .collect::<Result<_>>()?;
    Ok(AccuracyTable { key: "strategy".into(), rows })
}

/// The five strategies. Stacking is naive, with a meta-classifier of the
/// same family and hyperparameters as the group classifiers.
pub fn compare_strategies(
    train: &MultiViewDataset,
    test: &MultiViewDataset,
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
) -> Result<AccuracyTable> {
    let strategies = EnsembleStrategy::five(StackingMode::Naive, spec.clone());
    evaluate_strategies(train, test, spec, &strategies, k, seed)
}

/// One row per classifier family, each with its default hyperparameters.
pub fn compare_classifiers(
    train: &MultiViewDataset,
    test: &MultiViewDataset,
    strategy: &EnsembleStrategy,
    k: usize,
    seed: u64,
) -> Result<AccuracyTable> {
    let rows = ClassifierKind::ALL
        .par_iter()
        .map(|&kind| {
            let spec = ClassifierSpec::default_for(kind, seed);
            let e = train_ensemble(train, &spec, strategy.clone(), k, seed)?;
            Ok((kind.as_str().to_owned(), accuracy_of(&e, test)?))
        })
        .collect::<Result<_>>()?;
    Ok(AccuracyTable { key: "classifier".into(), rows })
}

pub fn concat_baseline_accuracy(train: &MultiViewDataset, test: &MultiViewDataset, spec: &ClassifierSpec) -> Result<f64> {
    let base = train_concat_baseline(train, spec)?;
    let decided = base.predict(&test.views)?;
    Ok(evaluate_decisions(&decided, &test.labels, train.n_classes())?.accuracy)
}
