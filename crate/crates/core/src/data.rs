//! Domain data model: label spaces, concept-group views, multi-view datasets,
//! probability and score vectors, and the stratified fixed-count split.

use std::collections::HashSet;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Tolerance on the simplex sum of a [`ProbabilityVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Ordered set of class names. Index order is the lexicographic order of the
/// names, and a class index is the canonical encoding everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    class_names: Vec<String>,
}

impl LabelSpace {
    /// Builds a label space from distinct names; duplicates are rejected.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut class_names: Vec<String> = names.into_iter().map(Into::into).collect();
        class_names.sort();
        if let Some(w) = class_names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Duplicate(w[0].clone()));
        }
        Ok(Self { class_names })
    }

    /// Distinct names observed in `labels`, in canonical order.
    pub fn from_observed<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut class_names: Vec<String> = labels.iter().map(|s| s.as_ref().to_owned()).collect();
        class_names.sort();
        class_names.dedup();
        Self { class_names }
    }

    pub fn len(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.class_names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.class_names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.class_names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    /// Maps label strings to class indices.
    pub fn encode<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref()).ok_or_else(|| Error::UnknownLabel(l.as_ref().to_owned()))).collect()
    }
}

/// One concept group: a named dense feature matrix, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptGroupView {
    pub name: String,
    pub features: Array2<f64>,
}

impl ConceptGroupView {
    pub fn new(name: impl Into<String>, features: Array2<f64>) -> Self {
        Self { name: name.into(), features }
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn check_finite(&self) -> Result<()> {
        for ((row, col), v) in self.features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { group: self.name.clone(), row, col });
            }
        }
        Ok(())
    }
}

/// Aligned concept-group views without labels; row `i` of every group
/// describes `sample_ids[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureViews {
    pub sample_ids: Vec<String>,
    pub groups: Vec<ConceptGroupView>,
}

impl FeatureViews {
    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn group(&self, name: &str) -> Option<&ConceptGroupView> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn group_names(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.name.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let n = self.sample_ids.len();
        let mut seen = HashSet::with_capacity(n);
        for id in &self.sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Duplicate(id.clone()));
            }
        }
        let mut names = HashSet::new();
        for g in &self.groups {
            if !names.insert(g.name.as_str()) {
                return Err(Error::Duplicate(g.name.clone()));
            }
            if g.features.nrows() != n {
                return Err(Error::MisalignedGroup { group: g.name.clone(), rows: g.features.nrows(), expected: n });
            }
            if g.dim() == 0 {
                return Err(Error::DimensionMismatch { expected: 1, got: 0 });
            }
            g.check_finite()?;
        }
        Ok(())
    }

    /// Rows `rows`, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            groups: self.groups.iter().map(|g| ConceptGroupView::new(g.name.clone(), g.features.select(Axis(0), rows))).collect(),
        }
    }

    /// Keeps only the named groups, in the order given.
    pub fn restrict<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let groups = names
            .iter()
            .map(|n| self.group(n.as_ref()).cloned().ok_or_else(|| Error::UnknownGroupName(n.as_ref().to_owned())))
            .collect::<Result<_>>()?;
        Ok(Self { sample_ids: self.sample_ids.clone(), groups })
    }
}

/// Labels plus aligned concept-group feature matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiViewDataset {
    pub label_space: LabelSpace,
    pub labels: Vec<usize>,
    pub views: FeatureViews,
}

impl MultiViewDataset {
    /// Builds and validates a dataset.
    pub fn new(label_space: LabelSpace, labels: Vec<usize>, views: FeatureViews) -> Result<Self> {
        validate_dataset(Self { label_space, labels, views })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.label_space.len()
    }

    pub fn groups(&self) -> &[ConceptGroupView] {
        &self.views.groups
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.views.sample_ids
    }

    /// Per-class sample counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.n_classes())
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            label_space: self.label_space.clone(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            views: self.views.select(rows),
        }
    }

    pub fn restrict<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        Ok(Self { label_space: self.label_space.clone(), labels: self.labels.clone(), views: self.views.restrict(names)? })
    }
}

pub(crate) fn class_counts(labels: &[usize], m: usize) -> Vec<usize> {
    let mut counts = vec![0; m];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Checks every dataset invariant, returning the dataset unchanged when they hold.
pub fn validate_dataset(d: MultiViewDataset) -> Result<MultiViewDataset> {
    let n = d.labels.len();
    if d.views.sample_ids.len() != n {
        return Err(Error::LengthMismatch { left: d.views.sample_ids.len(), right: n });
    }
    d.views.validate()?;
    let m = d.n_classes();
    if let Some(&bad) = d.labels.iter().find(|&&l| l >= m) {
        return Err(Error::UnknownLabel(format!("class index {bad}")));
    }
    if let Some(c) = d.class_counts().iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(d.label_space.name(c).to_owned()));
    }
    Ok(d)
}

/// Relative tolerance under which two scores count as tied, so that float
/// rounding from weighting or rescaling cannot flip a decision.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the maximum entry. Entries within [`TIE_TOLERANCE`] (relative to
/// the largest magnitude) of the maximum are ties, which go to the lowest
/// index.
pub fn argmax(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = max - TIE_TOLERANCE * scale;
    values.iter().position(|&v| v >= floor).unwrap_or(0)
}

/// Per-class confidences on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidProbability(format!("entry {bad}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidProbability(format!("sum {sum}")));
        }
        Ok(Self(p))
    }

    /// `[1/m, ..., 1/m]`.
    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}

/// Unnormalized ensemble scores; finite, no simplex constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if let Some(bad) = s.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidProbability(format!("non-finite score {bad}")));
        }
        Ok(Self(s))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<ProbabilityVector> for ScoreVector {
    fn from(p: ProbabilityVector) -> Self {
        Self(p.0)
    }
}

/// Fixed per-class counts for a train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

/// Row indices chosen by [`stratified_split_indices`], ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws exactly `train_per_class` and `test_per_class` rows per class,
/// without replacement.
pub fn stratified_split_indices(labels: &[usize], label_space: &LabelSpace, spec: &SplitSpec) -> Result<SplitIndices> {
    if spec.train_per_class == 0 || spec.test_per_class == 0 {
        return Err(Error::BadSplit("per-class counts must be at least 1".into()));
    }
    let needed = spec.train_per_class + spec.test_per_class;
    let mut rng = rng::stream(spec.seed, streams::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..label_space.len() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < needed {
            return Err(Error::InsufficientClassPopulation { class: label_space.name(c).to_owned(), needed, available: members.len() });
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..spec.train_per_class]);
        test.extend_from_slice(&members[spec.train_per_class..needed]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Stratified fixed-count split. Rows keep their original relative order.
pub fn stratified_split(d: &MultiViewDataset, spec: &SplitSpec) -> Result<(MultiViewDataset, MultiViewDataset)> {
    let idx = stratified_split_indices(&d.labels, &d.label_space, spec)?;
    Ok((d.select(&idx.train), d.select(&idx.test)))
}
