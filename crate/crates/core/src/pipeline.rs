//! End-to-end flow: per-group standardization, classifier training and
//! priority estimation on the training set, then per-sample fusion at
//! prediction time. Also hosts the feature-concatenation baseline.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{self, ClassifierSpec, FittedClassifier, ProbabilisticClassifier};
use crate::crossval::{concept_priority, make_folds_labeled, ConceptPriority};
use crate::data::{validate_dataset, FeatureViews, LabelSpace, MultiViewDataset, ProbabilityVector, ScoreVector};
use crate::ensemble::{
    confidence_sum, decide, meta_row, out_of_fold_probabilities, rank_sum, train_stacking, EnsembleStrategy, StackingMode, STACKING_FOLDS,
};
use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::standardize::Standardizer;

/// Everything learned for one concept group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMember {
    pub group_name: String,
    pub input_dim: usize,
    pub standardizer: Standardizer,
    pub classifier: FittedClassifier,
    pub priority: ConceptPriority,
}

/// A fully trained fusion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEnsemble {
    pub members: Vec<GroupMember>,
    pub strategy: EnsembleStrategy,
    /// Present iff the strategy is stacking.
    pub meta: Option<FittedClassifier>,
    pub label_space: LabelSpace,
    pub spec: ClassifierSpec,
    pub k: usize,
    pub seed: u64,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub sample_id: String,
    pub scores: ScoreVector,
    pub decided: usize,
    pub per_group_probs: Vec<ProbabilityVector>,
}

/// Seed of a group's classifier. Keyed by group name so a group trains
/// identically whatever other groups accompany it.
fn group_seed(spec: &ClassifierSpec, name: &str) -> u64 {
    rng::derive_seed(spec.seed, rng::stable_hash(name))
}

fn stacking_seed(seed: u64, name: &str) -> u64 {
    rng::derive_seed(rng::derive_seed(seed, streams::STACKING_FOLDS), rng::stable_hash(name))
}

/// Stable hash of everything that determines a trained ensemble.
pub fn config_fingerprint(spec: &ClassifierSpec, strategy: &EnsembleStrategy, k: usize, seed: u64, groups: &[(String, usize)]) -> String {
    #[derive(Serialize)]
    struct Fingerprinted<'a> {
        spec: &'a ClassifierSpec,
        strategy: &'a EnsembleStrategy,
        k: usize,
        seed: u64,
        groups: &'a [(String, usize)],
    }
    let canonical = serde_json::to_vec(&Fingerprinted { spec, strategy, k, seed, groups }).expect("fingerprint inputs serialize");
    hex::encode(Sha256::digest(&canonical))
}

/// Standardizes, trains and scores every group of `train`. Groups train
/// independently, in parallel; output order follows `train`'s groups.
pub fn train_members(train: &MultiViewDataset, spec: &ClassifierSpec, k: usize, seed: u64) -> Result<Vec<GroupMember>> {
    spec.model.validate()?;
    let plan = make_folds_labeled(&train.labels, &train.label_space, k, rng::derive_seed(seed, streams::PRIORITY_FOLDS))?;
    train
        .groups()
        .par_iter()
        .map(|g| {
            let standardizer = Standardizer::fit(g.features.view())?;
            let x = standardizer.apply(g.features.view())?;
            let group_spec = spec.with_seed(group_seed(spec, &g.name));
            let classifier = classifiers::train(&group_spec, x.view(), &train.labels, &train.label_space)?;
            let priority = concept_priority(&g.name, &group_spec, x.view(), &train.labels, &train.label_space, &plan)?;
            Ok(GroupMember { group_name: g.name.clone(), input_dim: g.dim(), standardizer, classifier, priority })
        })
        .collect()
}

/// Builds an ensemble from trained members, fitting the stacking
/// meta-classifier on `train` when the strategy asks for it. `members` must
/// cover `train`'s groups in order.
pub fn assemble(
    members: Vec<GroupMember>,
    train: &MultiViewDataset,
    spec: &ClassifierSpec,
    strategy: EnsembleStrategy,
    k: usize,
    seed: u64,
) -> Result<TrainedEnsemble> {
    if members.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    check_schema(&members, &train.views)?;
    let meta = match &strategy {
        EnsembleStrategy::Stacking { mode, meta } => {
            let per_group: Vec<Vec<ProbabilityVector>> = members
                .par_iter()
                .zip(train.groups().par_iter())
                .map(|(member, g)| {
                    let x = member.standardizer.apply(g.features.view())?;
                    match mode {
                        StackingMode::Naive => member.classifier.predict_proba_rows(x.view()),
                        StackingMode::OutOfFold => out_of_fold_probabilities(
                            member.classifier.spec(),
                            x.view(),
                            &train.labels,
                            &train.label_space,
                            STACKING_FOLDS,
                            stacking_seed(seed, &member.group_name),
                        ),
                    }
                })
                .collect::<Result<_>>()?;
            Some(train_stacking(&per_group, &train.labels, &train.label_space, meta)?)
        }
        _ => None,
    };
    let groups: Vec<(String, usize)> = members.iter().map(|m| (m.group_name.clone(), m.input_dim)).collect();
    let config_fingerprint = config_fingerprint(spec, &strategy, k, seed, &groups);
    Ok(TrainedEnsemble { members, strategy, meta, label_space: train.label_space.clone(), spec: spec.clone(), k, seed, config_fingerprint })
}

/// Trains a complete ensemble. Only `train` is read.
pub fn train_ensemble(
    train: &MultiViewDataset,
    spec: &ClassifierSpec,
    strategy: EnsembleStrategy,
    k: usize,
    seed: u64,
) -> Result<TrainedEnsemble> {
    let train = validate_dataset(train.clone())?;
    let members = train_members(&train, spec, k, seed)?;
    assemble(members, &train, spec, strategy, k, seed)
}

/// Test groups must match the trained groups by name, order and width.
fn check_schema(members: &[GroupMember], views: &FeatureViews) -> Result<()> {
    for (i, member) in members.iter().enumerate() {
        let Some(pos) = views.groups.iter().position(|g| g.name == member.group_name) else {
            return Err(Error::GroupSchemaMismatch { group: member.group_name.clone(), reason: "group is missing".into() });
        };
        if pos != i {
            return Err(Error::GroupSchemaMismatch {
                group: member.group_name.clone(),
                reason: format!("expected at position {i}, found at {pos}"),
            });
        }
        let dim = views.groups[pos].dim();
        if dim != member.input_dim {
            return Err(Error::GroupSchemaMismatch {
                group: member.group_name.clone(),
                reason: format!("expected {} features, found {dim}", member.input_dim),
            });
        }
    }
    if let Some(extra) = views.groups.get(members.len()) {
        return Err(Error::GroupSchemaMismatch { group: extra.name.clone(), reason: "group is not part of the trained schema".into() });
    }
    Ok(())
}

impl TrainedEnsemble {
    pub fn priorities(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.priority.value).collect()
    }

    pub fn group_names(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.group_name.as_str()).collect()
    }

    /// Fuses already-computed per-group probabilities for one sample.
    pub fn combine(&self, per_group: &[ProbabilityVector]) -> Result<ScoreVector> {
        let priorities = self.priorities();
        match &self.strategy {
            EnsembleStrategy::ConfidenceSum { weighted } => confidence_sum(per_group, &priorities, *weighted),
            EnsembleStrategy::RankSum { weighted } => rank_sum(per_group, &priorities, *weighted),
            EnsembleStrategy::Stacking { .. } => {
                let meta = self.meta.as_ref().ok_or_else(|| Error::CorruptModel("stacking ensemble without meta-classifier".into()))?;
                let row = ndarray::Array1::from(meta_row(per_group));
                Ok(meta.predict_proba(row.view())?.into())
            }
        }
    }

    /// Predicts every sample of `views`, in input order.
    pub fn predict(&self, views: &FeatureViews) -> Result<Vec<Prediction>> {
        check_schema(&self.members, views)?;
        views.validate()?;
        let standardized: Vec<Array2<f64>> =
            self.members.iter().zip(&views.groups).map(|(m, g)| m.standardizer.apply(g.features.view())).collect::<Result<_>>()?;
        (0..views.n_samples())
            .into_par_iter()
            .map(|i| {
                let per_group_probs = self
                    .members
                    .iter()
                    .zip(&standardized)
                    .map(|(m, x)| m.classifier.predict_proba(x.row(i)))
                    .collect::<Result<Vec<_>>>()?;
                let scores = self.combine(&per_group_probs)?;
                Ok(Prediction { sample_id: views.sample_ids[i].clone(), decided: decide(&scores), scores, per_group_probs })
            })
            .collect()
    }
}

pub fn predict(e: &TrainedEnsemble, test: &FeatureViews) -> Result<Vec<Prediction>> {
    e.predict(test)
}

/// Single classifier over the horizontally concatenated, per-group
/// standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatBaseline {
    pub standardizers: Vec<(String, Standardizer)>,
    pub classifier: FittedClassifier,
}

fn concat_standardized(parts: &[(String, Standardizer)], views: &FeatureViews) -> Result<Array2<f64>> {
    if views.groups.len() != parts.len() {
        let group = views
            .groups
            .get(parts.len())
            .map(|g| g.name.clone())
            .or_else(|| parts.get(views.groups.len()).map(|p| p.0.clone()))
            .unwrap_or_default();
        return Err(Error::GroupSchemaMismatch { group, reason: "group count differs from training".into() });
    }
    let blocks: Vec<Array2<f64>> = parts
        .iter()
        .zip(&views.groups)
        .map(|((name, s), g)| {
            if *name != g.name || s.dim() != g.dim() {
                return Err(Error::GroupSchemaMismatch { group: name.clone(), reason: "name or width differs from training".into() });
            }
            s.apply(g.features.view())
        })
        .collect::<Result<_>>()?;
    let views_: Vec<ArrayView2<'_, f64>> = blocks.iter().map(|b| b.view()).collect();
    Ok(concatenate(Axis(1), &views_).expect("aligned rows"))
}

impl ConcatBaseline {
    pub fn input_dim(&self) -> usize {
        self.classifier.input_dim()
    }

    pub fn predict(&self, views: &FeatureViews) -> Result<Vec<usize>> {
        let x = concat_standardized(&self.standardizers, views)?;
        x.rows().into_iter().map(|r| self.classifier.predict(r)).collect()
    }
}

pub fn train_concat_baseline(train: &MultiViewDataset, spec: &ClassifierSpec) -> Result<ConcatBaseline> {
    let train = validate_dataset(train.clone())?;
    let standardizers =
        train.groups().iter().map(|g| Ok((g.name.clone(), Standardizer::fit(g.features.view())?))).collect::<Result<Vec<_>>>()?;
    let x = concat_standardized(&standardizers, &train.views)?;
    let classifier = classifiers::train(spec, x.view(), &train.labels, &train.label_space)?;
    Ok(ConcatBaseline { standardizers, classifier })
}
