//! Probabilistic multiclass classifiers sharing one contract: fit on a dense
//! matrix with class indices, then emit a [`ProbabilityVector`] per input row.

mod adaboost;
mod forest;
mod logreg;
mod stump;
mod svm;

use std::fmt;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{LabelSpace, ProbabilityVector};
use crate::error::{Error, Result};

pub use adaboost::{samme_alpha, AdaBoostConfig, AdaBoostModel, BoostRound};
pub use forest::{ForestConfig, ForestModel, Tree, TreeNode};
pub use logreg::{logreg_loss_grad, LogRegConfig, LogRegModel, LogRegParams};
pub use stump::{train_stump, DecisionStump, StumpFit, StumpTrainer};
pub use svm::{SvmConfig, SvmModel};

/// Anything that maps a feature row to class confidences.
pub trait ProbabilisticClassifier {
    fn n_classes(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn predict_proba(&self, x: ArrayView1<'_, f64>) -> Result<ProbabilityVector>;

    /// Argmax of [`predict_proba`](Self::predict_proba), lowest index on ties.
    fn predict(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        Ok(self.predict_proba(x)?.argmax())
    }

    fn predict_proba_rows(&self, x: ArrayView2<'_, f64>) -> Result<Vec<ProbabilityVector>> {
        x.rows().into_iter().map(|r| self.predict_proba(r)).collect()
    }
}

/// A training recipe producing a [`ProbabilisticClassifier`].
pub trait Learner: Sync {
    type Model: ProbabilisticClassifier + Send;

    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], labels: &LabelSpace) -> Result<Self::Model>;
}

/// Classifier family names, used for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    #[serde(rename = "logreg")]
    LogReg,
    LinearSvmOvr,
    #[serde(rename = "adaboost-stumps")]
    AdaBoostStumps,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] =
        [ClassifierKind::LogReg, ClassifierKind::LinearSvmOvr, ClassifierKind::AdaBoostStumps, ClassifierKind::RandomForest];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LogReg => "logreg",
            ClassifierKind::LinearSvmOvr => "linear-svm-ovr",
            ClassifierKind::AdaBoostStumps => "adaboost-stumps",
            ClassifierKind::RandomForest => "random-forest",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    #[serde(rename = "logreg")]
    LogReg(LogRegConfig),
    LinearSvmOvr(SvmConfig),
    #[serde(rename = "adaboost-stumps")]
    AdaBoostStumps(AdaBoostConfig),
    RandomForest(ForestConfig),
}

impl ModelSpec {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ModelSpec::LogReg(_) => ClassifierKind::LogReg,
            ModelSpec::LinearSvmOvr(_) => ClassifierKind::LinearSvmOvr,
            ModelSpec::AdaBoostStumps(_) => ClassifierKind::AdaBoostStumps,
            ModelSpec::RandomForest(_) => ClassifierKind::RandomForest,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::LogReg => ModelSpec::LogReg(LogRegConfig::default()),
            ClassifierKind::LinearSvmOvr => ModelSpec::LinearSvmOvr(SvmConfig::default()),
            ClassifierKind::AdaBoostStumps => ModelSpec::AdaBoostStumps(AdaBoostConfig::default()),
            ClassifierKind::RandomForest => ModelSpec::RandomForest(ForestConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::LogReg(c) => c.validate(),
            ModelSpec::LinearSvmOvr(c) => c.validate(),
            ModelSpec::AdaBoostStumps(c) => c.validate(),
            ModelSpec::RandomForest(c) => c.validate(),
        }
    }
}

/// Hyperparameters plus the seed for every randomized step of training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub model: ModelSpec,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(model: ModelSpec, seed: u64) -> Self {
        Self { model, seed }
    }

    pub fn default_for(kind: ClassifierKind, seed: u64) -> Self {
        Self::new(ModelSpec::default_for(kind), seed)
    }

    pub fn logreg(seed: u64) -> Self {
        Self::default_for(ClassifierKind::LogReg, seed)
    }

    pub fn kind(&self) -> ClassifierKind {
        self.model.kind()
    }

    /// Same hyperparameters, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { model: self.model.clone(), seed }
    }
}

/// Learned state of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedModel {
    #[serde(rename = "logreg")]
    LogReg(LogRegModel),
    LinearSvmOvr(SvmModel),
    #[serde(rename = "adaboost-stumps")]
    AdaBoostStumps(AdaBoostModel),
    RandomForest(ForestModel),
}

/// A trained classifier; immutable after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    spec: ClassifierSpec,
    label_space: LabelSpace,
    input_dim: usize,
    model: FittedModel,
}

impl FittedClassifier {
    /// Wraps already-learned parameters. The model's class count and input
    /// width must agree with `label_space` and `input_dim`.
    pub fn from_parts(spec: ClassifierSpec, label_space: LabelSpace, input_dim: usize, model: FittedModel) -> Result<Self> {
        let (m, d) = match &model {
            FittedModel::LogReg(p) => (p.n_classes(), p.input_dim()),
            FittedModel::LinearSvmOvr(p) => (p.n_classes(), p.input_dim()),
            FittedModel::AdaBoostStumps(p) => (p.n_classes(), p.input_dim()),
            FittedModel::RandomForest(p) => (p.n_classes(), p.input_dim()),
        };
        if m != label_space.len() {
            return Err(Error::DimensionMismatch { expected: label_space.len(), got: m });
        }
        if d != input_dim {
            return Err(Error::DimensionMismatch { expected: input_dim, got: d });
        }
        Ok(Self { spec, label_space, input_dim, model })
    }

    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn model(&self) -> &FittedModel {
        &self.model
    }
}

impl ProbabilisticClassifier for FittedClassifier {
    fn n_classes(&self) -> usize {
        self.label_space.len()
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn predict_proba(&self, x: ArrayView1<'_, f64>) -> Result<ProbabilityVector> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { group: "input".into(), row: 0, col });
        }
        Ok(match &self.model {
            FittedModel::LogReg(p) => p.predict_proba(x),
            FittedModel::LinearSvmOvr(p) => p.predict_proba(x),
            FittedModel::AdaBoostStumps(p) => p.predict_proba(x),
            FittedModel::RandomForest(p) => p.predict_proba(x),
        })
    }
}

impl Learner for ClassifierSpec {
    type Model = FittedClassifier;

    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], labels: &LabelSpace) -> Result<FittedClassifier> {
        train(self, x, y, labels)
    }
}

/// Trains the classifier described by `spec`. Deterministic in
/// `(spec, x, y)`.
pub fn train(spec: &ClassifierSpec, x: ArrayView2<'_, f64>, y: &[usize], labels: &LabelSpace) -> Result<FittedClassifier> {
    spec.model.validate()?;
    check_training_data(x, y, labels.len())?;
    let m = labels.len();
    let model = match &spec.model {
        ModelSpec::LogReg(cfg) => FittedModel::LogReg(logreg::fit(x, y, m, cfg).0),
        ModelSpec::LinearSvmOvr(cfg) => FittedModel::LinearSvmOvr(svm::fit(x, y, m, cfg, spec.seed)?),
        ModelSpec::AdaBoostStumps(cfg) => FittedModel::AdaBoostStumps(adaboost::fit(x, y, m, cfg)?),
        ModelSpec::RandomForest(cfg) => FittedModel::RandomForest(forest::fit(x, y, m, cfg, spec.seed)?),
    };
    Ok(FittedClassifier { spec: spec.clone(), label_space: labels.clone(), input_dim: x.ncols(), model })
}

pub(crate) fn check_training_data(x: ArrayView2<'_, f64>, y: &[usize], m: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    if x.ncols() == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= m) {
        return Err(Error::UnknownLabel(format!("class index {bad}")));
    }
    for ((row, col), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFiniteFeature { group: "input".into(), row, col });
        }
    }
    if distinct_classes(y) < 2 {
        return Err(Error::SingleClassData);
    }
    Ok(())
}

pub(crate) fn distinct_classes(y: &[usize]) -> usize {
    let mut seen: Vec<usize> = y.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> ProbabilityVector {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    ProbabilityVector::new(exps.into_iter().map(|e| e / sum).collect()).expect("softmax of finite input lies on the simplex")
}

pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax(&[0.0, 0.0, 0.0]);
        for &v in p.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_does_not_overflow() {
        let p = softmax(&[1000.0, 0.0]);
        assert!((p.as_slice()[0] - 1.0).abs() < 1e-12);
        assert!(p.as_slice()[1] < 1e-300);
    }

    proptest! {
        #[test]
        fn softmax_is_shift_invariant(z in prop::collection::vec(-50.0f64..50.0, 2..8), c in -500.0f64..500.0) {
            let a = softmax(&z);
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let b = softmax(&shifted);
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_class_is_rejected_for_every_kind() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]];
        let labels = LabelSpace::new(["a", "b"]).unwrap();
        for kind in ClassifierKind::ALL {
            let err = train(&ClassifierSpec::default_for(kind, 0), x.view(), &[1, 1, 1], &labels).unwrap_err();
            assert!(matches!(err, Error::SingleClassData), "{kind}: {err}");
        }
    }

    #[test]
    fn shape_and_finiteness_checks() {
        let labels = LabelSpace::new(["a", "b"]).unwrap();
        let spec = ClassifierSpec::logreg(0);
        let x = array![[0.0], [1.0]];
        assert!(matches!(train(&spec, x.view(), &[0], &labels), Err(Error::DimensionMismatch { .. })));
        let bad = array![[0.0], [f64::INFINITY]];
        assert!(matches!(train(&spec, bad.view(), &[0, 1], &labels), Err(Error::NonFiniteFeature { row: 1, col: 0, .. })));
        let model = train(&spec, x.view(), &[0, 1], &labels).unwrap();
        assert!(matches!(model.predict_proba(array![1.0, 2.0].view()), Err(Error::DimensionMismatch { expected: 1, got: 2 })));
    }

    #[test]
    fn every_kind_is_deterministic() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 13) % 11) as f64 + if i < 20 { 0.0 } else { 3.0 });
        let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let labels = LabelSpace::new(["a", "b"]).unwrap();
        for kind in ClassifierKind::ALL {
            let spec = ClassifierSpec::default_for(kind, 42);
            let a = train(&spec, x.view(), &y, &labels).unwrap();
            let b = train(&spec, x.view(), &y, &labels).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        for kind in ClassifierKind::ALL {
            let spec = ClassifierSpec::default_for(kind, 3);
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<ClassifierSpec>(&json).unwrap(), spec);
        }
    }

    #[test]
    fn model_spec_fields_default_and_typos_are_rejected() {
        let spec: ModelSpec = serde_json::from_str(r#"{"kind":"random-forest","trees":7}"#).unwrap();
        assert_eq!(spec, ModelSpec::RandomForest(ForestConfig { trees: 7, ..ForestConfig::default() }));
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"logreg","lamda":0.1}"#).is_err());
    }
}
