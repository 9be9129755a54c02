//! Late-fusion multi-view classification.
//!
//! Each concept group (feature view) gets its own probabilistic classifier.
//! Group outputs are fused per sample by confidence summation, rank
//! summation or a stacked meta-classifier, optionally weighted by each
//! group's cross-validated accuracy.
//!
//! ```
//! use concept_fusion::{default_benchmark, evaluate, train_ensemble, ClassifierSpec, EnsembleStrategy};
//!
//! let (train, test) = default_benchmark(0);
//! let e = train_ensemble(&train, &ClassifierSpec::logreg(0), EnsembleStrategy::RankSum { weighted: true }, 5, 0)?;
//! let preds = e.predict(&test.views)?;
//! assert!(evaluate(&preds, &test.labels)?.accuracy > 0.5);
//! # Ok::<(), concept_fusion::Error>(())
//! ```

pub mod classifiers;
pub mod crossval;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod persist;
pub mod pipeline;
pub mod rng;
pub mod standardize;
pub mod synth;

pub use classifiers::{ClassifierKind, ClassifierSpec, FittedClassifier, Learner, ModelSpec, ProbabilisticClassifier};
pub use crossval::{concept_priority, make_folds, ConceptPriority, FoldPlan, DEFAULT_K};
pub use data::{
    stratified_split, validate_dataset, ConceptGroupView, FeatureViews, LabelSpace, MultiViewDataset, ProbabilityVector, ScoreVector,
    SplitSpec,
};
pub use ensemble::{assign_ranks, confidence_sum, decide, rank_sum, EnsembleStrategy, RankVector, StackingMode};
pub use error::{Error, Result};
pub use eval::{ablate, compare_classifiers, compare_strategies, evaluate, AblationReport, AccuracyTable, EvaluationReport};
pub use persist::{load_ensemble, save_ensemble};
pub use pipeline::{predict, train_concat_baseline, train_ensemble, ConcatBaseline, Prediction, TrainedEnsemble};
pub use standardize::Standardizer;
pub use synth::{default_benchmark, generate, SynthSpec, ViewSpec};
