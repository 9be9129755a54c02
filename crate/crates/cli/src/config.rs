//! TOML run configuration. Relative paths resolve against the directory
//! holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use concept_fusion::classifiers::{ClassifierSpec, ModelSpec};
use concept_fusion::ensemble::{EnsembleStrategy, StackingMode};
use concept_fusion::DEFAULT_K;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_model")]
    pub classifier: ModelSpec,
    #[serde(default)]
    pub strategy: StrategyConfig,
    pub train: Option<DataConfig>,
    pub test: Option<DataConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub ablation: AblationConfig,
    #[serde(default)]
    pub compare: CompareConfig,
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_model() -> ModelSpec {
    ClassifierSpec::logreg(0).model
}

fn yes() -> bool {
    true
}

/// Like [`EnsembleStrategy`], but the stacking meta-classifier defaults to
/// the run's own classifier and takes the run seed.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategyConfig {
    ConfidenceSum {
        #[serde(default = "yes")]
        weighted: bool,
    },
    RankSum {
        #[serde(default = "yes")]
        weighted: bool,
    },
    Stacking {
        #[serde(default = "naive")]
        mode: StackingMode,
        meta: Option<ModelSpec>,
    },
}

fn naive() -> StackingMode {
    StackingMode::Naive
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig::ConfidenceSum { weighted: true }
    }
}

impl StrategyConfig {
    pub fn resolve(&self, classifier: &ModelSpec, seed: u64) -> EnsembleStrategy {
        match self {
            StrategyConfig::ConfidenceSum { weighted } => EnsembleStrategy::ConfidenceSum { weighted: *weighted },
            StrategyConfig::RankSum { weighted } => EnsembleStrategy::RankSum { weighted: *weighted },
            StrategyConfig::Stacking { mode, meta } => EnsembleStrategy::Stacking {
                mode: *mode,
                meta: ClassifierSpec::new(meta.clone().unwrap_or_else(|| classifier.clone()), seed),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub labels: Option<PathBuf>,
    pub groups: Vec<GroupFile>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    /// Where `ablate` and `compare` write their tables; stdout only if unset.
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    /// Defaults to nested prefixes of the groups ordered by priority.
    pub subsets: Option<Vec<Vec<String>>>,
    /// Defaults to the run's `[strategy]`.
    pub strategies: Option<Vec<StrategyConfig>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "naive")]
    pub stacking_mode: StackingMode,
    /// Also compare the four classifier families under `[strategy]`.
    #[serde(default)]
    pub classifiers: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { stacking_mode: StackingMode::Naive, classifiers: false }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config_at(origin, e.message().trim()))?;
        cfg.check(origin)?;
        Ok(cfg)
    }

    /// Reads, parses and validates; paths come back absolute or relative to
    /// the current directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config_at(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        cfg.rebase(path.parent().unwrap_or(Path::new("")));
        cfg.check_inputs_exist()?;
        Ok(cfg)
    }

    fn check(&self, origin: &Path) -> CliResult<()> {
        if self.k < 2 {
            return Err(CliError::config_at(origin, format!("k = {} but at least 2 folds are needed", self.k)));
        }
        self.classifier.validate().map_err(|e| CliError::config_at(origin, e))?;
        for section in [&self.train, &self.test].into_iter().flatten() {
            if section.groups.is_empty() {
                return Err(CliError::config_at(origin, "a data section lists no groups"));
            }
        }
        if let Some(subsets) = &self.ablation.subsets {
            if subsets.iter().any(Vec::is_empty) {
                return Err(CliError::config_at(origin, "ablation subsets must be non-empty"));
            }
        }
        Ok(())
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for section in [&mut self.train, &mut self.test].into_iter().flatten() {
            if let Some(l) = &mut section.labels {
                fix(l);
            }
            for g in &mut section.groups {
                fix(&mut g.path);
            }
        }
        for p in [&mut self.output.model, &mut self.output.predictions, &mut self.output.report].into_iter().flatten() {
            fix(p);
        }
    }

    fn check_inputs_exist(&self) -> CliResult<()> {
        for section in [&self.train, &self.test].into_iter().flatten() {
            for p in section.labels.iter().chain(section.groups.iter().map(|g| &g.path)) {
                if !p.is_file() {
                    return Err(CliError::data_at(p, "file not found"));
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn classifier_spec(&self) -> ClassifierSpec {
        ClassifierSpec::new(self.classifier.clone(), self.seed)
    }

    pub fn strategy(&self) -> EnsembleStrategy {
        self.strategy.resolve(&self.classifier, self.seed)
    }

    pub fn train_section(&self) -> CliResult<&DataConfig> {
        self.train.as_ref().ok_or_else(|| CliError::Config("missing [train] section".into()))
    }

    pub fn test_section(&self) -> CliResult<&DataConfig> {
        self.test.as_ref().ok_or_else(|| CliError::Config("missing [test] section".into()))
    }
}
