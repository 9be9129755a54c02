use std::io::Write;
use std::path::{Path, PathBuf};

use concept_fusion::ensemble::EnsembleStrategy;
use concept_fusion::eval::{
    ablate_with_members, compare_classifiers, evaluate_decisions, evaluate_strategies, nested_prefixes, priority_order,
};
use concept_fusion::persist::{load_ensemble, save_ensemble};
use concept_fusion::pipeline::{train_ensemble, train_members};
use concept_fusion::synth::{benchmark_spec, generate_split, SynthSpec, ViewSpec, BENCHMARK_TEST_PER_CLASS, BENCHMARK_TRAIN_PER_CLASS};
use concept_fusion::{MultiViewDataset, TrainedEnsemble};
use serde::Deserialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io;

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn required<'a>(explicit: Option<&'a Path>, configured: Option<&'a PathBuf>, what: &str) -> CliResult<&'a Path> {
    explicit
        .or(configured.map(PathBuf::as_path))
        .ok_or_else(|| CliError::Config(format!("no {what} path: pass a flag or set it under [output]")))
}

pub fn cmd_train(cfg: &RunConfig, model_out: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let model_path = required(model_out, cfg.output.model.as_ref(), "model")?;
    let train = io::read_dataset(cfg.train_section()?, None)?;
    let e = train_ensemble(&train, &cfg.classifier_spec(), cfg.strategy(), cfg.k, cfg.seed)?;
    save_ensemble(&e, model_path).map_err(|err| CliError::data_at(model_path, err))?;
    let mut text = String::from("group,dim,priority\n");
    for m in &e.members {
        text.push_str(&format!("{},{},{:.4}\n", m.group_name, m.input_dim, m.priority.value));
    }
    let p = e.priorities();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    text.push_str(&format!(
        "\ncv_folds,{}\nmean_priority,{mean:.4}\nmin_priority,{lo:.4}\nmax_priority,{hi:.4}\nstrategy,{}\nclassifier,{}\nfingerprint,{}\nmodel,{}\n",
        cfg.k,
        e.strategy.label(),
        e.spec.kind(),
        e.config_fingerprint,
        model_path.display()
    ));
    emit(out, &text)
}

fn load_model(path: &Path) -> CliResult<TrainedEnsemble> {
    load_ensemble(path).map_err(|e| CliError::data_at(path, e))
}

pub fn cmd_predict(cfg: &RunConfig, model: Option<&Path>, predictions_out: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let model_path = required(model, cfg.output.model.as_ref(), "model")?;
    let out_path = required(predictions_out, cfg.output.predictions.as_ref(), "predictions")?;
    let e = load_model(model_path)?;
    let views = io::read_views(cfg.test_section()?, None)?;
    let preds = e.predict(&views)?;
    io::write_predictions(out_path, &preds, &e.label_space)?;
    emit(out, &format!("predicted {} samples into {}\n", preds.len(), out_path.display()))
}

pub fn cmd_evaluate(predictions: &Path, labels: &Path, report_out: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let (space, rows) = io::read_predictions(predictions)?;
    let truth_rows = io::read_labels(labels)?;
    let mut truth_by_id = std::collections::HashMap::with_capacity(truth_rows.len());
    for (id, label) in &truth_rows {
        if truth_by_id.insert(id.as_str(), label.as_str()).is_some() {
            return Err(CliError::data_at(labels, format!("duplicate sample_id `{id}`")));
        }
    }
    if truth_rows.len() != rows.len() {
        return Err(CliError::Data(format!(
            "{} has {} rows but {} has {}",
            predictions.display(),
            rows.len(),
            labels.display(),
            truth_rows.len()
        )));
    }
    let mut decided = Vec::with_capacity(rows.len());
    let mut truth = Vec::with_capacity(rows.len());
    for (id, pred) in &rows {
        let t = truth_by_id.get(id.as_str()).ok_or_else(|| CliError::data_at(labels, format!("missing sample_id `{id}`")))?;
        let index = |path: &Path, name: &str| {
            space.index_of(name).ok_or_else(|| CliError::data_at(path, format!("label `{name}` is not a predicted class")))
        };
        decided.push(index(predictions, pred)?);
        truth.push(index(labels, t)?);
    }
    let report = evaluate_decisions(&decided, &truth, space.len())?;
    let text = report.to_text(space.names());
    if let Some(p) = report_out {
        io::write_bytes(p, text.as_bytes())?;
    }
    emit(out, &text)
}

fn load_train_test(cfg: &RunConfig) -> CliResult<(MultiViewDataset, MultiViewDataset)> {
    let train = io::read_dataset(cfg.train_section()?, None)?;
    let test = io::read_dataset(cfg.test_section()?, Some(&train.label_space))?;
    Ok((train, test))
}

fn report(cfg: &RunConfig, explicit: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult<()> {
    if let Some(p) = explicit.or(cfg.output.report.as_deref()) {
        io::write_bytes(p, text.as_bytes())?;
    }
    emit(out, text)
}

pub fn cmd_ablate(cfg: &RunConfig, report_out: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let (train, test) = load_train_test(cfg)?;
    let spec = cfg.classifier_spec();
    let strategies: Vec<EnsembleStrategy> = match &cfg.ablation.strategies {
        Some(list) => list.iter().map(|s| s.resolve(&cfg.classifier, cfg.seed)).collect(),
        None => vec![cfg.strategy()],
    };
    let members = train_members(&train, &spec, cfg.k, cfg.seed)?;
    let plan = match &cfg.ablation.subsets {
        Some(s) => s.clone(),
        None => nested_prefixes(&priority_order(&members)),
    };
    let r = ablate_with_members(&train, &test, &spec, &members, &strategies, &plan, cfg.k, cfg.seed)?;
    report(cfg, report_out, &r.to_text(), out)
}

pub fn cmd_compare(cfg: &RunConfig, report_out: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let (train, test) = load_train_test(cfg)?;
    let spec = cfg.classifier_spec();
    let five = EnsembleStrategy::five(cfg.compare.stacking_mode, spec.clone());
    let mut text = evaluate_strategies(&train, &test, &spec, &five, cfg.k, cfg.seed)?.to_text();
    if cfg.compare.classifiers {
        text.push('\n');
        text.push_str(&compare_classifiers(&train, &test, &cfg.strategy(), cfg.k, cfg.seed)?.to_text());
    }
    report(cfg, report_out, &text, out)
}

/// Generator recipe for `gen-data`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
    pub views: Vec<ViewSpec>,
}

impl GenSpec {
    pub fn benchmark(seed: u64) -> Self {
        let b = benchmark_spec(seed);
        Self {
            classes: b.classes,
            train_per_class: BENCHMARK_TRAIN_PER_CLASS,
            test_per_class: BENCHMARK_TEST_PER_CLASS,
            separation: b.separation,
            seed,
            views: b.views,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config_at(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config_at(path, e.message().trim()))
    }

    pub fn synth(&self) -> SynthSpec {
        SynthSpec {
            classes: self.classes,
            n_per_class: self.train_per_class + self.test_per_class,
            views: self.views.clone(),
            separation: self.separation,
            seed: self.seed,
        }
    }
}

fn run_toml(groups: &[String], seed: u64) -> String {
    let mut s = format!(
        "# Generated by `cfuse gen-data`.\nseed = {seed}\nk = 5\n\n[classifier]\nkind = \"logreg\"\n\n[strategy]\nkind = \"confidence-sum\"\nweighted = true\n"
    );
    for part in ["train", "test"] {
        s.push_str(&format!("\n[{part}]\nlabels = \"{part}_labels.csv\"\n"));
        for g in groups {
            s.push_str(&format!("\n[[{part}.groups]]\nname = \"{g}\"\npath = \"{part}_{g}.csv\"\n"));
        }
    }
    s.push_str("\n[output]\nmodel = \"model.cfm\"\npredictions = \"predictions.csv\"\n");
    s
}

/// Writes stratified train/test CSVs and a ready-to-run `run.toml`.
pub fn cmd_gendata(spec: &GenSpec, out_dir: &Path, out: &mut dyn Write) -> CliResult<()> {
    let (train, test) = generate_split(&spec.synth(), spec.train_per_class, spec.test_per_class)?;
    for (part, d) in [("train", &train), ("test", &test)] {
        for g in d.groups() {
            if g.name.contains(['/', '\\', '"']) {
                return Err(CliError::Config(format!("group name `{}` cannot be used as a file name", g.name)));
            }
            io::write_features(&out_dir.join(format!("{part}_{}.csv", g.name)), d.sample_ids(), &g.features)?;
        }
        io::write_labels(&out_dir.join(format!("{part}_labels.csv")), d.sample_ids(), &d.labels, &d.label_space)?;
    }
    let names: Vec<String> = train.views.group_names().into_iter().map(str::to_owned).collect();
    io::write_bytes(&out_dir.join("run.toml"), run_toml(&names, spec.seed).as_bytes())?;
    emit(
        out,
        &format!(
            "wrote {} train and {} test samples, {} groups, to {}\n",
            train.n_samples(),
            test.n_samples(),
            names.len(),
            out_dir.display()
        ),
    )
}
