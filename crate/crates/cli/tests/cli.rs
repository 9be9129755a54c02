use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfuse")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Default benchmark files plus a trained model in a fresh directory.
fn trained(seed: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let o = cfuse(&["gen-data", "--out", s(dir.path()), "--seed", seed]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = dir.path().join("run.toml");
    let o = cfuse(&["train", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    (dir, cfg)
}

#[test]
fn train_writes_model_and_reports_priorities() {
    let (dir, cfg) = trained("1");
    assert!(dir.path().join("model.cfm").is_file());
    let o = cfuse(&["train", "--config", s(&cfg), "--model", s(&dir.path().join("other.cfm"))]);
    let text = stdout(&o);
    assert!(text.starts_with("group,dim,priority\n"));
    for g in ["informative_a", "informative_b", "weak", "noise"] {
        assert!(text.contains(&format!("\n{g},20,")), "{text}");
    }
    assert!(text.contains("mean_priority,"));
    assert!(dir.path().join("other.cfm").is_file());
}

#[test]
fn missing_labels_file_is_a_data_error_naming_the_path() {
    let (dir, cfg) = trained("2");
    fs::remove_file(dir.path().join("train_labels.csv")).unwrap();
    let o = cfuse(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("train_labels.csv"), "{}", stderr(&o));
}

#[test]
fn k_of_one_is_a_config_error() {
    let (_dir, cfg) = trained("3");
    let text = fs::read_to_string(&cfg).unwrap().replace("k = 5", "k = 1");
    fs::write(&cfg, text).unwrap();
    let o = cfuse(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_hyperparameter_leaves_no_model_behind() {
    let (dir, cfg) = trained("4");
    fs::remove_file(dir.path().join("model.cfm")).unwrap();
    let text = fs::read_to_string(&cfg).unwrap().replace("kind = \"logreg\"", "kind = \"random-forest\"\ntrees = 0");
    fs::write(&cfg, text).unwrap();
    let o = cfuse(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| !e.file_name().to_string_lossy().ends_with(".csv") && e.file_name() != "run.toml")
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn predict_writes_one_row_per_test_sample() {
    let (dir, cfg) = trained("5");
    let o = cfuse(&["predict", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let preds = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    let mut lines = preds.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 2 + 6);
    assert!(header.starts_with("sample_id,prediction,score_class_00"));
    assert_eq!(lines.count(), 120);
}

#[test]
fn wrong_group_schema_names_the_group() {
    let (_dir, cfg) = trained("6");
    let text = fs::read_to_string(&cfg).unwrap();
    // drop the last test group
    let cut = text.rfind("[[test.groups]]").unwrap();
    let end = text[cut..].find("\n\n").map_or(text.len(), |e| cut + e);
    fs::write(&cfg, format!("{}{}", &text[..cut], &text[end..])).unwrap();
    let o = cfuse(&["predict", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("noise"), "{}", stderr(&o));
}

#[test]
fn unreadable_model_is_a_data_error() {
    let (dir, cfg) = trained("7");
    let model = dir.path().join("model.cfm");
    let bytes = fs::read(&model).unwrap();
    fs::write(&model, &bytes[..bytes.len() / 3]).unwrap();
    let o = cfuse(&["predict", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("corrupt"), "{}", stderr(&o));
}

#[test]
fn evaluate_perfect_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.csv");
    let labels = dir.path().join("l.csv");
    fs::write(&preds, "sample_id,prediction,score_a,score_b\nx,a,1,0\ny,b,0,1\nz,b,0.2,0.8\n").unwrap();
    fs::write(&labels, "sample_id,label\nz,b\nx,a\ny,b\n").unwrap();
    let o = cfuse(&["evaluate", "--predictions", s(&preds), "--labels", s(&labels)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("accuracy,1.0000"));

    fs::write(&labels, "sample_id,label\nx,a\ny,b\n").unwrap();
    let o = cfuse(&["evaluate", "--predictions", s(&preds), "--labels", s(&labels)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_emits_five_strategy_rows() {
    let (_dir, cfg) = trained("8");
    let o = cfuse(&["compare", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "strategy,accuracy");
    assert_eq!(lines.len(), 6, "{text}");
    assert!(lines[5].starts_with("stacking-naive,"));
}

#[test]
fn ablate_defaults_to_priority_ordered_prefixes() {
    let (dir, cfg) = trained("9");
    let report = dir.path().join("ablation.csv");
    let o = cfuse(&["ablate", "--config", s(&cfg), "--out", s(&report)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text, stdout(&o));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[3].split(',').nth(1) == Some("4"));
    assert!(rows[3].split(',').next().unwrap().contains("noise"));
}

#[test]
fn ablation_subset_with_unknown_group_is_a_config_error() {
    let (_dir, cfg) = trained("10");
    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("\n[ablation]\nsubsets = [[\"informative_a\"], [\"sift\"]]\n");
    fs::write(&cfg, text).unwrap();
    let o = cfuse(&["ablate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sift"));
}

#[test]
fn row_order_in_files_is_irrelevant() {
    let (dir, cfg) = trained("11");
    assert!(cfuse(&["predict", "--config", s(&cfg)]).status.success());
    let before = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    // reverse the data rows of one test group
    let f = dir.path().join("test_weak.csv");
    let text = fs::read_to_string(&f).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].reverse();
    fs::write(&f, lines.join("\n") + "\n").unwrap();
    assert!(cfuse(&["predict", "--config", s(&cfg)]).status.success());
    assert_eq!(fs::read_to_string(dir.path().join("predictions.csv")).unwrap(), before);

    // and a missing id is an error naming the file
    lines.pop();
    fs::write(&f, lines.join("\n") + "\n").unwrap();
    let o = cfuse(&["predict", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("test_weak.csv"));
}

#[test]
fn malformed_number_names_file_and_line() {
    let (dir, cfg) = trained("12");
    let f = dir.path().join("train_weak.csv");
    let text = fs::read_to_string(&f).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut fields: Vec<String> = lines[3].split(',').map(str::to_owned).collect();
    fields[2] = "abc".into();
    lines[3] = fields.join(",");
    fs::write(&f, lines.join("\n") + "\n").unwrap();
    let o = cfuse(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("train_weak.csv") && err.contains("line 4"), "{err}");
}

#[test]
fn pipeline_is_deterministic_across_runs_and_thread_counts() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        assert!(cfuse(&["gen-data", "--out", s(d), "--seed", "13"]).status.success());
        let cfg = d.join("run.toml");
        assert!(cfuse(&["train", "--config", s(&cfg), "--threads", threads]).status.success());
        assert!(cfuse(&["predict", "--config", s(&cfg), "--threads", threads]).status.success());
        let eval = cfuse(&["evaluate", "--predictions", s(&d.join("predictions.csv")), "--labels", s(&d.join("test_labels.csv"))]);
        assert!(eval.status.success());
        (fs::read(d.join("predictions.csv")).unwrap(), stdout(&eval))
    };
    let a = run("1");
    let b = run("4");
    assert_eq!(a, b);
}

#[test]
fn gen_data_accepts_a_recipe() {
    let dir = tempfile::tempdir().unwrap();
    let recipe = dir.path().join("recipe.toml");
    fs::write(
        &recipe,
        "classes = 3\ntrain_per_class = 10\ntest_per_class = 5\nseparation = 2.0\nseed = 4\n\n[[views]]\nname = \"colour\"\ndim = 3\ninformativeness = 1.0\n\n[[views]]\nname = \"shape\"\ndim = 2\ninformativeness = 0.5\nscale = 3.0\n",
    )
    .unwrap();
    let out = dir.path().join("data");
    let o = cfuse(&["gen-data", "--config", s(&recipe), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("train_labels.csv")).unwrap().lines().count(), 31);
    assert!(out.join("test_shape.csv").is_file());
    assert!(cfuse(&["train", "--config", s(&out.join("run.toml"))]).status.success());

    fs::write(&recipe, "classes = 1\ntrain_per_class = 1\ntest_per_class = 1\nseparation = 1.0\nviews = []\n").unwrap();
    assert_eq!(cfuse(&["gen-data", "--config", s(&recipe), "--out", s(&out)]).status.code(), Some(2));
}
