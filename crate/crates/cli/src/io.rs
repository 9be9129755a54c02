//! CSV formats. Feature files: `sample_id,f0,f1,...`, one per group.
//! Labels: `sample_id,label`. Predictions:
//! `sample_id,prediction,score_<class>...`. Files are joined on sample_id.

use std::collections::HashMap;
use std::path::Path;

use concept_fusion::data::{ConceptGroupView, FeatureViews, LabelSpace, MultiViewDataset};
use concept_fusion::persist::write_atomic;
use concept_fusion::pipeline::Prediction;
use ndarray::Array2;

use crate::config::DataConfig;
use crate::error::{CliError, CliResult};

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| CliError::data_at(path, e))
}

fn row_error(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::data_at(path, format!("line {line}: {msg}"))
}

fn check_id_header(path: &Path, headers: &csv::StringRecord) -> CliResult<()> {
    if headers.get(0) != Some("sample_id") {
        return Err(CliError::data_at(path, "first column must be `sample_id`"));
    }
    Ok(())
}

/// Rows of one feature file, in file order.
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub values: Array2<f64>,
}

pub fn read_features(path: &Path) -> CliResult<FeatureTable> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::data_at(path, e))?.clone();
    check_id_header(path, &headers)?;
    let d = headers.len() - 1;
    if d == 0 {
        return Err(CliError::data_at(path, "no feature columns"));
    }
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::data_at(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        ids.push(record[0].to_owned());
        for (j, field) in record.iter().skip(1).enumerate() {
            let v: f64 =
                field.parse().map_err(|_| row_error(path, line, format!("column `{}`: `{field}` is not a number", &headers[j + 1])))?;
            if !v.is_finite() {
                return Err(row_error(path, line, format!("column `{}`: non-finite value", &headers[j + 1])));
            }
            flat.push(v);
        }
    }
    let values = Array2::from_shape_vec((ids.len(), d), flat).expect("csv enforces equal record lengths");
    Ok(FeatureTable { ids, values })
}

pub fn read_labels(path: &Path) -> CliResult<Vec<(String, String)>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::data_at(path, e))?.clone();
    check_id_header(path, &headers)?;
    if headers.len() != 2 {
        return Err(CliError::data_at(path, "expected columns `sample_id,label`"));
    }
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| CliError::data_at(path, e))?;
            Ok((r[0].to_owned(), r[1].to_owned()))
        })
        .collect()
}

/// Position of each id in `ids`; duplicates are errors.
fn index_ids(path: &Path, ids: &[String]) -> CliResult<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(CliError::data_at(path, format!("duplicate sample_id `{id}`")));
        }
    }
    Ok(index)
}

/// Reorders `table` to follow `order`; ids missing on either side are errors.
fn align(path: &Path, table: FeatureTable, order: &[String]) -> CliResult<Array2<f64>> {
    let index = index_ids(path, &table.ids)?;
    if table.ids.len() > order.len() {
        let known: std::collections::HashSet<&String> = order.iter().collect();
        let extra = table.ids.iter().find(|id| !known.contains(id)).expect("more ids than expected");
        return Err(CliError::data_at(path, format!("unexpected sample_id `{extra}`")));
    }
    let rows = order
        .iter()
        .map(|id| index.get(id).copied().ok_or_else(|| CliError::data_at(path, format!("missing sample_id `{id}`"))))
        .collect::<CliResult<Vec<usize>>>()?;
    Ok(table.values.select(ndarray::Axis(0), &rows))
}

/// Loads every group, ordered by `order` or else by the first group file.
pub fn read_views(section: &DataConfig, order: Option<Vec<String>>) -> CliResult<FeatureViews> {
    let mut tables = Vec::with_capacity(section.groups.len());
    for g in &section.groups {
        tables.push((g, read_features(&g.path)?));
    }
    let order = match order {
        Some(o) => o,
        None => {
            let (g, first) = &tables[0];
            index_ids(&g.path, &first.ids)?;
            first.ids.clone()
        }
    };
    let groups = tables
        .into_iter()
        .map(|(g, t)| Ok(ConceptGroupView::new(g.name.clone(), align(&g.path, t, &order)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let views = FeatureViews { sample_ids: order, groups };
    views.validate()?;
    Ok(views)
}

/// Labelled dataset in labels-file order. Without `label_space` the classes
/// observed in the labels file are used.
pub fn read_dataset(section: &DataConfig, label_space: Option<&LabelSpace>) -> CliResult<MultiViewDataset> {
    let labels_path = section.labels.as_ref().ok_or_else(|| CliError::Config("data section needs a `labels` file".into()))?;
    let rows = read_labels(labels_path)?;
    let ids: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
    index_ids(labels_path, &ids)?;
    let names: Vec<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    let space = match label_space {
        Some(s) => s.clone(),
        None => LabelSpace::from_observed(&names),
    };
    let labels = space.encode(&names).map_err(|e| CliError::data_at(labels_path, e))?;
    let views = read_views(section, Some(ids))?;
    MultiViewDataset::new(space, labels, views).map_err(|e| CliError::data_at(labels_path, e))
}

/// `%g`-style rendering with 6 significant digits.
pub fn format_score(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn to_csv(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::data_at(parent, e))?;
    }
    write_atomic(path, bytes).map_err(|e| CliError::data_at(path, e))
}

pub fn write_predictions(path: &Path, preds: &[Prediction], labels: &LabelSpace) -> CliResult<()> {
    let mut header = vec!["sample_id".to_owned(), "prediction".to_owned()];
    header.extend(labels.names().iter().map(|n| format!("score_{n}")));
    let rows = preds.iter().map(|p| {
        let mut r = vec![p.sample_id.clone(), labels.name(p.decided).to_owned()];
        r.extend(p.scores.as_slice().iter().map(|&s| format_score(s)));
        r
    });
    write_bytes(path, &to_csv(header, rows))
}

/// Predicted class names keyed by sample id, plus the class list from the
/// score columns.
pub fn read_predictions(path: &Path) -> CliResult<(LabelSpace, Vec<(String, String)>)> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::data_at(path, e))?.clone();
    check_id_header(path, &headers)?;
    if headers.get(1) != Some("prediction") {
        return Err(CliError::data_at(path, "second column must be `prediction`"));
    }
    let classes = headers
        .iter()
        .skip(2)
        .map(|h| h.strip_prefix("score_").map(str::to_owned).ok_or_else(|| CliError::data_at(path, format!("unexpected column `{h}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    let space = LabelSpace::new(classes).map_err(|e| CliError::data_at(path, e))?;
    let rows = rdr
        .records()
        .map(|r| {
            let r = r.map_err(|e| CliError::data_at(path, e))?;
            Ok((r[0].to_owned(), r[1].to_owned()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((space, rows))
}

/// Writes one group's features in the feature-file format. Values use the
/// shortest representation that parses back to the same float.
pub fn write_features(path: &Path, ids: &[String], values: &Array2<f64>) -> CliResult<()> {
    let mut header = vec!["sample_id".to_owned()];
    header.extend((0..values.ncols()).map(|j| format!("f{j}")));
    let rows = ids.iter().zip(values.rows()).map(|(id, row)| {
        let mut r = vec![id.clone()];
        r.extend(row.iter().map(|v| v.to_string()));
        r
    });
    write_bytes(path, &to_csv(header, rows))
}

pub fn write_labels(path: &Path, ids: &[String], labels: &[usize], space: &LabelSpace) -> CliResult<()> {
    let rows = ids.iter().zip(labels).map(|(id, &l)| vec![id.clone(), space.name(l).to_owned()]);
    write_bytes(path, &to_csv(vec!["sample_id".into(), "label".into()], rows))
}
