//! File formats: probability reports as JSON, everything tabular (labels,
//! training features, coupling tables, metrics, ROC points) as CSV with a
//! one-line header.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use evfuse::model::{Event, EventSpace, Interval};

use crate::error::CliError;
use crate::metrics::MetricsReport;

/// One event space as serialized in reports files and scenario configs.
/// `range` is `[lo, hi]` with `hi = null` for an unbounded event.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpaceDecl {
    pub feature_id: String,
    pub sensor_id: String,
    pub events: Vec<EventDecl>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EventDecl {
    pub label: String,
    pub range: Option<(f64, Option<f64>)>,
}

/// Reports file: declared event spaces plus per-sample raw probability
/// vectors keyed by feature id. Vectors cover the declared events only; any
/// missing mass is assigned to a synthetic complement atom when the file is
/// loaded.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportsFile {
    pub spaces: Vec<SpaceDecl>,
    pub samples: Vec<BTreeMap<String, Vec<f64>>>,
}

impl SpaceDecl {
    pub fn to_space(&self) -> Result<EventSpace, CliError> {
        let events = self
            .events
            .iter()
            .map(|e| {
                let range = match e.range {
                    Some((lo, Some(hi))) => Some(
                        Interval::new(lo, hi)
                            .map_err(|err| CliError::Data(err.to_string()))?,
                    ),
                    Some((lo, None)) => Some(
                        Interval::new(lo, f64::INFINITY)
                            .map_err(|err| CliError::Data(err.to_string()))?,
                    ),
                    None => None,
                };
                Ok(Event {
                    label: e.label.clone(),
                    range,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        EventSpace::new(self.feature_id.clone(), self.sensor_id.clone(), events)
            .map_err(|e| CliError::Data(e.to_string()))
    }

    pub fn from_space(space: &EventSpace) -> SpaceDecl {
        SpaceDecl {
            feature_id: space.feature_id.clone(),
            sensor_id: space.sensor_id.clone(),
            events: space
                .events()
                .iter()
                .take(space.declared_len())
                .map(|e| EventDecl {
                    label: e.label.clone(),
                    range: e.range.map(|r| {
                        (r.lo, if r.hi.is_finite() { Some(r.hi) } else { None })
                    }),
                })
                .collect(),
        }
    }
}

pub fn open_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot open `{}`: {e}", path.display())))
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Usage(format!("cannot write `{}`: {e}", path.display())))
}

pub fn read_reports(path: &Path) -> Result<ReportsFile, CliError> {
    let text = open_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("bad reports file `{}`: {e}", path.display())))
}

pub fn write_reports(path: &Path, reports: &ReportsFile) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(reports)
        .map_err(|e| CliError::Data(format!("cannot encode reports: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

/// Labels CSV: `sample_index,class_label`, one row per sample in order.
pub fn read_labels(path: &Path) -> Result<Vec<String>, CliError> {
    let text = open_text(path)?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let idx: usize = parts
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| {
                CliError::Data(format!(
                    "bad sample index on line {} of `{}`",
                    lineno + 1,
                    path.display()
                ))
            })?;
        let label = parts
            .next()
            .ok_or_else(|| {
                CliError::Data(format!(
                    "missing class label on line {} of `{}`",
                    lineno + 1,
                    path.display()
                ))
            })?
            .trim()
            .to_string();
        if idx != labels.len() {
            return Err(CliError::Data(format!(
                "sample indices must be consecutive from 0; saw {idx} on line {}",
                lineno + 1
            )));
        }
        labels.push(label);
    }
    Ok(labels)
}

pub fn labels_to_csv(labels: &[String]) -> String {
    let mut out = String::from("sample_index,class_label\n");
    for (i, label) in labels.iter().enumerate() {
        out.push_str(&format!("{i},{label}\n"));
    }
    out
}

/// Training-feature CSV: header of feature ids, one row of feature values
/// per sample. Returned column-major with the header.
pub fn read_train_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = open_text(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("`{}` is empty", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(CliError::Data(format!(
                "row {} of `{}` has {} fields, expected {}",
                lineno + 2,
                path.display(),
                fields.len(),
                header.len()
            )));
        }
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "bad number `{}` in `{}` row {}",
                    field,
                    path.display(),
                    lineno + 2
                ))
            })?;
            columns[col].push(v);
        }
    }
    if columns.first().is_none_or(|c| c.is_empty()) {
        return Err(CliError::Data(format!(
            "`{}` declares no data rows",
            path.display()
        )));
    }
    Ok((header, columns))
}

pub fn train_matrix_to_csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Marginals file for `couple`: one probability vector per line,
/// comma-separated.
pub fn read_marginals(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = open_text(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "bad number `{}` on line {} of `{}`",
                    field,
                    lineno + 1,
                    path.display()
                ))
            })?;
            row.push(v);
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(CliError::Data(format!(
            "`{}` declares no marginals",
            path.display()
        )));
    }
    Ok(out)
}

/// Coupling table CSV: one row per cell, multi-index columns then the
/// probability.
pub fn coupling_to_csv(table: &evfuse::model::CouplingTable) -> String {
    let rank = table.rank();
    let mut header: Vec<String> = (0..rank).map(|i| format!("i{i}")).collect();
    header.push("p".to_string());
    let mut out = header.join(",");
    out.push('\n');
    table.for_each_cell(|idx, p| {
        for x in idx {
            out.push_str(&format!("{x},"));
        }
        out.push_str(&format!("{p}\n"));
    });
    out
}

/// Metrics CSV: one row per run plus `mean` and `stddev` rows. AUC columns
/// are empty for classes absent from the labels.
pub fn metrics_to_csv(runs: &[MetricsReport]) -> String {
    assert!(!runs.is_empty());
    let classes = &runs[0].class_labels;
    let mut header = vec!["run".to_string(), "accuracy".to_string()];
    for c in classes {
        header.push(format!("auc_{c}"));
    }
    for i in 0..classes.len() {
        for j in 0..classes.len() {
            header.push(format!("confusion_{i}_{j}"));
        }
    }
    let mut out = header.join(",");
    out.push('\n');

    // numeric rows: accuracy, aucs (NaN when undefined), confusion counts
    let numeric: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            let mut row = vec![r.accuracy];
            for (_, curve) in &r.roc {
                row.push(curve.as_ref().map_or(f64::NAN, |c| c.auc));
            }
            for line in &r.confusion {
                for &c in line {
                    row.push(c as f64);
                }
            }
            row
        })
        .collect();

    let fmt = |v: f64| -> String {
        if v.is_nan() {
            String::new()
        } else {
            format!("{v}")
        }
    };
    for (i, row) in numeric.iter().enumerate() {
        let fields: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        out.push_str(&format!("run_{i},{}\n", fields.join(",")));
    }
    let n = numeric.len() as f64;
    let cols = numeric[0].len();
    let mut means = vec![f64::NAN; cols];
    let mut stds = vec![f64::NAN; cols];
    for c in 0..cols {
        let vals: Vec<f64> = numeric.iter().map(|r| r[c]).filter(|v| !v.is_nan()).collect();
        if vals.is_empty() {
            continue;
        }
        let mean = vals.iter().sum::<f64>() / n;
        means[c] = mean;
        stds[c] = if vals.len() < 2 {
            0.0
        } else {
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len() as f64 - 1.0))
                .sqrt()
        };
    }
    let mean_fields: Vec<String> = means.iter().map(|&v| fmt(v)).collect();
    let std_fields: Vec<String> = stds.iter().map(|&v| fmt(v)).collect();
    out.push_str(&format!("mean,{}\n", mean_fields.join(",")));
    out.push_str(&format!("stddev,{}\n", std_fields.join(",")));
    out
}

/// ROC CSV: `run,class,fpr,tpr` per emitted point.
pub fn roc_to_csv(runs: &[MetricsReport]) -> String {
    let mut out = String::from("run,class,fpr,tpr\n");
    for (i, report) in runs.iter().enumerate() {
        for (class, curve) in &report.roc {
            if let Some(curve) = curve {
                for &(fpr, tpr) in &curve.points {
                    out.push_str(&format!("run_{i},{class},{fpr},{tpr}\n"));
                }
            }
        }
    }
    out
}

/// Loads event spaces from report declarations, checking them against the
/// spaces resolved from a definition file: same features, same event labels
/// in the same order.
pub fn check_spaces_match(
    defs_spaces: &[Arc<EventSpace>],
    reports: &ReportsFile,
) -> Result<(), CliError> {
    for space in defs_spaces {
        let decl = reports
            .spaces
            .iter()
            .find(|s| s.feature_id == space.feature_id)
            .ok_or_else(|| {
                CliError::Data(format!(
                    "reports file has no feature `{}`",
                    space.feature_id
                ))
            })?;
        let decl_labels: Vec<&str> = decl.events.iter().map(|e| e.label.as_str()).collect();
        let defs_labels: Vec<&str> = space
            .events()
            .iter()
            .take(space.declared_len())
            .map(|e| e.label.as_str())
            .collect();
        if decl_labels != defs_labels {
            return Err(CliError::Data(format!(
                "event labels for feature `{}` differ between definitions ({defs_labels:?}) \
                 and reports ({decl_labels:?})",
                space.feature_id
            )));
        }
    }
    Ok(())
}
