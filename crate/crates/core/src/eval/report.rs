use std::fmt::Write;

use serde::Serialize;

use super::crossval::{FoldResult, Method};
use super::metrics::{AggregateMetrics, LabelMap};
use crate::corpus::LabelSet;
use crate::features::HaConfig;

/// One line of the machine-readable result stream.
#[derive(Debug, Clone, Serialize)]
pub struct FoldRecord<'a> {
    pub method: &'static str,
    pub n_l: usize,
    pub n_c: usize,
    pub fold: usize,
    pub repeat: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: LabelMap<'a>,
}

pub fn fold_records<'a>(method: Method, ha: &HaConfig, folds: &'a [FoldResult], labels: &'a LabelSet) -> Vec<FoldRecord<'a>> {
    folds
        .iter()
        .map(|f| FoldRecord {
            method: method.name(),
            n_l: ha.n_l,
            n_c: ha.n_c,
            fold: f.fold,
            repeat: f.repeat,
            accuracy: f.metrics.accuracy,
            macro_f1: f.metrics.macro_f1,
            per_class_f1: LabelMap {
                labels,
                values: &f.metrics.per_class_f1,
            },
        })
        .collect()
}

pub struct TableRow<'a> {
    pub name: String,
    pub aggregate: &'a AggregateMetrics,
}

/// Rows are methods or grid cells; columns are accuracy, macro-F1 and the
/// per-class F1 scores, all fold means to 4 decimals.
pub fn format_table(labels: &LabelSet, rows: &[TableRow<'_>]) -> String {
    let mut headers = vec!["method".to_string(), "accuracy".to_string(), "macro-F1".to_string()];
    headers.extend(labels.names().iter().map(|n| format!("F1({n})")));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.name.clone(),
                format!("{:.4}", r.aggregate.mean_accuracy),
                format!("{:.4}", r.aggregate.mean_macro_f1),
            ];
            cells.extend(r.aggregate.mean_per_class_f1.iter().map(|f| format!("{f:.4}")));
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..headers.len())
        .map(|i| body.iter().map(|row| row[i].len()).chain([headers[i].len()]).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
    };
    line(&headers);
    line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in &body {
        line(row);
    }
    out
}
