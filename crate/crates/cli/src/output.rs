use std::fmt::Write as _;

use revertgraph::history::{FeatureMatrix, LabelSet};
use revertgraph::pipeline::{render_table, ExperimentReport};
use revertgraph::selfcheck::SuiteResult;

use crate::Format;

/// Left-aligned columns separated by two spaces, with a rule under the header.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let Some(header) = rows.first() else {
        return String::new();
    };
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (k, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if k == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
        }
    }
    out
}

fn csv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join(",") + "\n").collect()
}

pub fn reports(reports: &[ExperimentReport], format: Format) -> String {
    match format {
        Format::Json => reports.iter().map(|r| r.to_json_line() + "\n").collect(),
        Format::Table => render_table(reports),
        Format::Csv => {
            let mut rows = vec![[
                "strategy", "representation", "model", "resampler", "seed", "auc_roc", "macro_f1", "tp", "fp", "tn", "fn",
                "config_hash",
            ]
            .map(String::from)
            .to_vec()];
            for r in reports {
                let c = r.confusion;
                rows.push(vec![
                    r.strategy.to_string(),
                    r.representation.clone(),
                    r.model.clone(),
                    r.resampler.clone(),
                    r.seed.to_string(),
                    r.auc_roc.to_string(),
                    r.macro_f1.to_string(),
                    c.tp.to_string(),
                    c.fp.to_string(),
                    c.tn.to_string(),
                    c.fn_.to_string(),
                    r.config_hash.clone(),
                ]);
            }
            csv(&rows)
        }
    }
}

pub fn features(features: &FeatureMatrix, labels: Option<&LabelSet>, paths: &[String], format: Format) -> String {
    match format {
        Format::Csv => features.to_csv(labels),
        Format::Json => {
            let rows: Vec<serde_json::Value> = (0..features.node_count())
                .map(|i| {
                    let mut row = serde_json::json!({
                        "path": paths[i],
                        "features": features.values.row(i),
                    });
                    if let Some(l) = labels {
                        row["label"] = l.labels[i].into();
                    }
                    row
                })
                .collect();
            let doc = serde_json::json!({ "names": features.names, "nodes": rows });
            serde_json::to_string_pretty(&doc).expect("features serialize") + "\n"
        }
        Format::Table => {
            let mut header = vec!["path".to_string()];
            header.extend(features.names.iter().cloned());
            if labels.is_some() {
                header.push("label".into());
            }
            let mut rows = vec![header];
            for i in 0..features.node_count() {
                let mut row = vec![paths[i].clone()];
                row.extend(features.values.row(i).iter().map(|v| format!("{v:.4}")));
                if let Some(l) = labels {
                    row.push(l.labels[i].to_string());
                }
                rows.push(row);
            }
            aligned(&rows)
        }
    }
}

pub fn information_values(values: &[(String, f64)], format: Format) -> String {
    match format {
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                values.iter().map(|(n, v)| (n.clone(), (*v).into())).collect();
            serde_json::to_string_pretty(&map).expect("iv serializes") + "\n"
        }
        Format::Csv => {
            let mut rows = vec![vec!["feature".to_string(), "information_value".into()]];
            rows.extend(values.iter().map(|(n, v)| vec![n.clone(), v.to_string()]));
            csv(&rows)
        }
        Format::Table => {
            let mut rows = vec![vec!["feature".to_string(), "IV".into()]];
            rows.extend(values.iter().map(|(n, v)| vec![n.clone(), format!("{v:.4}")]));
            aligned(&rows)
        }
    }
}

pub fn suites(results: &[SuiteResult], format: Format) -> String {
    match format {
        Format::Json => results
            .iter()
            .map(|r| serde_json::to_string(r).expect("suite serializes") + "\n")
            .collect(),
        Format::Csv | Format::Table => {
            let mut rows = vec![vec!["model".to_string(), "max_relative_error".into(), "status".into()]];
            rows.extend(results.iter().map(|r| {
                vec![
                    r.model.to_string(),
                    format!("{:.3e}", r.max_relative_error),
                    if r.passed() { "ok" } else { "FAIL" }.to_string(),
                ]
            }));
            if format == Format::Csv {
                csv(&rows)
            } else {
                aligned(&rows)
            }
        }
    }
}
