use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::codegraph::CodeGraph;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

use super::commits::CommitRecord;
use super::complexity::cyclomatic_complexity;
use super::labels::{revert_events, LabelSet};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const REVERT_WINDOW_SECONDS: i64 = 30 * SECONDS_PER_DAY;

/// Column order of the per-file history features.
pub const FEATURE_NAMES: [&str; 8] = [
    "revert_freq_30d",
    "file_version",
    "commit_to_push_lag_days",
    "push_set_total_loc",
    "push_set_total_cyclomatic",
    "unique_contributors",
    "dependent_modules",
    "push_set_file_count",
];

/// Named columns over graph nodes; row `i` is node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub values: Matrix,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, values: Matrix) -> Result<Self> {
        if names.len() != values.cols() {
            return Err(Error::Shape(format!(
                "{} names for {} columns",
                names.len(),
                values.cols()
            )));
        }
        if !values.is_finite() {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(Self { names, values })
    }

    pub fn node_count(&self) -> usize {
        self.values.rows()
    }

    pub fn feature_count(&self) -> usize {
        self.values.cols()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.values.column(j))
    }

    /// CSV with a header row of feature names, one row per node, and a trailing
    /// `label` column when labels are given.
    pub fn to_csv(&self, labels: Option<&LabelSet>) -> String {
        let mut out = self.names.join(",");
        if labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for i in 0..self.node_count() {
            let row: Vec<String> = self.values.row(i).iter().map(|v| format_value(*v)).collect();
            out.push_str(&row.join(","));
            if let Some(l) = labels {
                out.push(',');
                out.push_str(&l.labels[i].to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`to_csv`](Self::to_csv) output; a trailing `label` column is split off.
    pub fn from_csv(text: &str) -> Result<(Self, Option<LabelSet>)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty feature CSV".into()))?;
        let mut names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let has_label = names.last().is_some_and(|n| n == "label");
        if has_label {
            names.pop();
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut rows = 0;
        for (k, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let expected = names.len() + usize::from(has_label);
            if cells.len() != expected {
                return Err(Error::InvalidArgument(format!(
                    "feature CSV row {}: {} cells, expected {expected}",
                    k + 2,
                    cells.len()
                )));
            }
            for c in &cells[..names.len()] {
                let v: f64 = c.parse().map_err(|_| {
                    Error::InvalidArgument(format!("feature CSV row {}: bad number {c:?}", k + 2))
                })?;
                data.push(v);
            }
            if has_label {
                let l: u8 = match cells[names.len()] {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "feature CSV row {}: bad label {other:?}",
                            k + 2
                        )))
                    }
                };
                labels.push(l);
            }
            rows += 1;
        }
        let cols = names.len();
        let fm = FeatureMatrix::new(names, Matrix::from_vec(rows, cols, data)?)?;
        Ok((fm, has_label.then(|| LabelSet::from_labels(labels))))
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Computes the eight history features per graph node from commits with
/// `commit_ts <= cutoff_ts`.
///
/// A push set is every commit sharing a `push_id`; a commit without one is its
/// own push set. The "latest push set" of a file is the push set of its most
/// recent commit. Files with no commits get zero history features.
pub fn compute_features(
    commits: &[CommitRecord],
    graph: &CodeGraph,
    sources: &BTreeMap<String, String>,
    cutoff_ts: i64,
) -> Result<FeatureMatrix> {
    let mut visible: Vec<&CommitRecord> = commits.iter().filter(|c| c.commit_ts <= cutoff_ts).collect();
    visible.sort_by(|a, b| a.commit_ts.cmp(&b.commit_ts).then_with(|| a.commit_id.cmp(&b.commit_id)));

    let n = graph.node_count();
    let mut per_file: Vec<Vec<&CommitRecord>> = vec![Vec::new(); n];
    for c in &visible {
        let mut seen = BTreeSet::new();
        for f in &c.files {
            if let Some(i) = graph.node_id(&f.path) {
                if seen.insert(i) {
                    per_file[i].push(c);
                }
            }
        }
    }

    let mut push_sets: HashMap<&str, Vec<&CommitRecord>> = HashMap::new();
    for c in &visible {
        if let Some(p) = &c.push_id {
            push_sets.entry(p.as_str()).or_default().push(c);
        }
    }

    let owned: Vec<CommitRecord> = visible.iter().map(|c| (*c).clone()).collect();
    let window_start = cutoff_ts - REVERT_WINDOW_SECONDS;
    let mut recent_reverts = vec![0.0; n];
    for ev in revert_events(&owned) {
        if ev.ts > window_start && ev.ts <= cutoff_ts {
            let touched: BTreeSet<usize> = ev.files.iter().filter_map(|p| graph.node_id(p)).collect();
            for i in touched {
                recent_reverts[i] += 1.0;
            }
        }
    }

    let mut complexity_cache: HashMap<String, u64> = HashMap::new();
    let mut complexity = |path: &str| -> u64 {
        *complexity_cache
            .entry(path.to_string())
            .or_insert_with(|| cyclomatic_complexity(sources.get(path).map_or("", String::as_str)))
    };

    let mut values = Matrix::zeros(n, FEATURE_NAMES.len());
    for i in 0..n {
        values.set(i, 0, recent_reverts[i]);
        values.set(i, 6, graph.topology().degree(i) as f64);
        let history = &per_file[i];
        let Some(latest) = history.last() else {
            continue;
        };
        values.set(i, 1, history.len() as f64);
        let lag: f64 = history
            .iter()
            .map(|c| c.push_ts.map_or(0.0, |p| (p - c.commit_ts) as f64 / SECONDS_PER_DAY as f64))
            .sum::<f64>()
            / history.len() as f64;
        values.set(i, 2, lag);

        let singleton = [*latest];
        let push_set: &[&CommitRecord] = match &latest.push_id {
            Some(p) => &push_sets[p.as_str()],
            None => &singleton,
        };
        let loc: u64 = push_set
            .iter()
            .flat_map(|c| &c.files)
            .map(|f| f.added + f.deleted)
            .sum();
        let files: BTreeSet<&str> = push_set
            .iter()
            .flat_map(|c| &c.files)
            .map(|f| f.path.as_str())
            .collect();
        let cc: u64 = files.iter().map(|p| complexity(p)).sum();
        values.set(i, 3, loc as f64);
        values.set(i, 4, cc as f64);
        values.set(i, 7, files.len() as f64);

        let authors: BTreeSet<&str> = history.iter().map(|c| c.author.as_str()).collect();
        values.set(i, 5, authors.len() as f64);
    }

    FeatureMatrix::new(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), values)
}
