//! End-to-end experiments: the stratified split, the three strategies
//! (resample-then-classify, detect anomalies on the test split, resample the
//! graph then train a GCN), metrics and the experiment matrix.

mod matrix;
mod metrics;
mod split;
mod strategy;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::balance::{GraphSmoteConfig, DEFAULT_SMOTE_K};
use crate::classify::{ClassifierConfig, ClassifierKind};
use crate::codegraph::{build_code_graph, CodeGraph, SourceTree};
use crate::detect::{DominantConfig, DEFAULT_IFOREST_SUBSAMPLE, DEFAULT_IFOREST_TREES, DEFAULT_LOF_K, DEFAULT_OCSVM_NU};
use crate::embed::{GcnConfig, Node2VecConfig};
use crate::error::{Error, Result};
use crate::history::{compute_features, label_reverts_after, parse_commit_log, CommitRecord, FeatureMatrix, LabelSet};
use crate::synth::SyntheticDataset;

pub use matrix::{
    config_hash, render_table, run_matrix, DatasetSpec, MatrixConfig, MatrixEntry, MatrixOutcome, MatrixPlan,
    PreparedMatrix, SkippedEntry, SourceSpec,
};
pub use metrics::{auc_roc, macro_f1, Confusion};
pub use split::{stratified_split, Split};
pub use strategy::{
    build_representation, run_strategy1, run_strategy2, run_strategy3, Evaluation, GraphMethod,
};

/// Input representation for strategies 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RepresentationChoice {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "node2vec")]
    Node2vec,
    #[serde(rename = "node2vec+raw")]
    Node2vecRaw,
    #[serde(rename = "gae")]
    Gae,
    #[serde(rename = "gae+raw")]
    GaeRaw,
}

impl RepresentationChoice {
    pub const ALL: [RepresentationChoice; 5] = [
        RepresentationChoice::Raw,
        RepresentationChoice::Node2vec,
        RepresentationChoice::Node2vecRaw,
        RepresentationChoice::Gae,
        RepresentationChoice::GaeRaw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RepresentationChoice::Raw => "raw",
            RepresentationChoice::Node2vec => "node2vec",
            RepresentationChoice::Node2vecRaw => "node2vec+raw",
            RepresentationChoice::Gae => "gae",
            RepresentationChoice::GaeRaw => "gae+raw",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown representation {name:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampler {
    None,
    Up,
    Down,
    Smote,
}

impl Resampler {
    pub const ALL: [Resampler; 4] = [Resampler::None, Resampler::Up, Resampler::Down, Resampler::Smote];

    pub fn name(self) -> &'static str {
        match self {
            Resampler::None => "none",
            Resampler::Up => "up",
            Resampler::Down => "down",
            Resampler::Smote => "smote",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown resampler {name:?}")))
    }
}

/// What a supervised model contributes to AUC: its class-1 probability or
/// its hard label. The defaults use labels everywhere, so every model is
/// judged at its own operating point and one that never predicts the minority
/// class lands at exactly 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    Probability,
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreSources {
    pub logreg: ScoreSource,
    pub linear_svm: ScoreSource,
    pub random_forest: ScoreSource,
    pub gcn: ScoreSource,
    pub graphsmote: ScoreSource,
    /// Anomaly detectors; `probability` here means the raw anomaly score.
    pub detectors: ScoreSource,
}

impl Default for ScoreSources {
    fn default() -> Self {
        Self {
            logreg: ScoreSource::Label,
            linear_svm: ScoreSource::Label,
            random_forest: ScoreSource::Label,
            gcn: ScoreSource::Label,
            graphsmote: ScoreSource::Label,
            detectors: ScoreSource::Label,
        }
    }
}

impl ScoreSources {
    pub fn classifier(&self, kind: ClassifierKind) -> ScoreSource {
        match kind {
            ClassifierKind::Logreg => self.logreg,
            ClassifierKind::LinearSvm => self.linear_svm,
            ClassifierKind::RandomForest => self.random_forest,
        }
    }
}

/// Transform applied to raw history features before scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTransform {
    /// `ln(1 + max(x, 0))`; the features are non-negative counts and sizes.
    Log1p,
    Identity,
}

/// Every tunable of a run. Seeds inside the nested configs are ignored; each
/// component gets a seed derived from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub split_ratio: f64,
    pub feature_transform: FeatureTransform,
    pub node2vec: Node2VecConfig,
    pub gae: GcnConfig,
    pub gcn: GcnConfig,
    pub classifiers: ClassifierConfig,
    pub score_sources: ScoreSources,
    pub smote_k: usize,
    pub lof_k: usize,
    pub iforest_trees: usize,
    pub iforest_subsample: usize,
    pub ocsvm_nu: f64,
    /// `None` means `1 / feature count`.
    pub ocsvm_gamma: Option<f64>,
    pub dominant: DominantConfig,
    pub graph_smote: GraphSmoteConfig,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            split_ratio: 0.8,
            feature_transform: FeatureTransform::Log1p,
            node2vec: Node2VecConfig::default(),
            gae: GcnConfig::default(),
            gcn: GcnConfig::default(),
            classifiers: ClassifierConfig::default(),
            score_sources: ScoreSources::default(),
            smote_k: DEFAULT_SMOTE_K,
            lof_k: DEFAULT_LOF_K,
            iforest_trees: DEFAULT_IFOREST_TREES,
            iforest_subsample: DEFAULT_IFOREST_SUBSAMPLE,
            ocsvm_nu: DEFAULT_OCSVM_NU,
            ocsvm_gamma: None,
            dominant: DominantConfig::default(),
            graph_smote: GraphSmoteConfig::default(),
        }
    }
}

/// Graph, per-node features and labels in graph node order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: CodeGraph,
    pub features: FeatureMatrix,
    pub labels: LabelSet,
}

impl Dataset {
    pub fn new(graph: CodeGraph, features: FeatureMatrix, labels: LabelSet) -> Result<Self> {
        let n = graph.node_count();
        if features.node_count() != n || labels.len() != n {
            return Err(Error::Shape(format!(
                "dataset parts disagree: {n} nodes, {} feature rows, {} labels",
                features.node_count(),
                labels.len()
            )));
        }
        Ok(Self { graph, features, labels })
    }

    /// Features from commits up to `cutoff_ts` and labels from revert events
    /// after it; without a cutoff both use the whole log.
    pub fn from_parts(files: &BTreeMap<String, String>, commits: &[CommitRecord], cutoff_ts: Option<i64>) -> Result<Self> {
        let graph = build_code_graph(files)?;
        let features = compute_features(commits, &graph, files, cutoff_ts.unwrap_or(i64::MAX))?;
        let labels = label_reverts_after(commits, graph.node_paths(), None, cutoff_ts);
        Self::new(graph, features, labels)
    }

    /// Routes a generated repository through the commit-log parser and the
    /// graph builder.
    pub fn from_synthetic(synthetic: &SyntheticDataset) -> Result<Self> {
        let commits = parse_commit_log(&synthetic.commit_log())?;
        Self::from_parts(&synthetic.files, &commits, Some(synthetic.cutoff_ts))
    }

    /// Loads a repository directory (or JSON file map) and a JSON-lines log.
    pub fn load(repo: &Path, log: &Path, cutoff_ts: Option<i64>, exclude: &[String]) -> Result<Self> {
        let tree = SourceTree::load(repo, exclude)?;
        for w in &tree.warnings {
            log::warn!("{w}");
        }
        let text = std::fs::read_to_string(log).map_err(|e| Error::io(log, e))?;
        let commits = parse_commit_log(&text)?;
        Self::from_parts(&tree.files, &commits, cutoff_ts)
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }
}

/// One finished experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub strategy: u8,
    pub representation: String,
    pub model: String,
    pub resampler: String,
    pub seed: u64,
    pub auc_roc: f64,
    pub macro_f1: f64,
    pub confusion: Confusion,
    pub config_hash: String,
    /// Unix milliseconds.
    pub started_at: u64,
    pub finished_at: u64,
}

impl ExperimentReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// The JSON line with both timestamps zeroed, for reproducibility checks.
    pub fn to_json_line_without_timestamps(&self) -> String {
        Self {
            started_at: 0,
            finished_at: 0,
            ..self.clone()
        }
        .to_json_line()
    }

    /// Parses JSON lines; blank lines are skipped.
    pub fn parse_lines(text: &str) -> Result<Vec<Self>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| serde_json::from_str(l).map_err(|e| Error::json(format!("report line {}", k + 1), e)))
            .collect()
    }
}

pub(crate) fn unix_millis() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub(crate) fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}
