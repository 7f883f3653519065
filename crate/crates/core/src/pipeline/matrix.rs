use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::ClassifierKind;
use crate::detect::DetectorKind;
use crate::error::{Error, Result};
use crate::numeric::{mix_seed, Matrix};
use crate::synth::{generate_synthetic_dataset, SynthConfig};

use super::split::{stratified_split, Split};
use super::strategy::{build_representation, run_strategy1, run_strategy2, run_strategy3, GraphMethod};
use super::{resolve, unix_millis, Dataset, ExperimentReport, Hyperparameters, RepresentationChoice, Resampler};

const SPLIT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub repo: PathBuf,
    pub log: PathBuf,
    /// Features use commits up to here; labels use reverts after it.
    #[serde(default)]
    pub cutoff_ts: Option<i64>,
    #[serde(default)]
    pub exclude: Vec<String>,
}

/// Exactly one of `source` and `synth`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    /// Regenerate the synthetic repository with each run seed.
    #[serde(default)]
    pub synth_seed_per_run: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub strategies: Vec<u8>,
    #[serde(default = "default_representations")]
    pub representations: Vec<String>,
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default = "default_resamplers")]
    pub resamplers: Vec<String>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
}

fn default_representations() -> Vec<String> {
    vec!["raw".into()]
}

fn default_resamplers() -> Vec<String> {
    vec!["none".into()]
}

impl MatrixConfig {
    /// Parses a config; relative dataset paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("matrix config: {e}")))?;
        if let Some(src) = &mut cfg.dataset.source {
            src.repo = resolve(base_dir, &src.repo);
            src.log = resolve(base_dir, &src.log);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }

    fn validate(&self) -> Result<()> {
        match (&self.dataset.source, &self.dataset.synth) {
            (Some(_), None) => {}
            (None, Some(s)) => s.validate()?,
            _ => return Err(Error::Config("dataset needs exactly one of \"source\" and \"synth\"".into())),
        }
        if let Some(&s) = self.strategies.iter().find(|s| !(1..=3).contains(*s)) {
            return Err(Error::Config(format!("unknown strategy {s}")));
        }
        for r in &self.representations {
            RepresentationChoice::parse(r)?;
        }
        for r in &self.resamplers {
            Resampler::parse(r)?;
        }
        for m in &self.models {
            ModelName::parse(m)?;
        }
        Ok(())
    }

    fn dataset_key(&self, seed: u64) -> Option<u64> {
        (self.dataset.synth.is_some() && self.dataset.synth_seed_per_run).then_some(seed)
    }

    fn load_dataset(&self, key: Option<u64>) -> Result<Dataset> {
        if let Some(src) = &self.dataset.source {
            return Dataset::load(&src.repo, &src.log, src.cutoff_ts, &src.exclude);
        }
        let mut synth = self.dataset.synth.clone().expect("validated");
        if let Some(seed) = key {
            synth.seed = seed;
        }
        Dataset::from_synthetic(&generate_synthetic_dataset(&synth)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelName {
    Classifier(ClassifierKind),
    Detector(DetectorKind),
    Gcn,
    GraphSmote,
}

impl ModelName {
    fn parse(name: &str) -> Result<Self> {
        if let Ok(k) = ClassifierKind::parse(name) {
            return Ok(ModelName::Classifier(k));
        }
        Ok(match name {
            "lof" => ModelName::Detector(DetectorKind::Lof),
            "iforest" => ModelName::Detector(DetectorKind::Iforest),
            "ocsvm" => ModelName::Detector(DetectorKind::Ocsvm),
            "dominant" => ModelName::Detector(DetectorKind::Dominant),
            "gcn" => ModelName::Gcn,
            "graphsmote" => ModelName::GraphSmote,
            _ => return Err(Error::Config(format!("unknown model {name:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Job {
    Classify(ClassifierKind),
    Detect(DetectorKind),
    Graph(GraphMethod),
}

/// Whether `model` is one of the models `strategy` runs at all.
fn belongs_to(strategy: u8, model: ModelName) -> bool {
    matches!(
        (strategy, model),
        (1, ModelName::Classifier(_)) | (2, ModelName::Detector(_)) | (3, ModelName::Gcn | ModelName::GraphSmote)
    )
}

/// Why a requested combination cannot run, or `Ok` with the job.
fn job_for(strategy: u8, rep: RepresentationChoice, model: ModelName, resampler: Resampler) -> std::result::Result<Job, String> {
    let raw_only = |what: &str| {
        if rep == RepresentationChoice::Raw {
            Ok(())
        } else {
            Err(format!("{what} learns from the graph and raw features; representation must be raw"))
        }
    };
    match (strategy, model) {
        (1, ModelName::Classifier(k)) => Ok(Job::Classify(k)),
        (1, _) => Err("strategy 1 takes a classifier (logreg, linear_svm, random_forest)".into()),
        (2, ModelName::Detector(d)) => {
            if resampler != Resampler::None {
                return Err("anomaly detectors are unsupervised; resampler must be none".into());
            }
            if d == DetectorKind::Dominant {
                raw_only("dominant")?;
            }
            Ok(Job::Detect(d))
        }
        (2, _) => Err("strategy 2 takes an anomaly detector (lof, iforest, ocsvm, dominant)".into()),
        (3, ModelName::Gcn) => {
            raw_only("strategy 3")?;
            match resampler {
                Resampler::None => Ok(Job::Graph(GraphMethod::Gcn)),
                Resampler::Up => Ok(Job::Graph(GraphMethod::UpGcn)),
                Resampler::Down => Ok(Job::Graph(GraphMethod::DownGcn)),
                Resampler::Smote => Err("graph oversampling is the graphsmote model".into()),
            }
        }
        (3, ModelName::GraphSmote) => {
            raw_only("graphsmote")?;
            if resampler != Resampler::None {
                return Err("graphsmote resamples internally; resampler must be none".into());
            }
            Ok(Job::Graph(GraphMethod::GraphSmote))
        }
        (3, _) => Err("strategy 3 takes gcn or graphsmote".into()),
        _ => Err(format!("unknown strategy {strategy}")),
    }
}

/// One runnable cell of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub strategy: u8,
    pub representation: RepresentationChoice,
    pub model: String,
    pub resampler: Resampler,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub strategy: u8,
    pub representation: String,
    pub model: String,
    pub resampler: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixPlan {
    pub entries: Vec<MatrixEntry>,
    pub skipped: Vec<SkippedEntry>,
}

#[derive(Serialize)]
struct HashInput<'a> {
    dataset: &'a DatasetSpec,
    hyperparameters: &'a Hyperparameters,
    strategy: u8,
    representation: &'a str,
    model: &'a str,
    resampler: &'a str,
    seed: u64,
}

/// First 16 hex digits of the SHA-256 of the entry's canonical JSON.
pub fn config_hash(
    config: &MatrixConfig,
    strategy: u8,
    representation: RepresentationChoice,
    model: &str,
    resampler: Resampler,
    seed: u64,
) -> String {
    let input = HashInput {
        dataset: &config.dataset,
        hyperparameters: &config.hyperparameters,
        strategy,
        representation: representation.name(),
        model,
        resampler: resampler.name(),
        seed,
    };
    let digest = Sha256::digest(serde_json::to_vec(&input).expect("hash input serializes"));
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl MatrixConfig {
    /// Cartesian product of strategies × representations × models ×
    /// resamplers × seeds, deduplicated by config hash. Models pair only with
    /// their own strategy; other invalid combinations are listed once each in
    /// `skipped`.
    pub fn plan(&self) -> Result<MatrixPlan> {
        self.validate()?;
        let mut plan = MatrixPlan::default();
        let mut seen = BTreeSet::new();
        let mut skipped_seen = BTreeSet::new();
        for &strategy in &self.strategies {
            for rep_name in &self.representations {
                let rep = RepresentationChoice::parse(rep_name)?;
                for model_name in &self.models {
                    let model = ModelName::parse(model_name)?;
                    if !belongs_to(strategy, model) {
                        continue;
                    }
                    for res_name in &self.resamplers {
                        let resampler = Resampler::parse(res_name)?;
                        if let Err(reason) = job_for(strategy, rep, model, resampler) {
                            if skipped_seen.insert((strategy, rep, model_name.clone(), resampler)) {
                                plan.skipped.push(SkippedEntry {
                                    strategy,
                                    representation: rep.name().into(),
                                    model: model_name.clone(),
                                    resampler: resampler.name().into(),
                                    reason,
                                });
                            }
                            continue;
                        }
                        for &seed in &self.seeds {
                            let hash = config_hash(self, strategy, rep, model_name, resampler, seed);
                            if !seen.insert(hash.clone()) {
                                log::info!("duplicate matrix entry {hash} dropped");
                                continue;
                            }
                            plan.entries.push(MatrixEntry {
                                strategy,
                                representation: rep,
                                model: model_name.clone(),
                                resampler,
                                seed,
                                config_hash: hash,
                            });
                        }
                    }
                }
            }
        }
        Ok(plan)
    }
}

/// Datasets, splits and representations shared by the entries of a plan.
/// Entries only read from it, so they may run concurrently.
pub struct PreparedMatrix {
    config: MatrixConfig,
    datasets: BTreeMap<Option<u64>, Dataset>,
    splits: BTreeMap<(Option<u64>, u64), Split>,
    representations: BTreeMap<(Option<u64>, u64, RepresentationChoice), Matrix>,
}

impl PreparedMatrix {
    pub fn prepare(config: &MatrixConfig, plan: &MatrixPlan) -> Result<Self> {
        let mut prepared = PreparedMatrix {
            config: config.clone(),
            datasets: BTreeMap::new(),
            splits: BTreeMap::new(),
            representations: BTreeMap::new(),
        };
        let hp = &config.hyperparameters;
        for e in &plan.entries {
            let key = config.dataset_key(e.seed);
            if !prepared.datasets.contains_key(&key) {
                prepared.datasets.insert(key, config.load_dataset(key)?);
            }
            let dataset = &prepared.datasets[&key];
            if !prepared.splits.contains_key(&(key, e.seed)) {
                let split = stratified_split(&dataset.labels, hp.split_ratio, mix_seed(e.seed, SPLIT_STREAM))?;
                prepared.splits.insert((key, e.seed), split);
            }
            let rep_key = (key, e.seed, e.representation);
            if e.strategy != 3 && !prepared.representations.contains_key(&rep_key) {
                let x = build_representation(dataset, e.representation, hp, e.seed)?;
                prepared.representations.insert(rep_key, x);
            }
        }
        Ok(prepared)
    }

    pub fn dataset(&self, seed: u64) -> Option<&Dataset> {
        self.datasets.get(&self.config.dataset_key(seed))
    }

    pub fn run_entry(&self, entry: &MatrixEntry) -> Result<ExperimentReport> {
        let started_at = unix_millis();
        let key = self.config.dataset_key(entry.seed);
        let missing = || Error::InvalidArgument(format!("entry {} was not prepared", entry.config_hash));
        let dataset = self.datasets.get(&key).ok_or_else(missing)?;
        let split = self.splits.get(&(key, entry.seed)).ok_or_else(missing)?;
        let hp = &self.config.hyperparameters;
        let model = ModelName::parse(&entry.model)?;
        let job = job_for(entry.strategy, entry.representation, model, entry.resampler).map_err(Error::Config)?;
        let rep = || {
            self.representations
                .get(&(key, entry.seed, entry.representation))
                .ok_or_else(missing)
        };
        let eval = match job {
            Job::Classify(k) => run_strategy1(dataset, rep()?, split, entry.resampler, k, hp, entry.seed)?,
            Job::Detect(d) => run_strategy2(dataset, rep()?, split, d, hp, entry.seed)?,
            Job::Graph(g) => run_strategy3(dataset, split, g, hp, entry.seed)?,
        };
        let (auc_roc, macro_f1, confusion) = eval.metrics(&dataset.labels)?;
        Ok(ExperimentReport {
            strategy: entry.strategy,
            representation: entry.representation.name().into(),
            model: entry.model.clone(),
            resampler: entry.resampler.name().into(),
            seed: entry.seed,
            auc_roc,
            macro_f1,
            confusion,
            config_hash: entry.config_hash.clone(),
            started_at,
            finished_at: unix_millis(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOutcome {
    pub reports: Vec<ExperimentReport>,
    pub skipped: Vec<SkippedEntry>,
}

/// Plans, prepares and runs every entry in order.
pub fn run_matrix(config: &MatrixConfig) -> Result<MatrixOutcome> {
    let plan = config.plan()?;
    let prepared = PreparedMatrix::prepare(config, &plan)?;
    let reports = plan.entries.iter().map(|e| prepared.run_entry(e)).collect::<Result<Vec<_>>>()?;
    Ok(MatrixOutcome {
        reports,
        skipped: plan.skipped,
    })
}

/// Row key in display order: regular and imbalanced classification, anomaly
/// detection, then graph learning.
fn row_label(r: &ExperimentReport) -> (u8, &'static str, String) {
    match (r.strategy, r.resampler.as_str()) {
        (1, "none") => (0, "Regular Classification", r.model.clone()),
        (1, res) => (1, "Imbalanced Classification", format!("{res}+{}", r.model)),
        (2, _) => (2, "Anomaly Detection", r.model.clone()),
        (_, "none") => (3, "Graph Learning", r.model.clone()),
        (_, res) => (3, "Graph Learning", format!("{res}+{}", r.model)),
    }
}

fn column_order(name: &str) -> (usize, String) {
    let rank = RepresentationChoice::ALL
        .iter()
        .position(|r| r.name() == name)
        .unwrap_or(RepresentationChoice::ALL.len());
    (rank, name.to_string())
}

/// Two plain-text grids (AUC-ROC, then macro F1): rows are model family ×
/// model, columns are representations, cells are means over seeds.
pub fn render_table(reports: &[ExperimentReport]) -> String {
    type Cell = (f64, f64, usize);
    let mut cells: BTreeMap<(u8, &'static str, String), BTreeMap<(usize, String), Cell>> = BTreeMap::new();
    let mut columns = BTreeSet::new();
    for r in reports {
        let col = column_order(&r.representation);
        columns.insert(col.clone());
        let cell = cells.entry(row_label(r)).or_default().entry(col).or_insert((0.0, 0.0, 0));
        cell.0 += r.auc_roc;
        cell.1 += r.macro_f1;
        cell.2 += 1;
    }
    let columns: Vec<(usize, String)> = columns.into_iter().collect();
    let mut out = String::new();
    for (title, pick) in [("AUC-ROC", 0usize), ("Macro F1", 1)] {
        let mut rows: Vec<Vec<String>> = vec![
            std::iter::once("Family".to_string())
                .chain(std::iter::once("Model".to_string()))
                .chain(columns.iter().map(|c| c.1.clone()))
                .collect(),
        ];
        for ((_, family, model), by_col) in &cells {
            let mut row = vec![family.to_string(), model.clone()];
            for c in &columns {
                row.push(match by_col.get(c) {
                    Some(&(auc, f1, k)) => format!("{:.4}", if pick == 0 { auc } else { f1 } / k as f64),
                    None => "-".into(),
                });
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let _ = writeln!(out, "{title} (mean over seeds)");
        for (k, row) in rows.iter().enumerate() {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if k == 0 {
                let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> MatrixConfig {
        MatrixConfig::from_json(json, None).unwrap()
    }

    const SMALL: &str = r#"{"n_nodes": 150, "positive_rate": 0.1, "seed": 3}"#;

    #[test]
    fn fifteen_strategy_one_entries() {
        let cfg = config(&format!(
            r#"{{"dataset": {{"synth": {SMALL}}}, "strategies": [1],
                "representations": ["raw", "node2vec", "node2vec+raw", "gae", "gae+raw"],
                "models": ["logreg", "linear_svm", "random_forest"], "seeds": [0]}}"#
        ));
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.entries.len(), 15);
        assert!(plan.skipped.is_empty());
    }

    #[test]
    fn empty_strategies_give_nothing() {
        let cfg = config(&format!(r#"{{"dataset": {{"synth": {SMALL}}}, "models": ["logreg"], "seeds": [0]}}"#));
        assert!(run_matrix(&cfg).unwrap().reports.is_empty());
    }

    #[test]
    fn duplicates_collapse() {
        let cfg = config(&format!(
            r#"{{"dataset": {{"synth": {SMALL}}}, "strategies": [1, 1], "models": ["logreg", "logreg"], "seeds": [4, 4]}}"#
        ));
        assert_eq!(cfg.plan().unwrap().entries.len(), 1);
    }

    #[test]
    fn invalid_combinations_are_skipped_with_reasons() {
        let cfg = config(&format!(
            r#"{{"dataset": {{"synth": {SMALL}}}, "strategies": [1, 2, 3],
                "representations": ["raw", "node2vec"], "models": ["logreg", "lof", "gcn"],
                "resamplers": ["none", "down"], "seeds": [0]}}"#
        ));
        let plan = cfg.plan().unwrap();
        let ran: BTreeSet<(u8, &str, &str, &str)> = plan
            .entries
            .iter()
            .map(|e| (e.strategy, e.representation.name(), e.model.as_str(), e.resampler.name()))
            .collect();
        assert!(ran.contains(&(3, "raw", "gcn", "down")));
        assert!(ran.contains(&(2, "node2vec", "lof", "none")));
        assert!(plan.skipped.iter().any(|s| s.strategy == 3 && s.representation == "node2vec" && s.reason.contains("raw")));
        assert!(plan.skipped.iter().any(|s| s.strategy == 2 && s.resampler == "down"));
        // each strategy pairs with its one model: 3 × 2 representations × 2 resamplers
        assert_eq!(plan.entries.len() + plan.skipped.len(), 3 * 2 * 2);
        assert!(plan.skipped.iter().all(|s| !(s.strategy == 1 && s.model != "logreg")));
    }

    #[test]
    fn unknown_names_are_config_errors() {
        for bad in [
            r#""models": ["xgboost"]"#,
            r#""representations": ["deepwalk"]"#,
            r#""resamplers": ["adasyn"]"#,
            r#""strategies": [4]"#,
        ] {
            let text = format!(r#"{{"dataset": {{"synth": {SMALL}}}, {bad}}}"#);
            assert!(matches!(MatrixConfig::from_json(&text, None), Err(Error::Config(_))), "{bad}");
        }
        assert!(MatrixConfig::from_json(r#"{"dataset": {}}"#, None).is_err());
    }

    #[test]
    fn hash_depends_on_every_field() {
        let cfg = config(&format!(r#"{{"dataset": {{"synth": {SMALL}}}}}"#));
        let base = config_hash(&cfg, 1, RepresentationChoice::Raw, "logreg", Resampler::None, 0);
        assert_eq!(base.len(), 16);
        assert_ne!(base, config_hash(&cfg, 1, RepresentationChoice::Raw, "logreg", Resampler::None, 1));
        assert_ne!(base, config_hash(&cfg, 1, RepresentationChoice::Gae, "logreg", Resampler::None, 0));
        let mut other = cfg.clone();
        other.hyperparameters.lof_k = 3;
        assert_ne!(base, config_hash(&other, 1, RepresentationChoice::Raw, "logreg", Resampler::None, 0));
    }

    #[test]
    fn runs_are_reproducible_and_tabulated() {
        let cfg = config(&format!(
            r#"{{"dataset": {{"synth": {SMALL}}}, "strategies": [1, 2, 3], "representations": ["raw"],
                "models": ["logreg", "lof", "gcn"], "resamplers": ["none", "down"], "seeds": [1],
                "hyperparameters": {{"gcn": {{"epochs": 30}}}}}}"#
        ));
        let a = run_matrix(&cfg).unwrap();
        let b = run_matrix(&cfg).unwrap();
        let lines = |o: &MatrixOutcome| o.reports.iter().map(|r| r.to_json_line_without_timestamps()).collect::<Vec<_>>();
        assert_eq!(lines(&a), lines(&b));
        assert_eq!(a.reports.len(), 5);
        let table = render_table(&a.reports);
        assert!(table.contains("AUC-ROC") && table.contains("Macro F1"));
        assert!(table.contains("down+logreg") && table.contains("down+gcn"));
    }
}
