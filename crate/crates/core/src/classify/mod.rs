//! Supervised baselines: logistic regression, linear SVM and random forest.

mod forest;
mod linear;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

pub use forest::{train_random_forest, ForestConfig, Tree};
pub use linear::{hinge_loss, logreg_loss_and_grad, train_linear_svm, train_logreg, LogRegConfig, SvmConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logreg,
    LinearSvm,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Logreg, ClassifierKind::LinearSvm, ClassifierKind::RandomForest];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Logreg => "logreg",
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::RandomForest => "random_forest",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown classifier {name:?}")))
    }
}

/// Hyperparameters for all three classifiers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub logreg: LogRegConfig,
    pub linear_svm: SvmConfig,
    pub random_forest: ForestConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Parameters {
    /// `σ(link_scale · (w·x + b) + link_offset)`.
    Linear {
        weights: Vec<f64>,
        bias: f64,
        link_scale: f64,
        link_offset: f64,
    },
    Forest { trees: Vec<Tree> },
    /// Single-class training data.
    Constant { probability: f64 },
}

/// A trained classifier; serializes to a versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub hyperparameters: serde_json::Value,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub parameters: Parameters,
}

impl ClassifierModel {
    pub(crate) fn new(kind: ClassifierKind, hyperparameters: impl Serialize, seed: u64, parameters: Parameters) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            hyperparameters: serde_json::to_value(hyperparameters).expect("hyperparameters serialize"),
            seed,
            config_hash: None,
            parameters,
        }
    }

    /// Linear decision value `w·x + b`; `None` for non-linear models.
    pub fn margin(&self, row: &[f64]) -> Option<f64> {
        match &self.parameters {
            Parameters::Linear { weights, bias, .. } => Some(crate::numeric::dot(weights, row) + bias),
            _ => None,
        }
    }

    /// Probability of class 1.
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        match &self.parameters {
            Parameters::Linear { link_scale, link_offset, .. } => {
                crate::numeric::sigmoid(link_scale * self.margin(row).unwrap() + link_offset)
            }
            Parameters::Forest { trees } => trees.iter().map(|t| t.predict(row)).sum::<f64>() / trees.len() as f64,
            Parameters::Constant { probability } => *probability,
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict_proba_row(x.row(i))).collect()
    }

    /// Probability of class 0, computed as `1 − p` so the pair sums to one.
    pub fn predict_proba_complement(&self, x: &Matrix) -> Vec<f64> {
        self.predict_proba(x).into_iter().map(|p| 1.0 - p).collect()
    }

    /// Hard labels: the sign of the margin for linear SVM, `p > 0.5` otherwise.
    pub fn predict(&self, x: &Matrix) -> Vec<u8> {
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                match (self.kind, self.margin(row)) {
                    (ClassifierKind::LinearSvm, Some(m)) => u8::from(m > 0.0),
                    _ => u8::from(self.predict_proba_row(row) > 0.5),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::json("classifier model", e))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }
}

/// Trains `kind` with its hyperparameters from `cfg`.
pub fn train(kind: ClassifierKind, x: &Matrix, y: &[u8], cfg: &ClassifierConfig, seed: u64) -> Result<ClassifierModel> {
    match kind {
        ClassifierKind::Logreg => train_logreg(x, y, &cfg.logreg, seed),
        ClassifierKind::LinearSvm => train_linear_svm(x, y, &cfg.linear_svm, seed),
        ClassifierKind::RandomForest => train_random_forest(x, y, &cfg.random_forest, seed),
    }
}

pub(crate) fn check_inputs(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if x.rows() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("classifier features".into()));
    }
    Ok(())
}

/// `Some(p)` when `y` holds one class (with `p` that class), after logging.
pub(crate) fn single_class(y: &[u8], what: &str) -> Option<f64> {
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        log::warn!("{what} trained on a single class; predicting a constant");
        Some(if pos == 0 { 0.0 } else { 1.0 })
    } else {
        None
    }
}
