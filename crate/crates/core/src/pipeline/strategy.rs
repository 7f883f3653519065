use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::balance::{downsample, graph_smote, smote_resample, upsample, GraphSmoteConfig, Origin, ResampledSet};
use crate::classify::{self, ClassifierKind};
use crate::codegraph::Topology;
use crate::detect::{
    dominant_scores, isolation_forest_scores, lof_scores, ocsvm_scores, threshold, DetectorKind, DominantConfig,
};
use crate::embed::{gae_embed, gcn_train_on, node2vec_embed, GcnConfig, GcnModel, Node2VecConfig};
use crate::error::{Error, Result};
use crate::history::{FeatureMatrix, LabelSet};
use crate::numeric::{mix_seed, Matrix, SparseOperator, Standardizer};

use super::metrics::{auc_roc, Confusion};
use super::split::Split;
use super::{Dataset, FeatureTransform, Hyperparameters, RepresentationChoice, Resampler, ScoreSource};

const NODE2VEC_STREAM: u64 = 2;
const GAE_STREAM: u64 = 3;
const RESAMPLE_STREAM: u64 = 4;
const MODEL_STREAM: u64 = 5;

/// Test-node scores and hard predictions, aligned with `test`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub test: Vec<usize>,
    pub scores: Vec<f64>,
    pub predictions: Vec<u8>,
}

impl Evaluation {
    /// `(AUC, macro F1, confusion)` against the true test labels.
    pub fn metrics(&self, labels: &LabelSet) -> Result<(f64, f64, Confusion)> {
        let truth: Vec<u8> = self.test.iter().map(|&i| labels.labels[i]).collect();
        let confusion = Confusion::from_predictions(&self.predictions, &truth)?;
        Ok((auc_roc(&self.scores, &truth)?, confusion.macro_f1(), confusion))
    }
}

/// Graph-learning variants of strategy 3 plus the GraphSMOTE baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphMethod {
    #[serde(rename = "gcn")]
    Gcn,
    #[serde(rename = "up+gcn")]
    UpGcn,
    #[serde(rename = "down+gcn")]
    DownGcn,
    #[serde(rename = "graphsmote")]
    GraphSmote,
}

impl GraphMethod {
    pub fn name(self) -> &'static str {
        match self {
            GraphMethod::Gcn => "gcn",
            GraphMethod::UpGcn => "up+gcn",
            GraphMethod::DownGcn => "down+gcn",
            GraphMethod::GraphSmote => "graphsmote",
        }
    }
}

fn leak(msg: String) -> Error {
    Error::Leakage(msg)
}

/// Split must be disjoint, in range and non-empty on both sides.
fn guard_split(split: &Split, n: usize) -> Result<()> {
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::InvalidArgument("split has an empty side".into()));
    }
    if let Some(&i) = split.train.iter().chain(&split.test).find(|&&i| i >= n) {
        return Err(Error::NodeOutOfRange { node: i, n });
    }
    let train: BTreeSet<usize> = split.train.iter().copied().collect();
    if let Some(i) = split.test.iter().find(|i| train.contains(i)) {
        return Err(leak(format!("node {i} is in both train and test")));
    }
    Ok(())
}

/// Every resampled index must point into the training subset.
fn guard_resampled(set: &ResampledSet, train_len: usize) -> Result<()> {
    if let Some(&k) = set.indices.iter().find(|&&k| k >= train_len) {
        return Err(leak(format!("resampled index {k} outside the {train_len} training samples")));
    }
    Ok(())
}

/// Labels visible to training code: the true label at training nodes, 0 elsewhere.
fn masked_labels(labels: &LabelSet, train: &[usize]) -> Vec<u8> {
    let mut out = vec![0u8; labels.len()];
    for &i in train {
        out[i] = labels.labels[i];
    }
    out
}

fn train_positive_rate(labels: &LabelSet, train: &[usize]) -> f64 {
    train.iter().filter(|&&i| labels.labels[i] == 1).count() as f64 / train.len() as f64
}

pub(crate) fn transformed_features(features: &FeatureMatrix, transform: FeatureTransform) -> Matrix {
    match transform {
        FeatureTransform::Log1p => features.values.map(|v| v.max(0.0).ln_1p()),
        FeatureTransform::Identity => features.values.clone(),
    }
}

/// Builds the node representation. Embeddings are unsupervised and use the
/// whole graph; no labels are read.
pub fn build_representation(
    dataset: &Dataset,
    choice: RepresentationChoice,
    hp: &Hyperparameters,
    seed: u64,
) -> Result<Matrix> {
    let raw = transformed_features(&dataset.features, hp.feature_transform);
    let node2vec = || {
        let cfg = Node2VecConfig { seed: mix_seed(seed, NODE2VEC_STREAM), ..hp.node2vec.clone() };
        node2vec_embed(dataset.graph.topology(), &cfg).map(|e| e.values)
    };
    let gae = || {
        let all: Vec<usize> = (0..raw.rows()).collect();
        let input = FeatureMatrix::new(dataset.features.names.clone(), Standardizer::fit(&raw, &all).transform(&raw))?;
        let cfg = GcnConfig { seed: mix_seed(seed, GAE_STREAM), ..hp.gae.clone() };
        gae_embed(&dataset.graph, &input, &cfg).map(|e| e.values)
    };
    match choice {
        RepresentationChoice::Raw => Ok(raw),
        RepresentationChoice::Node2vec => node2vec(),
        RepresentationChoice::Node2vecRaw => Matrix::hstack(&[&node2vec()?, &raw]),
        RepresentationChoice::Gae => gae(),
        RepresentationChoice::GaeRaw => Matrix::hstack(&[&gae()?, &raw]),
    }
}

/// Strategy 1: scale on train, resample train only, fit the classifier and
/// score the test nodes.
pub fn run_strategy1(
    dataset: &Dataset,
    representation: &Matrix,
    split: &Split,
    resampler: Resampler,
    classifier: ClassifierKind,
    hp: &Hyperparameters,
    seed: u64,
) -> Result<Evaluation> {
    guard_split(split, dataset.node_count())?;
    let scaled = Standardizer::fit(representation, &split.train).transform(representation);
    let x_train = scaled.select_rows(&split.train);
    let y_train: Vec<u8> = split.train.iter().map(|&i| dataset.labels.labels[i]).collect();
    let resample_seed = mix_seed(seed, RESAMPLE_STREAM);
    let (x_fit, y_fit) = match resampler {
        Resampler::None => (x_train, y_train),
        other => {
            let set = match other {
                Resampler::Up => upsample(&y_train, resample_seed)?,
                Resampler::Down => downsample(&y_train, resample_seed)?,
                _ => smote_resample(&x_train, &y_train, hp.smote_k, resample_seed)?,
            };
            guard_resampled(&set, split.train.len())?;
            set.materialize(&x_train, &y_train)?
        }
    };
    let model = classify::train(classifier, &x_fit, &y_fit, &hp.classifiers, mix_seed(seed, MODEL_STREAM))?;
    let x_test = scaled.select_rows(&split.test);
    let predictions = model.predict(&x_test);
    let scores = match hp.score_sources.classifier(classifier) {
        ScoreSource::Probability => model.predict_proba(&x_test),
        ScoreSource::Label => predictions.iter().map(|&p| f64::from(p)).collect(),
    };
    Ok(Evaluation {
        test: split.test.clone(),
        scores,
        predictions,
    })
}

/// Strategy 2: the detector sees only test rows (scaled with train
/// statistics); Dominant trains on the whole graph without labels and is
/// read off at the test nodes. Thresholding uses the training positive rate.
pub fn run_strategy2(
    dataset: &Dataset,
    representation: &Matrix,
    split: &Split,
    detector: DetectorKind,
    hp: &Hyperparameters,
    seed: u64,
) -> Result<Evaluation> {
    guard_split(split, dataset.node_count())?;
    let scaled = Standardizer::fit(representation, &split.train).transform(representation);
    let x_test = scaled.select_rows(&split.test);
    let n_test = x_test.rows();
    let model_seed = mix_seed(seed, MODEL_STREAM);
    let mut scores = match detector {
        DetectorKind::Lof => lof_scores(&x_test, hp.lof_k.min(n_test - 1))?,
        DetectorKind::Iforest => {
            isolation_forest_scores(&x_test, hp.iforest_trees, hp.iforest_subsample.min(n_test), model_seed)?
        }
        DetectorKind::Ocsvm => {
            let gamma = hp.ocsvm_gamma.unwrap_or(1.0 / x_test.cols().max(1) as f64);
            ocsvm_scores(&x_test, hp.ocsvm_nu, gamma)?
        }
        DetectorKind::Dominant => {
            let cfg = DominantConfig { seed: model_seed, ..hp.dominant.clone() };
            let all = dominant_scores(dataset.graph.topology(), &scaled, &cfg)?;
            let picked = split.test.iter().map(|&i| all.scores[i]).collect();
            crate::detect::AnomalyScores::new(picked, DetectorKind::Dominant)?
        }
    };
    scores.contamination = train_positive_rate(&dataset.labels, &split.train).clamp(1e-9, 1.0 - 1e-9);
    let predictions = threshold(&scores)?;
    let scores = match hp.score_sources.detectors {
        ScoreSource::Probability => scores.scores,
        ScoreSource::Label => predictions.iter().map(|&p| f64::from(p)).collect(),
    };
    Ok(Evaluation {
        test: split.test.clone(),
        scores,
        predictions,
    })
}

/// Training graph for the resampling variants of strategy 3.
struct TrainingGraph {
    topology: Topology,
    features: Matrix,
    labels: Vec<u8>,
    train: Vec<usize>,
}

/// Drops the unselected majority training nodes (and their edges), keeping
/// the selected training nodes and all test nodes.
fn downsampled_graph(
    topology: &Topology,
    x: &Matrix,
    visible: &[u8],
    split: &Split,
    seed: u64,
) -> Result<TrainingGraph> {
    let y_train: Vec<u8> = split.train.iter().map(|&i| visible[i]).collect();
    let set = downsample(&y_train, seed)?;
    guard_resampled(&set, split.train.len())?;
    let selected: Vec<usize> = set.indices.iter().map(|&k| split.train[k]).collect();
    let mut keep: Vec<usize> = selected.iter().chain(&split.test).copied().collect();
    keep.sort_unstable();
    let selected_set: BTreeSet<usize> = selected.into_iter().collect();
    let train = (0..keep.len()).filter(|&k| selected_set.contains(&keep[k])).collect();
    Ok(TrainingGraph {
        topology: topology.induced(&keep),
        features: x.select_rows(&keep),
        labels: keep.iter().map(|&i| visible[i]).collect(),
        train,
    })
}

/// Appends one clone per duplicated minority training node; a clone copies
/// the feature row, label and every incident edge of its original.
fn upsampled_graph(
    topology: &Topology,
    x: &Matrix,
    visible: &[u8],
    split: &Split,
    seed: u64,
) -> Result<TrainingGraph> {
    let n = topology.node_count();
    let y_train: Vec<u8> = split.train.iter().map(|&i| visible[i]).collect();
    let set = upsample(&y_train, seed)?;
    guard_resampled(&set, split.train.len())?;
    let originals: Vec<usize> = set
        .indices
        .iter()
        .zip(&set.origins)
        .filter(|(_, o)| **o == Origin::Duplicate)
        .map(|(&k, _)| split.train[k])
        .collect();
    let mut edges = topology.edges();
    for (c, &orig) in originals.iter().enumerate() {
        edges.extend(topology.neighbors(orig).iter().map(|&u| (n + c, u)));
    }
    let clones = x.select_rows(&originals);
    let mut labels = visible.to_vec();
    labels.extend(originals.iter().map(|&i| visible[i]));
    let mut train = split.train.clone();
    train.extend(n..n + originals.len());
    Ok(TrainingGraph {
        topology: Topology::from_edges(n + originals.len(), &edges),
        features: if clones.rows() > 0 { x.vstack(&clones)? } else { x.clone() },
        labels,
        train,
    })
}

/// Strategy 3 and the GraphSMOTE baseline on scaled raw features. Resampling
/// variants train on the modified graph and score the test nodes through the
/// original graph with the learned weights.
pub fn run_strategy3(dataset: &Dataset, split: &Split, method: GraphMethod, hp: &Hyperparameters, seed: u64) -> Result<Evaluation> {
    let n = dataset.node_count();
    guard_split(split, n)?;
    let raw = transformed_features(&dataset.features, hp.feature_transform);
    let x = Standardizer::fit(&raw, &split.train).transform(&raw);
    let visible = masked_labels(&dataset.labels, &split.train);
    let topology = dataset.graph.topology();
    let op = SparseOperator::gcn_normalized(topology);
    let gcn_cfg = GcnConfig { seed: mix_seed(seed, MODEL_STREAM), ..hp.gcn.clone() };
    let resample_seed = mix_seed(seed, RESAMPLE_STREAM);

    let (probabilities, source) = match method {
        GraphMethod::Gcn => {
            let fit = gcn_train_on(&op, &x, &visible, &split.train, &gcn_cfg)?;
            (fit.scores, hp.score_sources.gcn)
        }
        GraphMethod::UpGcn | GraphMethod::DownGcn => {
            let g = if method == GraphMethod::UpGcn {
                upsampled_graph(topology, &x, &visible, split, resample_seed)?
            } else {
                downsampled_graph(topology, &x, &visible, split, resample_seed)?
            };
            let fit = gcn_train_on(&SparseOperator::gcn_normalized(&g.topology), &g.features, &g.labels, &g.train, &gcn_cfg)?;
            let model: &GcnModel = &fit.model;
            (model.predict(&op, &x), hp.score_sources.gcn)
        }
        GraphMethod::GraphSmote => {
            let cfg = GraphSmoteConfig {
                seed: mix_seed(seed, MODEL_STREAM),
                classifier: GcnConfig { seed: mix_seed(seed, MODEL_STREAM + 1), ..hp.graph_smote.classifier.clone() },
                ..hp.graph_smote.clone()
            };
            let out = graph_smote(topology, &x, &visible, &split.train, &cfg)?;
            (out.scores, hp.score_sources.graphsmote)
        }
    };
    let test_probabilities: Vec<f64> = split.test.iter().map(|&i| probabilities[i]).collect();
    let predictions: Vec<u8> = test_probabilities.iter().map(|&p| u8::from(p > 0.5)).collect();
    let scores = match source {
        ScoreSource::Probability => test_probabilities,
        ScoreSource::Label => predictions.iter().map(|&p| f64::from(p)).collect(),
    };
    Ok(Evaluation {
        test: split.test.clone(),
        scores,
        predictions,
    })
}
