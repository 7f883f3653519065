//! Two-layer graph convolutional network `softmax(Â relu(Â X W0) W1)`
//! without biases, trained with cross-entropy on a node subset.

use serde::{Deserialize, Serialize};

use crate::codegraph::CodeGraph;
use crate::error::{Error, Result};
use crate::history::{FeatureMatrix, LabelSet};
use crate::numeric::{glorot, Adam, Matrix, SeededRng, SparseOperator};

use super::{Embedding, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GcnConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Inverse-frequency class weights in the loss.
    pub class_weights: bool,
    pub seed: u64,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            epochs: 200,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            class_weights: false,
            seed: 0,
        }
    }
}

impl GcnConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.epochs == 0 || !(self.learning_rate > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::Config(format!("invalid GCN config: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub w0: Matrix,
    pub w1: Matrix,
}

/// Intermediate activations kept for the backward pass.
struct Forward {
    p0: Matrix,
    hidden: Matrix,
    ah: Matrix,
    out: Matrix,
}

/// `Â relu(ÂX W0) W1` given the precomputed `ÂX`.
fn encode(op: &SparseOperator, ax: &Matrix, w0: &Matrix, w1: &Matrix) -> Forward {
    let p0 = ax.matmul(w0);
    let hidden = p0.map(|v| v.max(0.0));
    let ah = op.apply(&hidden);
    let out = ah.matmul(w1);
    Forward { p0, hidden, ah, out }
}

/// Backpropagates `d_out` (gradient w.r.t. the second-layer output) to `(dW0, dW1)`.
fn encode_backward(op: &SparseOperator, ax: &Matrix, w1: &Matrix, f: &Forward, d_out: &Matrix) -> (Matrix, Matrix) {
    let dw1 = f.ah.t_matmul(d_out);
    let dh = op.apply_transpose(&d_out.matmul_t(w1));
    let dp0 = dh.zip_map(&f.p0, |g, p| if p > 0.0 { g } else { 0.0 });
    let dw0 = ax.t_matmul(&dp0);
    (dw0, dw1)
}

pub(crate) fn init_encoder(in_dim: usize, hidden: usize, out_dim: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = SeededRng::new(seed);
    let w0 = glorot(in_dim, hidden, &mut rng);
    let w1 = glorot(hidden, out_dim, &mut rng);
    (w0, w1)
}

/// Two-layer encoder output `Z = Â relu(ÂX W0) W1` (linear output layer).
pub(crate) fn encoder_output(op: &SparseOperator, x: &Matrix, w0: &Matrix, w1: &Matrix) -> Matrix {
    encode(op, &op.apply(x), w0, w1).out
}

/// Loss and gradient of a generic objective on the two-layer encoder output.
///
/// `params` is `[W0, W1, extra..]`. `head` receives `Z` and the extra
/// parameters and returns `(loss, dLoss/dZ, dLoss/dextra)`.
pub(crate) fn encoder_loss_and_grad(
    op: &SparseOperator,
    ax: &Matrix,
    params: &[Matrix],
    head: impl Fn(&Matrix, &[Matrix]) -> (f64, Matrix, Vec<Matrix>),
) -> (f64, Vec<Matrix>) {
    let f = encode(op, ax, &params[0], &params[1]);
    let (loss, d_out, extra) = head(&f.out, &params[2..]);
    let (dw0, dw1) = encode_backward(op, ax, &params[1], &f, &d_out);
    let mut grads = vec![dw0, dw1];
    grads.extend(extra);
    (loss, grads)
}

fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut probs = logits.clone();
    for i in 0..probs.rows() {
        let row = probs.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
    probs
}

/// Weighted mean cross-entropy over `targets` (`(node, class, weight)`) and
/// its gradient w.r.t. `[W0, W1]`. `ax` is `ÂX`.
pub fn gcn_loss_and_grad(
    op: &SparseOperator,
    ax: &Matrix,
    targets: &[(usize, usize, f64)],
    params: &[Matrix],
) -> (f64, Vec<Matrix>) {
    encoder_loss_and_grad(op, ax, params, |logits, _| {
        let probs = softmax_rows(logits);
        let total: f64 = targets.iter().map(|t| t.2).sum::<f64>().max(1e-300);
        let mut loss = 0.0;
        let mut d = Matrix::zeros(logits.rows(), logits.cols());
        for &(i, c, w) in targets {
            // log-softmax from logits for stability
            let row = logits.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += w * (lse - row[c]);
            for k in 0..logits.cols() {
                let y = if k == c { 1.0 } else { 0.0 };
                d.add_at(i, k, w * (probs.get(i, k) - y) / total);
            }
        }
        (loss / total, d, Vec::new())
    })
}

impl GcnModel {
    pub fn new(in_dim: usize, cfg: &GcnConfig) -> Self {
        let (w0, w1) = init_encoder(in_dim, cfg.hidden_dim, 2, cfg.seed);
        Self { w0, w1 }
    }

    pub fn zeros(in_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w0: Matrix::zeros(in_dim, hidden_dim),
            w1: Matrix::zeros(hidden_dim, 2),
        }
    }

    /// Per-node class probabilities (rows sum to 1) and the hidden layer.
    pub fn forward(&self, op: &SparseOperator, x: &Matrix) -> (Matrix, Matrix) {
        let f = encode(op, &op.apply(x), &self.w0, &self.w1);
        (softmax_rows(&f.out), f.hidden)
    }

    /// Class-1 probability for every node.
    pub fn predict(&self, op: &SparseOperator, x: &Matrix) -> Vec<f64> {
        self.forward(op, x).0.column(1)
    }
}

#[derive(Debug, Clone)]
pub struct GcnFit {
    pub model: GcnModel,
    pub hidden: Embedding,
    /// Class-1 probability for every node.
    pub scores: Vec<f64>,
    /// Training loss before each update.
    pub loss_history: Vec<f64>,
}

/// Trains on the nodes flagged in `train_mask`, which must all be known.
pub fn gcn_train(
    graph: &CodeGraph,
    x: &FeatureMatrix,
    labels: &LabelSet,
    train_mask: &[bool],
    cfg: &GcnConfig,
) -> Result<GcnFit> {
    let n = graph.node_count();
    if x.node_count() != n || labels.len() != n || train_mask.len() != n {
        return Err(Error::Shape(format!(
            "GCN inputs disagree: graph {n}, features {}, labels {}, mask {}",
            x.node_count(),
            labels.len(),
            train_mask.len()
        )));
    }
    if let Some(i) = (0..n).find(|&i| train_mask[i] && !labels.known_mask[i]) {
        return Err(Error::InvalidArgument(format!("training node {i} has an unknown label")));
    }
    let train: Vec<usize> = (0..n).filter(|&i| train_mask[i]).collect();
    let op = SparseOperator::gcn_normalized(graph.topology());
    gcn_train_on(&op, &x.values, &labels.labels, &train, cfg)
}

/// As [`gcn_train`] on an explicit operator, feature matrix and training index list.
pub fn gcn_train_on(
    op: &SparseOperator,
    x: &Matrix,
    labels: &[u8],
    train: &[usize],
    cfg: &GcnConfig,
) -> Result<GcnFit> {
    cfg.validate()?;
    if x.rows() != op.dimension() || labels.len() != op.dimension() {
        return Err(Error::Shape("GCN operator, features and labels disagree".into()));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty GCN training set".into()));
    }
    let pos = train.iter().filter(|&&i| labels[i] == 1).count();
    let neg = train.len() - pos;
    if pos == 0 || neg == 0 {
        log::warn!("GCN training set holds a single class ({pos} positive, {neg} negative)");
    }
    let class_weight = |c: usize| {
        let count = if c == 1 { pos } else { neg };
        if cfg.class_weights && count > 0 {
            train.len() as f64 / (2.0 * count as f64)
        } else {
            1.0
        }
    };
    let targets: Vec<(usize, usize, f64)> = train
        .iter()
        .map(|&i| {
            let c = usize::from(labels[i] == 1);
            (i, c, class_weight(c))
        })
        .collect();

    let ax = op.apply(x);
    let model = GcnModel::new(x.cols(), cfg);
    let mut params = vec![model.w0, model.w1];
    let mut adam = Adam::new(cfg.learning_rate).with_weight_decay(cfg.weight_decay);
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let (loss, grads) = gcn_loss_and_grad(op, &ax, &targets, &params);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("GCN loss {loss}")));
        }
        loss_history.push(loss);
        adam.step(&mut params, &grads);
    }
    let mut it = params.into_iter();
    let model = GcnModel {
        w0: it.next().unwrap(),
        w1: it.next().unwrap(),
    };
    let (probs, hidden) = model.forward(op, x);
    Ok(GcnFit {
        scores: probs.column(1),
        hidden: Embedding::new(hidden, Provenance::GcnHidden)?,
        model,
        loss_history,
    })
}
