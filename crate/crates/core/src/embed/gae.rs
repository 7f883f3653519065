//! Graph autoencoder: the two-layer GCN encoder with an inner-product
//! decoder, trained to reconstruct edges against resampled non-edges.

use serde::{Deserialize, Serialize};

use crate::codegraph::{CodeGraph, Topology};
use crate::error::{Error, Result};
use crate::history::FeatureMatrix;
use crate::numeric::{dot, mix_seed, sigmoid, softplus, Adam, Matrix, SeededRng, SparseOperator};

use super::gcn::{encoder_loss_and_grad, encoder_output, init_encoder};
use super::{Embedding, GcnConfig, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaeModel {
    pub w0: Matrix,
    pub w1: Matrix,
}

impl GaeModel {
    pub fn encode(&self, op: &SparseOperator, x: &Matrix) -> Matrix {
        encoder_output(op, x, &self.w0, &self.w1)
    }

    /// Decoded edge probability `σ(z_i · z_j)`.
    pub fn edge_probability(z: &Matrix, i: usize, j: usize) -> f64 {
        sigmoid(dot(z.row(i), z.row(j)))
    }
}

/// `count` uniformly drawn unordered non-adjacent pairs (with replacement).
/// Empty when the graph is complete.
pub fn sample_non_edges(topology: &Topology, count: usize, rng: &mut SeededRng) -> Vec<(usize, usize)> {
    let n = topology.node_count();
    let all_pairs = n * n.saturating_sub(1) / 2;
    if all_pairs == topology.edge_count() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.below(n);
        let j = rng.below(n);
        if i != j && !topology.has_edge(i, j) {
            out.push((i.min(j), i.max(j)));
        }
    }
    out
}

/// Mean binary cross-entropy of the inner-product decoder over `positives`
/// (target 1) and `negatives` (target 0), with gradient w.r.t. `[W0, W1]`.
pub fn gae_loss_and_grad(
    op: &SparseOperator,
    ax: &Matrix,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
    params: &[Matrix],
) -> (f64, Vec<Matrix>) {
    encoder_loss_and_grad(op, ax, params, |z, _| {
        let (loss, dz) = reconstruction_head(z, positives, negatives);
        (loss, dz, Vec::new())
    })
}

pub(crate) fn reconstruction_head(z: &Matrix, positives: &[(usize, usize)], negatives: &[(usize, usize)]) -> (f64, Matrix) {
    let total = (positives.len() + negatives.len()).max(1) as f64;
    let mut loss = 0.0;
    let mut d = Matrix::zeros(z.rows(), z.cols());
    let pairs = positives.iter().map(|&p| (p, 1.0)).chain(negatives.iter().map(|&p| (p, 0.0)));
    for ((i, j), a) in pairs {
        let s = dot(z.row(i), z.row(j));
        loss += softplus(s) - a * s;
        let g = (sigmoid(s) - a) / total;
        for k in 0..z.cols() {
            d.add_at(i, k, g * z.get(j, k));
            d.add_at(j, k, g * z.get(i, k));
        }
    }
    (loss / total, d)
}

/// Trains the autoencoder and returns `Z` (dimension `cfg.hidden_dim`).
pub fn gae_embed(graph: &CodeGraph, x: &FeatureMatrix, cfg: &GcnConfig) -> Result<Embedding> {
    let (model, _) = gae_train(graph.topology(), &x.values, cfg)?;
    let op = SparseOperator::gcn_normalized(graph.topology());
    Embedding::new(model.encode(&op, &x.values), Provenance::Gae)
}

/// Returns the model and the per-epoch loss.
/// Zero epochs are allowed and return the initialized encoder.
pub(crate) fn gae_train(topology: &Topology, x: &Matrix, cfg: &GcnConfig) -> Result<(GaeModel, Vec<f64>)> {
    GcnConfig { epochs: cfg.epochs.max(1), ..cfg.clone() }.validate()?;
    if x.rows() != topology.node_count() {
        return Err(Error::Shape("GAE features and graph disagree".into()));
    }
    let op = SparseOperator::gcn_normalized(topology);
    let ax = op.apply(x);
    let (w0, w1) = init_encoder(x.cols(), cfg.hidden_dim, cfg.hidden_dim, cfg.seed);
    let mut params = vec![w0, w1];
    let positives = topology.edges();
    let mut rng = SeededRng::new(mix_seed(cfg.seed, 0x6761_65));
    let mut adam = Adam::new(cfg.learning_rate).with_weight_decay(cfg.weight_decay);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let negatives = sample_non_edges(topology, positives.len(), &mut rng);
        let (loss, grads) = gae_loss_and_grad(&op, &ax, &positives, &negatives, &params);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("GAE loss {loss}")));
        }
        history.push(loss);
        adam.step(&mut params, &grads);
    }
    let mut it = params.into_iter();
    let model = GaeModel {
        w0: it.next().unwrap(),
        w1: it.next().unwrap(),
    };
    Ok((model, history))
}
