//! GraphSMOTE-style oversampling: minority interpolation in the embedding
//! space of a one-layer GCN encoder, with an inner-product edge generator
//! wiring synthetic nodes into the graph before GCN classification.

use serde::{Deserialize, Serialize};

use crate::codegraph::Topology;
use crate::embed::{gcn_train_on, sample_non_edges, GcnConfig, GcnFit};
use crate::error::{Error, Result};
use crate::numeric::{dot, glorot, mix_seed, sigmoid, softplus, Adam, Matrix, SeededRng, SparseOperator};

use super::{by_class, smote, SmoteSamples, DEFAULT_SMOTE_K};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphSmoteConfig {
    pub hidden_dim: usize,
    /// Epochs of joint encoder / edge-generator training.
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub k: usize,
    pub edge_threshold: f64,
    pub classifier: GcnConfig,
    pub seed: u64,
}

impl Default for GraphSmoteConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            epochs: 200,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            k: DEFAULT_SMOTE_K,
            edge_threshold: 0.5,
            classifier: GcnConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GraphSmoteOutput {
    /// Original nodes `0..n_original`, synthetic nodes after.
    pub topology: Topology,
    /// Encoder embeddings of all nodes, interpolated rows for synthetic ones.
    pub features: Matrix,
    /// Labels of training and synthetic nodes; other entries are 0 placeholders.
    pub labels: Vec<u8>,
    /// Original training nodes followed by all synthetic nodes.
    pub train: Vec<usize>,
    pub n_original: usize,
    /// Interpolation record; `base`/`neighbor` index into `minority_nodes`.
    pub samples: SmoteSamples,
    pub minority_nodes: Vec<usize>,
    pub fit: GcnFit,
    /// Class-1 probability of every original node.
    pub scores: Vec<f64>,
}

fn encode(ax: &Matrix, w: &Matrix) -> (Matrix, Matrix) {
    let pre = ax.matmul(w);
    let h = pre.map(|v| v.max(0.0));
    (pre, h)
}

/// Mean binary cross-entropy of the edge scorer `σ(h_i S h_j)` on
/// `positives` (1) and `negatives` (0), where `H = relu(ÂX W)`. Gradient is
/// w.r.t. `[W, S]`; `ax` is `ÂX`.
pub fn edge_generator_loss_and_grad(
    ax: &Matrix,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
    params: &[Matrix],
) -> (f64, Vec<Matrix>) {
    let (w, s) = (&params[0], &params[1]);
    let (pre, h) = encode(ax, w);
    let hs = h.matmul(s);
    let hst = h.matmul_t(s);
    let total = (positives.len() + negatives.len()).max(1) as f64;
    let mut loss = 0.0;
    let mut ds = Matrix::zeros(s.rows(), s.cols());
    let mut dh = Matrix::zeros(h.rows(), h.cols());
    let pairs = positives.iter().map(|&p| (p, 1.0)).chain(negatives.iter().map(|&p| (p, 0.0)));
    for ((i, j), a) in pairs {
        let z = dot(hs.row(i), h.row(j));
        loss += softplus(z) - a * z;
        let g = (sigmoid(z) - a) / total;
        for p in 0..s.rows() {
            for q in 0..s.cols() {
                ds.add_at(p, q, g * h.get(i, p) * h.get(j, q));
            }
        }
        for c in 0..h.cols() {
            dh.add_at(i, c, g * hst.get(j, c));
            dh.add_at(j, c, g * hs.get(i, c));
        }
    }
    let dpre = dh.zip_map(&pre, |g, p| if p > 0.0 { g } else { 0.0 });
    (loss / total, vec![ax.t_matmul(&dpre), ds])
}

/// Oversamples the minority class of `train` to parity in embedding space,
/// connects the synthetic nodes with the edge generator and trains the GCN
/// classifier on the augmented graph.
pub fn graph_smote(
    topology: &Topology,
    x: &Matrix,
    labels: &[u8],
    train: &[usize],
    cfg: &GraphSmoteConfig,
) -> Result<GraphSmoteOutput> {
    let n = topology.node_count();
    if x.rows() != n || labels.len() != n {
        return Err(Error::Shape("GraphSMOTE graph, features and labels disagree".into()));
    }
    let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
    let (minority_pos, majority_pos, minority_label) = by_class(&train_labels)?;
    let minority_nodes: Vec<usize> = minority_pos.iter().map(|&k| train[k]).collect();

    let op = SparseOperator::gcn_normalized(topology);
    let ax = op.apply(x);
    let mut rng = SeededRng::new(cfg.seed);
    let mut params = vec![glorot(x.cols(), cfg.hidden_dim, &mut rng), glorot(cfg.hidden_dim, cfg.hidden_dim, &mut rng)];

    // Edge generator is fitted on the graph induced by the training nodes.
    let train_view = topology.induced(train);
    let positives: Vec<(usize, usize)> = train_view.edges().into_iter().map(|(a, b)| (train[a], train[b])).collect();
    if !positives.is_empty() {
        let mut neg_rng = SeededRng::new(mix_seed(cfg.seed, 0x6e65_67));
        let mut adam = Adam::new(cfg.learning_rate).with_weight_decay(cfg.weight_decay);
        for _ in 0..cfg.epochs {
            let negatives: Vec<(usize, usize)> = sample_non_edges(&train_view, positives.len(), &mut neg_rng)
                .into_iter()
                .map(|(a, b)| (train[a], train[b]))
                .collect();
            let (loss, grads) = edge_generator_loss_and_grad(&ax, &positives, &negatives, &params);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("edge generator loss {loss}")));
            }
            adam.step(&mut params, &grads);
        }
    } else {
        log::warn!("training graph has no edges; edge generator left at initialization");
    }
    let (_, h) = encode(&ax, &params[0]);
    let s = &params[1];

    let n_syn = majority_pos.len() - minority_pos.len();
    let samples = smote(&h.select_rows(&minority_nodes), cfg.k, n_syn, mix_seed(cfg.seed, 0x736d_6f74))?;
    let features = h.vstack(&samples.rows)?;

    let mut edges = topology.edges();
    let syn_s = samples.rows.matmul(s);
    for t in 0..n_syn {
        for &j in train {
            if sigmoid(dot(syn_s.row(t), h.row(j))) > cfg.edge_threshold {
                edges.push((n + t, j));
            }
        }
    }
    let augmented = Topology::from_edges(n + n_syn, &edges);

    let mut aug_labels = vec![0u8; n + n_syn];
    for &i in train {
        aug_labels[i] = labels[i];
    }
    aug_labels[n..].iter_mut().for_each(|l| *l = minority_label);
    let mut aug_train = train.to_vec();
    aug_train.extend(n..n + n_syn);

    let aug_op = SparseOperator::gcn_normalized(&augmented);
    let fit = gcn_train_on(&aug_op, &features, &aug_labels, &aug_train, &cfg.classifier)?;
    let scores = fit.scores[..n].to_vec();
    Ok(GraphSmoteOutput {
        topology: augmented,
        features,
        labels: aug_labels,
        train: aug_train,
        n_original: n,
        samples,
        minority_nodes,
        fit,
        scores,
    })
}
