//! Dual-decoder graph autoencoder: a GCN encoder `Z`, a structure decoder
//! `σ(Z Zᵀ)` and an attribute decoder `Â Z W`. Nodes are scored by their
//! weighted reconstruction errors.

use serde::{Deserialize, Serialize};

use crate::codegraph::Topology;
use crate::embed::{encoder_loss_and_grad, encoder_output, init_encoder, sample_non_edges};
use crate::error::{Error, Result};
use crate::numeric::{dot, glorot, mix_seed, sigmoid, Adam, Matrix, SeededRng, SparseOperator};

use super::{AnomalyScores, DetectorKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DominantConfig {
    /// Weight of the structure term; `1 - alpha` weighs the attribute term.
    pub alpha: f64,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for DominantConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            hidden_dim: 16,
            epochs: 100,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

/// Combined loss `α · mean structure error + (1 − α) · mean attribute error`
/// with gradient w.r.t. `[W0, W1, W_attr]`.
///
/// The structure error is the squared gap between `σ(z_i·z_j)` and the
/// adjacency target over `positives` (1) and `negatives` (0); the attribute
/// error is the per-node squared norm of `x_i − (Â Z W)_i`.
pub fn dominant_loss_and_grad(
    op: &SparseOperator,
    x: &Matrix,
    ax: &Matrix,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
    alpha: f64,
    params: &[Matrix],
) -> (f64, Vec<Matrix>) {
    encoder_loss_and_grad(op, ax, params, |z, extra| {
        let w = &extra[0];
        let n = z.rows() as f64;
        let mut dz = Matrix::zeros(z.rows(), z.cols());

        let pairs = (positives.len() + negatives.len()).max(1) as f64;
        let mut structure = 0.0;
        let targets = positives.iter().map(|&p| (p, 1.0)).chain(negatives.iter().map(|&p| (p, 0.0)));
        for ((i, j), a) in targets {
            let p = sigmoid(dot(z.row(i), z.row(j)));
            structure += (a - p) * (a - p);
            let g = alpha * -2.0 * (a - p) * p * (1.0 - p) / pairs;
            for k in 0..z.cols() {
                dz.add_at(i, k, g * z.get(j, k));
                dz.add_at(j, k, g * z.get(i, k));
            }
        }

        let az = op.apply(z);
        let resid = az.matmul(w).zip_map(x, |h, v| h - v);
        let attribute = resid.sum_sq();
        let d_hat = resid.scale(2.0 * (1.0 - alpha) / n);
        let dw = az.t_matmul(&d_hat);
        dz.add_assign(&op.apply_transpose(&d_hat.matmul_t(w)));

        let loss = alpha * structure / pairs + (1.0 - alpha) * attribute / n;
        (loss, dz, vec![dw])
    })
}

/// Node `i`'s scoring pairs: its edges plus `max(deg, 1)` sampled non-neighbors.
fn scoring_negatives(topology: &Topology, seed: u64) -> Vec<Vec<usize>> {
    let n = topology.node_count();
    (0..n)
        .map(|i| {
            let mut rng = SeededRng::new(mix_seed(seed, i as u64));
            let free = n - 1 - topology.degree(i);
            if free == 0 {
                return Vec::new();
            }
            let want = topology.degree(i).max(1);
            let mut out = Vec::with_capacity(want);
            while out.len() < want {
                let j = rng.below(n);
                if j != i && !topology.has_edge(i, j) {
                    out.push(j);
                }
            }
            out
        })
        .collect()
}

/// Trains the autoencoder on `x` over `topology` and scores every node by
/// `α‖A_i − Â_i‖₂ + (1 − α)‖x_i − x̂_i‖₂`.
pub fn dominant_scores(topology: &Topology, x: &Matrix, cfg: &DominantConfig) -> Result<AnomalyScores> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::Config(format!("Dominant alpha {} outside [0, 1]", cfg.alpha)));
    }
    if cfg.hidden_dim == 0 || cfg.epochs == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Config(format!("invalid Dominant config: {cfg:?}")));
    }
    let n = topology.node_count();
    if x.rows() != n {
        return Err(Error::Shape("Dominant features and graph disagree".into()));
    }
    let op = SparseOperator::gcn_normalized(topology);
    let ax = op.apply(x);
    let (w0, w1) = init_encoder(x.cols(), cfg.hidden_dim, cfg.hidden_dim, cfg.seed);
    let mut rng = SeededRng::new(mix_seed(cfg.seed, 0x646f_6d));
    let w = glorot(cfg.hidden_dim, x.cols(), &mut rng);
    let mut params = vec![w0, w1, w];
    let positives = topology.edges();
    let mut adam = Adam::new(cfg.learning_rate);
    for _ in 0..cfg.epochs {
        let negatives = sample_non_edges(topology, positives.len(), &mut rng);
        let (loss, grads) = dominant_loss_and_grad(&op, x, &ax, &positives, &negatives, cfg.alpha, &params);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("Dominant loss {loss}")));
        }
        adam.step(&mut params, &grads);
    }

    let z = encoder_output(&op, x, &params[0], &params[1]);
    let x_hat = op.apply(&z).matmul(&params[2]);
    let negatives = scoring_negatives(topology, mix_seed(cfg.seed, 0x73636f));
    let scores = (0..n)
        .map(|i| {
            let edge_err: f64 = topology
                .neighbors(i)
                .iter()
                .map(|&j| (1.0 - sigmoid(dot(z.row(i), z.row(j)))).powi(2))
                .sum();
            let non_err: f64 = negatives[i].iter().map(|&j| sigmoid(dot(z.row(i), z.row(j))).powi(2)).sum();
            let structure = (edge_err + non_err).sqrt();
            let attribute = x.row(i).iter().zip(x_hat.row(i)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            cfg.alpha * structure + (1.0 - cfg.alpha) * attribute
        })
        .collect();
    AnomalyScores::new(scores, DetectorKind::Dominant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gradient_check;

    fn graph() -> Topology {
        Topology::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (2, 3)])
    }

    fn feats(n: usize, m: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        Matrix::from_fn(n, m, |_, _| rng.normal())
    }

    #[test]
    fn combined_loss_gradient() {
        let t = graph();
        let op = SparseOperator::gcn_normalized(&t);
        let x = feats(6, 3, 1);
        let ax = op.apply(&x);
        let pos = t.edges();
        let neg = sample_non_edges(&t, pos.len(), &mut SeededRng::new(2));
        let (w0, w1) = init_encoder(3, 4, 4, 3);
        let w = glorot(4, 3, &mut SeededRng::new(4));
        for alpha in [0.0, 0.5, 1.0] {
            let err = gradient_check(
                |p| dominant_loss_and_grad(&op, &x, &ax, &pos, &neg, alpha, p),
                &[w0.clone(), w1.clone(), w.clone()],
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "alpha {alpha}: relative error {err}");
        }
    }

    #[test]
    fn alpha_one_drops_the_attribute_term() {
        let t = graph();
        let op = SparseOperator::gcn_normalized(&t);
        let x = feats(6, 3, 1);
        let ax = op.apply(&x);
        let pos = t.edges();
        let (w0, w1) = init_encoder(3, 4, 4, 3);
        let w = glorot(4, 3, &mut SeededRng::new(4));
        let (_, g) = dominant_loss_and_grad(&op, &x, &ax, &pos, &[], 1.0, &[w0.clone(), w1.clone(), w.clone()]);
        assert_eq!(g[2].sum_sq(), 0.0);
        // moving the attribute decoder leaves the loss unchanged
        let (a, _) = dominant_loss_and_grad(&op, &x, &ax, &pos, &[], 1.0, &[w0.clone(), w1.clone(), w.clone()]);
        let (b, _) = dominant_loss_and_grad(&op, &x, &ax, &pos, &[], 1.0, &[w0, w1, w.scale(3.0)]);
        assert_eq!(a, b);
    }

    #[test]
    fn planted_attribute_outlier_ranks_high() {
        // Feature-homophilous communities with one node carrying foreign features.
        let mut hits = 0;
        for seed in 0..10 {
            let mut rng = SeededRng::new(100 + seed);
            let n = 60;
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let same = (i % 3) == (j % 3);
                    if rng.bernoulli(if same { 0.25 } else { 0.01 }) {
                        edges.push((i, j));
                    }
                }
            }
            let t = Topology::from_edges(n, &edges);
            let centers = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
            let mut x = Matrix::from_fn(n, 3, |i, j| centers[i % 3][j] + 0.2 * rng.normal());
            let planted = 7;
            for j in 0..3 {
                x.set(planted, j, rng.gaussian(0.0, 4.0));
            }
            let s = dominant_scores(&t, &x, &DominantConfig { seed, ..Default::default() }).unwrap();
            let rank = (0..n).filter(|&i| s.scores[i] > s.scores[planted]).count();
            hits += usize::from(rank < 3);
        }
        assert!(hits >= 8, "{hits}/10");
    }

    #[test]
    fn rejects_bad_alpha() {
        let cfg = DominantConfig { alpha: 1.5, ..Default::default() };
        assert!(dominant_scores(&graph(), &feats(6, 2, 1), &cfg).is_err());
    }
}
