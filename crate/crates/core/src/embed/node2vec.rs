//! Second-order biased random walks followed by skip-gram training with
//! negative sampling.

use serde::{Deserialize, Serialize};

use crate::codegraph::Topology;
use crate::error::{Error, Result};
use crate::numeric::{mix_seed, sigmoid, Matrix, SeededRng};

use super::{Embedding, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Node2VecConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Node2VecConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walk_length: 20,
            walks_per_node: 10,
            window: 5,
            dim: 16,
            negatives: 5,
            epochs: 1,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl Node2VecConfig {
    fn validate(&self) -> Result<()> {
        let ints = [
            self.walk_length,
            self.walks_per_node,
            self.window,
            self.dim,
            self.negatives,
            self.epochs,
        ];
        if !(self.p > 0.0 && self.q > 0.0 && self.learning_rate > 0.0) || ints.contains(&0) {
            return Err(Error::Config(format!("node2vec parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Normalized next-step distribution from `cur` having arrived from `prev`.
///
/// Unnormalized weight is `1/p` for returning to `prev`, `1` for neighbors of
/// `prev`, `1/q` otherwise. Without a previous node the step is uniform.
pub fn transition_probabilities(
    topology: &Topology,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    let nbrs = topology.neighbors(cur);
    let weights: Vec<f64> = nbrs
        .iter()
        .map(|&x| match prev {
            None => 1.0,
            Some(t) if x == t => 1.0 / p,
            Some(t) if topology.has_edge(t, x) => 1.0,
            Some(_) => 1.0 / q,
        })
        .collect();
    let total: f64 = weights.iter().sum();
    nbrs.iter().zip(weights).map(|(&x, w)| (x, w / total)).collect()
}

fn walk_from(topology: &Topology, start: usize, cfg: &Node2VecConfig, rng: &mut SeededRng) -> Vec<usize> {
    let mut walk = vec![start];
    let uniform = cfg.p == 1.0 && cfg.q == 1.0;
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let nbrs = topology.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = if uniform || walk.len() == 1 {
            nbrs[rng.below(nbrs.len())]
        } else {
            let prev = walk[walk.len() - 2];
            let probs = transition_probabilities(topology, Some(prev), cur, cfg.p, cfg.q);
            let weights: Vec<f64> = probs.iter().map(|&(_, w)| w).collect();
            probs[rng.weighted_index(&weights)].0
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` walks from every node. Each start node uses its own
/// derived seed, so the output does not depend on iteration order.
pub fn generate_walks(topology: &Topology, cfg: &Node2VecConfig) -> Vec<Vec<usize>> {
    let n = topology.node_count();
    let mut per_node: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n);
    for v in 0..n {
        let mut rng = SeededRng::new(mix_seed(cfg.seed, v as u64));
        per_node.push((0..cfg.walks_per_node).map(|_| walk_from(topology, v, cfg, &mut rng)).collect());
    }
    let mut walks = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        for node_walks in &per_node {
            walks.push(node_walks[round].clone());
        }
    }
    walks
}

/// Cumulative unigram^0.75 distribution over nodes by walk frequency.
fn noise_distribution(walks: &[Vec<usize>], n: usize) -> Vec<f64> {
    let mut counts = vec![0.0f64; n];
    for w in walks {
        for &v in w {
            counts[v] += 1.0;
        }
    }
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for c in counts {
        acc += c.powf(0.75);
        cum.push(acc);
    }
    cum
}

fn sample_noise(cum: &[f64], rng: &mut SeededRng) -> usize {
    let total = *cum.last().unwrap();
    let target = rng.uniform() * total;
    cum.partition_point(|&c| c <= target).min(cum.len() - 1)
}

/// node2vec embedding: input-vector matrix of a skip-gram model trained on the walks.
pub fn node2vec_embed(topology: &Topology, cfg: &Node2VecConfig) -> Result<Embedding> {
    cfg.validate()?;
    let n = topology.node_count();
    if n == 0 {
        return Err(Error::InvalidArgument("node2vec on an empty graph".into()));
    }
    let d = cfg.dim;
    let walks = generate_walks(topology, cfg);
    let noise = noise_distribution(&walks, n);

    let mut rng = SeededRng::new(mix_seed(cfg.seed, u64::MAX));
    let mut input = Matrix::from_fn(n, d, |_, _| (rng.uniform() - 0.5) / d as f64);
    let mut output = Matrix::zeros(n, d);

    let pairs_per_epoch: usize = walks
        .iter()
        .map(|w| {
            (0..w.len())
                .map(|i| {
                    let lo = i.saturating_sub(cfg.window);
                    let hi = (i + cfg.window).min(w.len() - 1);
                    hi - lo
                })
                .sum::<usize>()
        })
        .sum();
    let total_pairs = (pairs_per_epoch * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;

    let mut order: Vec<usize> = (0..walks.len()).collect();
    let mut grad_in = vec![0.0; d];
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for &wi in &order {
            let walk = &walks[wi];
            for (i, &center) in walk.iter().enumerate() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(walk.len() - 1);
                for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let lr = cfg.learning_rate * (1.0 - processed as f64 / total_pairs).max(1e-4);
                    processed += 1;
                    grad_in.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = sample_noise(&noise, &mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let score: f64 = input
                            .row(center)
                            .iter()
                            .zip(output.row(target))
                            .map(|(a, b)| a * b)
                            .sum();
                        let g = lr * (label - sigmoid(score));
                        let in_row = input.row(center).to_vec();
                        let out_row = output.row_mut(target);
                        for c in 0..d {
                            grad_in[c] += g * out_row[c];
                            out_row[c] += g * in_row[c];
                        }
                    }
                    for (v, g) in input.row_mut(center).iter_mut().zip(&grad_in) {
                        *v += g;
                    }
                }
            }
        }
    }
    Embedding::new(input, Provenance::Node2vec)
}
