use crate::error::{Error, Result};
use crate::numeric::{mix_seed, Matrix, SeededRng};

use super::{AnomalyScores, DetectorKind};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Expected path length of an unsuccessful search in a binary tree of `size` points.
pub fn average_path_length(size: usize) -> f64 {
    match size {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (size - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / size as f64
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { size: usize },
    Split { feature: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

fn grow(x: &Matrix, idx: &mut [usize], depth: usize, limit: usize, rng: &mut SeededRng) -> Node {
    if depth >= limit || idx.len() <= 1 {
        return Node::Leaf { size: idx.len() };
    }
    let feature = rng.below(x.cols());
    let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        let v = x.get(i, feature);
        (lo.min(v), hi.max(v))
    });
    if lo >= hi {
        return Node::Leaf { size: idx.len() };
    }
    let value = rng.uniform_range(lo, hi);
    let mut mid = 0;
    for k in 0..idx.len() {
        if x.get(idx[k], feature) < value {
            idx.swap(k, mid);
            mid += 1;
        }
    }
    let (left, right) = idx.split_at_mut(mid);
    Node::Split {
        feature,
        value,
        left: Box::new(grow(x, left, depth + 1, limit, rng)),
        right: Box::new(grow(x, right, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, row: &[f64]) -> f64 {
    let mut node = node;
    let mut depth = 0.0;
    loop {
        match node {
            Node::Leaf { size } => return depth + average_path_length(*size),
            Node::Split { feature, value, left, right } => {
                node = if row[*feature] < *value { left } else { right };
                depth += 1.0;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IsolationForest {
    trees: Vec<Node>,
    subsample: usize,
}

impl IsolationForest {
    /// Tree `t` uses the derived seed `mix_seed(seed, t)`.
    pub fn fit(x: &Matrix, n_trees: usize, subsample_size: usize, seed: u64) -> Result<Self> {
        if x.rows() < 2 || n_trees == 0 || subsample_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "isolation forest needs n >= 2, trees >= 1, subsample >= 2 (n = {}, trees = {n_trees}, subsample = {subsample_size})",
                x.rows()
            )));
        }
        let psi = subsample_size.min(x.rows());
        let limit = (psi as f64).log2().ceil() as usize;
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = SeededRng::new(mix_seed(seed, t as u64));
                let mut idx = rng.sample_without_replacement(x.rows(), psi);
                grow(x, &mut idx, 0, limit, &mut rng)
            })
            .collect();
        Ok(Self { trees, subsample: psi })
    }

    /// `2^(-E[h(x)] / c(ψ))`.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mean = self.trees.iter().map(|t| path_length(t, row)).sum::<f64>() / self.trees.len() as f64;
        2f64.powf(-mean / average_path_length(self.subsample))
    }
}

pub fn isolation_forest_scores(x: &Matrix, n_trees: usize, subsample_size: usize, seed: u64) -> Result<AnomalyScores> {
    let forest = IsolationForest::fit(x, n_trees, subsample_size, seed)?;
    AnomalyScores::new((0..x.rows()).map(|i| forest.score(x.row(i))).collect(), DetectorKind::Iforest)
}
