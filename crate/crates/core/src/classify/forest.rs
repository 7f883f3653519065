use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{mix_seed, Matrix, SeededRng};

use super::{check_inputs, ClassifierKind, ClassifierModel, Parameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    /// Features tried per split; `None` means `⌈√m⌉`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            bootstrap: true,
            max_features: None,
        }
    }
}

/// Decision tree in flat form; leaves store the class-1 fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    k = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    max_depth: usize,
    max_features: usize,
    rng: SeededRng,
    nodes: Vec<TreeNode>,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    /// Best `(weighted impurity, threshold)` split of `idx` on `feature`.
    fn best_split(&self, idx: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut vals: Vec<(f64, u8)> = idx.iter().map(|&i| (self.x.get(i, feature), self.y[i])).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = vals.len() as f64;
        let total_pos = vals.iter().filter(|v| v.1 == 1).count() as f64;
        let mut left_pos = 0.0;
        let mut best: Option<(f64, f64)> = None;
        for k in 0..vals.len() - 1 {
            left_pos += f64::from(vals[k].1);
            if vals[k].0 == vals[k + 1].0 {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = total - nl;
            let impurity = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / total;
            if best.is_none_or(|b| impurity < b.0) {
                let mid = vals[k].0 + (vals[k + 1].0 - vals[k].0) / 2.0;
                best = Some((impurity, mid));
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: pos as f64 / idx.len() as f64 });
        if pos == 0 || pos == idx.len() || depth >= self.max_depth {
            return id;
        }
        let m = self.x.cols();
        let mut order: Vec<usize> = (0..m).collect();
        self.rng.shuffle(&mut order);
        // Sampled features first; fall back to the rest only when none splits.
        let mut best: Option<(f64, f64, usize)> = None;
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.max_features && best.is_some() {
                break;
            }
            if let Some((imp, thr)) = self.best_split(&idx, f) {
                if best.is_none_or(|b| imp < b.0) {
                    best = Some((imp, thr, f));
                }
            }
        }
        let Some((_, threshold, feature)) = best else { return id };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split { feature, threshold, left, right };
        id
    }
}

/// Bootstrap-aggregated Gini trees; tree `t` uses seed `mix_seed(seed, t)`.
pub fn train_random_forest(x: &Matrix, y: &[u8], cfg: &ForestConfig, seed: u64) -> Result<ClassifierModel> {
    check_inputs(x, y)?;
    if x.rows() < 2 || cfg.n_trees == 0 {
        return Err(Error::InvalidArgument(format!(
            "random forest needs n >= 2 and at least one tree (n = {}, trees = {})",
            x.rows(),
            cfg.n_trees
        )));
    }
    let n = x.rows();
    let max_features = cfg
        .max_features
        .unwrap_or_else(|| (x.cols() as f64).sqrt().ceil() as usize)
        .clamp(1, x.cols().max(1));
    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = SeededRng::new(mix_seed(seed, t as u64));
            let idx: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                x,
                y,
                max_depth: cfg.max_depth.unwrap_or(usize::MAX),
                max_features,
                rng,
                nodes: Vec::new(),
            };
            b.build(idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ClassifierModel::new(ClassifierKind::RandomForest, cfg, seed, Parameters::Forest { trees }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accuracy(m: &ClassifierModel, x: &Matrix, y: &[u8]) -> f64 {
        m.predict(x).iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    #[test]
    fn pure_class_is_constant() {
        let x = Matrix::from_fn(6, 2, |i, j| (i * j) as f64);
        let m = train_random_forest(&x, &[1; 6], &ForestConfig { n_trees: 5, ..Default::default() }, 0).unwrap();
        assert!(m.predict_proba(&x).iter().all(|&p| p == 1.0));
    }

    #[test]
    fn single_deep_tree_memorizes() {
        let mut rng = SeededRng::new(3);
        let x = Matrix::from_fn(80, 4, |_, _| rng.normal());
        let y: Vec<u8> = (0..80).map(|_| u8::from(rng.bernoulli(0.3))).collect();
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, ..Default::default() };
        let m = train_random_forest(&x, &y, &cfg, 1).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let y = [0, 1, 1, 0];
        let cfg = ForestConfig { n_trees: 10, max_depth: Some(2), bootstrap: false, max_features: Some(2) };
        let m = train_random_forest(&x, &y, &cfg, 2).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        // Best linear rule over a grid of directions and offsets gets 3 of 4.
        let mut best = 0;
        for a in -10..=10 {
            for b in -10..=10 {
                for c in -20..=20 {
                    let correct = (0..4)
                        .filter(|&i| {
                            let s = a as f64 * x.get(i, 0) + b as f64 * x.get(i, 1) + c as f64 / 4.0;
                            u8::from(s > 0.0) == y[i]
                        })
                        .count();
                    best = best.max(correct);
                }
            }
        }
        assert_eq!(best, 3);
    }

    #[test]
    fn serde_of_trees() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let m = train_random_forest(&x, &[0, 1, 1], &ForestConfig { n_trees: 2, bootstrap: false, ..Default::default() }, 0).unwrap();
        let Parameters::Forest { trees } = &m.parameters else { panic!() };
        assert_eq!(trees[0].node_count(), 3);
        assert_eq!(trees[0].predict(&[0.2]), 0.0);
        assert_eq!(trees[0].predict(&[0.7]), 1.0);
    }
}
