//! Class rebalancing on training data: random up/downsampling, SMOTE in
//! feature space, and GraphSMOTE-style augmentation in embedding space.

mod graph_smote;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{squared_distance, Matrix, SeededRng};

pub use graph_smote::{
    edge_generator_loss_and_grad, graph_smote, GraphSmoteConfig, GraphSmoteOutput,
};

pub const DEFAULT_SMOTE_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    Duplicate,
    Synthetic,
}

/// Result of a resampling step over a training subset.
///
/// `indices[k]` points into the subset that was resampled. Synthetic samples
/// have no index; their rows live in `synthetic` and always carry the
/// minority label.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledSet {
    pub indices: Vec<usize>,
    pub origins: Vec<Origin>,
    pub synthetic: Matrix,
    pub minority_label: u8,
}

impl ResampledSet {
    pub fn len(&self) -> usize {
        self.indices.len() + self.synthetic.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature rows and labels of the resampled set: indexed samples first,
    /// synthetic rows after.
    pub fn materialize(&self, x: &Matrix, labels: &[u8]) -> Result<(Matrix, Vec<u8>)> {
        let rows = x.select_rows(&self.indices);
        let mut y: Vec<u8> = self.indices.iter().map(|&i| labels[i]).collect();
        y.extend(std::iter::repeat_n(self.minority_label, self.synthetic.rows()));
        let rows = if self.synthetic.rows() > 0 {
            rows.vstack(&self.synthetic)?
        } else {
            rows
        };
        Ok((rows, y))
    }
}

/// Indices of class 0 and class 1 and the minority label.
fn split_classes(labels: &[u8]) -> Result<(Vec<usize>, Vec<usize>, u8)> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass(format!(
            "resampling needs both classes ({} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    let minority = u8::from(pos.len() <= neg.len());
    Ok((neg, pos, minority))
}

fn by_class(labels: &[u8]) -> Result<(Vec<usize>, Vec<usize>, u8)> {
    let (neg, pos, minority) = split_classes(labels)?;
    Ok(if minority == 1 { (pos, neg, 1) } else { (neg, pos, 0) })
}

/// Minority samples drawn with replacement until both classes are equal.
pub fn upsample(labels: &[u8], seed: u64) -> Result<ResampledSet> {
    let (minority, majority, label) = by_class(labels)?;
    let mut rng = SeededRng::new(seed);
    let mut indices: Vec<usize> = (0..labels.len()).collect();
    let mut origins = vec![Origin::Original; labels.len()];
    for _ in 0..majority.len() - minority.len() {
        indices.push(minority[rng.below(minority.len())]);
        origins.push(Origin::Duplicate);
    }
    Ok(ResampledSet {
        indices,
        origins,
        synthetic: Matrix::zeros(0, 0),
        minority_label: label,
    })
}

/// Majority samples drawn without replacement down to the minority count.
/// Retained indices are returned in ascending order.
pub fn downsample(labels: &[u8], seed: u64) -> Result<ResampledSet> {
    let (minority, majority, label) = by_class(labels)?;
    let mut rng = SeededRng::new(seed);
    let mut indices = minority.clone();
    indices.extend(
        rng.sample_without_replacement(majority.len(), minority.len())
            .into_iter()
            .map(|k| majority[k]),
    );
    indices.sort_unstable();
    Ok(ResampledSet {
        origins: vec![Origin::Original; indices.len()],
        indices,
        synthetic: Matrix::zeros(0, 0),
        minority_label: label,
    })
}

/// Synthetic rows plus the interpolation record behind each one.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteSamples {
    pub rows: Matrix,
    /// Row of the minority matrix each sample starts from.
    pub base: Vec<usize>,
    /// Chosen neighbor (row of the minority matrix).
    pub neighbor: Vec<usize>,
    pub weight: Vec<f64>,
}

/// The `k` nearest other rows of `x` to row `i` (Euclidean), ties by index.
pub(crate) fn nearest_rows(x: &Matrix, i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..x.rows())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(x.row(i), x.row(j)), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

/// SMOTE: each synthetic row is `x_i + u (x_nn - x_i)` for a base row chosen
/// round-robin and one of its `k` nearest minority neighbors (`k` capped at
/// count − 1).
pub fn smote(x_minority: &Matrix, k: usize, n_synthetic: usize, seed: u64) -> Result<SmoteSamples> {
    let count = x_minority.rows();
    if count < 2 {
        return Err(Error::SmoteTooFew(count));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("SMOTE k must be at least 1".into()));
    }
    let k = k.min(count - 1);
    let neighbors: Vec<Vec<usize>> = (0..count).map(|i| nearest_rows(x_minority, i, k)).collect();
    let mut rng = SeededRng::new(seed);
    let m = x_minority.cols();
    let mut rows = Matrix::zeros(n_synthetic, m);
    let mut base = Vec::with_capacity(n_synthetic);
    let mut neighbor = Vec::with_capacity(n_synthetic);
    let mut weight = Vec::with_capacity(n_synthetic);
    for s in 0..n_synthetic {
        let i = s % count;
        let nn = neighbors[i][rng.below(k)];
        let u = rng.uniform();
        let (xi, xn) = (x_minority.row(i), x_minority.row(nn));
        for (c, out) in rows.row_mut(s).iter_mut().enumerate() {
            *out = xi[c] + u * (xn[c] - xi[c]);
        }
        base.push(i);
        neighbor.push(nn);
        weight.push(u);
    }
    Ok(SmoteSamples { rows, base, neighbor, weight })
}

/// Originals plus SMOTE rows bringing the minority up to the majority count.
pub fn smote_resample(x: &Matrix, labels: &[u8], k: usize, seed: u64) -> Result<ResampledSet> {
    let (minority, majority, label) = by_class(labels)?;
    let samples = smote(&x.select_rows(&minority), k, majority.len() - minority.len(), seed)?;
    Ok(ResampledSet {
        indices: (0..labels.len()).collect(),
        origins: vec![Origin::Original; labels.len()],
        synthetic: samples.rows,
        minority_label: label,
    })
}

/// Largest distance from each synthetic sample to the segment between its
/// recorded base and neighbor, after re-deriving the neighbor sets.
/// Returns `None` when a recorded neighbor is not among the true `k` nearest.
pub fn smote_residual(x_minority: &Matrix, k: usize, samples: &SmoteSamples) -> Option<f64> {
    let k = k.min(x_minority.rows().saturating_sub(1));
    let mut worst = 0.0f64;
    for s in 0..samples.rows.rows() {
        let b = samples.base[s];
        let nn = samples.neighbor[s];
        if !nearest_rows(x_minority, b, k).contains(&nn) {
            return None;
        }
        let (xb, xn, y) = (x_minority.row(b), x_minority.row(nn), samples.rows.row(s));
        // project y onto the segment
        let dir: Vec<f64> = xn.iter().zip(xb).map(|(a, b)| a - b).collect();
        let len2: f64 = dir.iter().map(|d| d * d).sum();
        let t = if len2 > 0.0 {
            (y.iter().zip(xb).zip(&dir).map(|((y, b), d)| (y - b) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let r = y
            .iter()
            .zip(xb)
            .zip(&dir)
            .map(|((y, b), d)| (y - b - t * d).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(neg: usize, pos: usize) -> Vec<u8> {
        let mut y = vec![0u8; neg];
        y.extend(std::iter::repeat_n(1, pos));
        y
    }

    fn counts(set: &ResampledSet, y: &[u8]) -> (usize, usize) {
        let x = Matrix::zeros(y.len(), set.synthetic.cols().max(1));
        let (_, out) = set.materialize(&x, y).unwrap();
        let pos = out.iter().filter(|&&l| l == 1).count();
        (out.len() - pos, pos)
    }

    #[test]
    fn upsample_counts_and_coverage() {
        let y = labels(96, 4);
        let set = upsample(&y, 1).unwrap();
        assert_eq!(counts(&set, &y), (96, 96));
        for i in 0..100 {
            assert!(set.indices.contains(&i));
        }
        assert!(set.origins[100..].iter().all(|&o| o == Origin::Duplicate));
        let balanced = labels(5, 5);
        assert_eq!(upsample(&balanced, 1).unwrap().indices, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn downsample_counts_and_distinct() {
        let y = labels(96, 4);
        let set = downsample(&y, 1).unwrap();
        assert_eq!(counts(&set, &y), (4, 4));
        let mut seen = set.indices.clone();
        seen.dedup();
        assert_eq!(seen.len(), 8);
        let other = downsample(&y, 2).unwrap();
        assert_ne!(set.indices, other.indices);
    }

    #[test]
    fn single_class_errors() {
        assert!(upsample(&[0, 0, 0], 1).is_err());
        assert!(downsample(&[1, 1], 1).is_err());
    }

    #[test]
    fn minority_can_be_class_zero() {
        let y = labels(3, 10);
        let set = upsample(&y, 4).unwrap();
        assert_eq!(set.minority_label, 0);
        assert_eq!(counts(&set, &y), (10, 10));
    }

    #[test]
    fn smote_midpoint_and_empty() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s = smote(&x, 5, 3, 7).unwrap();
        for k in 0..3 {
            let u = s.weight[k];
            let expected = if s.base[k] == 0 { u } else { 1.0 - u };
            assert!((s.rows.get(k, 0) - expected).abs() < 1e-15);
        }
        assert_eq!(smote(&x, 5, 0, 7).unwrap().rows.rows(), 0);
        let one = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let err = smote(&one, 5, 3, 7).unwrap_err();
        assert!(err.to_string().starts_with("SMOTE needs ≥ 2 minority samples"));
    }

    #[test]
    fn smote_base_is_round_robin() {
        let x = Matrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64);
        let s = smote(&x, 2, 10, 1).unwrap();
        assert_eq!(s.base, vec![0, 1, 2, 3, 0, 1, 2, 3, 0, 1]);
    }

    #[test]
    fn smote_resample_reaches_parity() {
        let mut rng = SeededRng::new(3);
        let x = Matrix::from_fn(50, 3, |_, _| rng.normal());
        let y = labels(44, 6);
        let set = smote_resample(&x, &y, 5, 2).unwrap();
        assert_eq!(counts(&set, &y), (44, 44));
        let (xs, _) = set.materialize(&x, &y).unwrap();
        assert_eq!(xs.row(3), x.row(3));
    }

    proptest! {
        #[test]
        fn smote_points_lie_on_neighbor_segments(
            seed in 0u64..10_000,
            count in 2usize..20,
            dims in 1usize..5,
            k in 1usize..7,
            n_syn in 0usize..40,
        ) {
            let mut rng = SeededRng::new(seed);
            let x = Matrix::from_fn(count, dims, |_, _| rng.gaussian(0.0, 3.0));
            let s = smote(&x, k, n_syn, seed).unwrap();
            let r = smote_residual(&x, k, &s);
            prop_assert!(r.is_some());
            prop_assert!(r.unwrap() < 1e-12);
        }

        #[test]
        fn resampling_is_deterministic(seed in 0u64..1000, neg in 1usize..60, pos in 1usize..60) {
            let y = labels(neg, pos);
            prop_assert_eq!(upsample(&y, seed).unwrap(), upsample(&y, seed).unwrap());
            prop_assert_eq!(downsample(&y, seed).unwrap(), downsample(&y, seed).unwrap());
            let (a, b) = counts(&downsample(&y, seed).unwrap(), &y);
            prop_assert_eq!(a, b);
        }
    }
}
