//! Unsupervised outlier scoring: local outlier factor, isolation forest,
//! one-class SVM and the Dominant graph autoencoder. Higher scores are more
//! anomalous.

mod dominant;
mod iforest;
mod lof;
mod ocsvm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dominant::{dominant_loss_and_grad, dominant_scores, DominantConfig};
pub use iforest::{average_path_length, isolation_forest_scores, IsolationForest};
pub use lof::lof_scores;
pub use ocsvm::{ocsvm_scores, OcsvmModel, OCSVM_TOLERANCE};

pub const DEFAULT_LOF_K: usize = 20;
pub const DEFAULT_IFOREST_TREES: usize = 100;
pub const DEFAULT_IFOREST_SUBSAMPLE: usize = 256;
pub const DEFAULT_OCSVM_NU: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Lof,
    Iforest,
    Ocsvm,
    Dominant,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Lof => "lof",
            DetectorKind::Iforest => "iforest",
            DetectorKind::Ocsvm => "ocsvm",
            DetectorKind::Dominant => "dominant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyScores {
    pub scores: Vec<f64>,
    pub method: DetectorKind,
    /// Assumed anomaly fraction used by [`threshold`].
    pub contamination: f64,
}

impl AnomalyScores {
    pub fn new(scores: Vec<f64>, method: DetectorKind) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("{} scores", method.name())));
        }
        Ok(Self {
            scores,
            method,
            contamination: DEFAULT_OCSVM_NU,
        })
    }

    pub fn with_contamination(mut self, contamination: f64) -> Self {
        self.contamination = contamination;
        self
    }

    /// CSV with `node,score,label`; `nodes` maps sample position to node id.
    pub fn to_csv(&self, nodes: Option<&[usize]>) -> Result<String> {
        let labels = threshold(self)?;
        let mut out = String::from("node,score,label\n");
        for (k, (s, l)) in self.scores.iter().zip(labels).enumerate() {
            let id = nodes.map_or(k, |n| n[k]);
            out.push_str(&format!("{id},{s},{l}\n"));
        }
        Ok(out)
    }
}

/// Labels the top `⌈contamination·n⌉` scores 1; ties at the cut go to the
/// lower sample index.
pub fn threshold(scores: &AnomalyScores) -> Result<Vec<u8>> {
    let c = scores.contamination;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("contamination {c} outside (0, 1)")));
    }
    let n = scores.scores.len();
    // guard against 0.04 * 100 landing a hair above 4
    let count = ((c * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores.scores[b].total_cmp(&scores.scores[a]).then(a.cmp(&b)));
    let mut labels = vec![0u8; n];
    for &i in order.iter().take(count.min(n)) {
        labels[i] = 1;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: Vec<f64>, c: f64) -> AnomalyScores {
        AnomalyScores::new(v, DetectorKind::Lof).unwrap().with_contamination(c)
    }

    #[test]
    fn threshold_counts() {
        let s = scores((0..100).map(|i| (i * 37 % 100) as f64).collect(), 0.04);
        assert_eq!(threshold(&s).unwrap().iter().filter(|&&l| l == 1).count(), 4);
    }

    #[test]
    fn threshold_ties_go_to_low_index() {
        let s = scores(vec![1.0; 100], 0.04);
        let l = threshold(&s).unwrap();
        assert_eq!(l[..4], [1, 1, 1, 1]);
        assert!(l[4..].iter().all(|&v| v == 0));
    }

    #[test]
    fn threshold_rejects_bad_contamination() {
        assert!(threshold(&scores(vec![1.0; 10], 1.0)).is_err());
        assert!(threshold(&scores(vec![1.0; 10], 0.0)).is_err());
    }

    #[test]
    fn ceil_rounds_up() {
        let s = scores(vec![3.0, 2.0, 1.0], 0.4);
        assert_eq!(threshold(&s).unwrap(), vec![1, 1, 0]);
    }

    #[test]
    fn csv_export() {
        let s = scores(vec![0.5, 2.0], 0.5);
        assert_eq!(s.to_csv(Some(&[7, 9])).unwrap(), "node,score,label\n7,0.5,0\n9,2,1\n");
    }

    #[test]
    fn non_finite_rejected() {
        assert!(AnomalyScores::new(vec![f64::NAN], DetectorKind::Ocsvm).is_err());
    }
}
