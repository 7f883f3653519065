use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with class 1 as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predictions: &[u8], labels: &[u8]) -> Result<Self> {
        check_lengths(predictions.len(), labels.len())?;
        let mut c = Confusion::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p == 1, y == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Unweighted mean of the two per-class F1 scores.
    pub fn macro_f1(&self) -> f64 {
        let f1 = |tp: usize, fp: usize, fn_: usize| {
            let denom = 2 * tp + fp + fn_;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        };
        (f1(self.tp, self.fp, self.fn_) + f1(self.tn, self.fn_, self.fp)) / 2.0
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{a} predictions for {b} labels")));
    }
    Ok(())
}

/// Area under the ROC curve via the Mann–Whitney statistic with midranks:
/// `(Σ ranks of positives − n₊(n₊+1)/2) / (n₊·n₋)`.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("AUC scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::AucUndefined);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (0-based) share the 1-based midrank
        let midrank = (start + end + 1) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        rank_sum += midrank * positives as f64;
        start = end;
    }
    let n_pos = n_pos as f64;
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// Macro-averaged F1 of hard predictions; a class with no predicted and no
/// true members scores 0.
pub fn macro_f1(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    Ok(Confusion::from_predictions(predictions, labels)?.macro_f1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc_roc(&[0.9, 0.8, 0.1], &[1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.8, 0.9, 0.1], &[1, 0, 0]).unwrap(), 0.5);
        assert_eq!(auc_roc(&[3.0; 7], &[1, 0, 0, 1, 0, 0, 0]).unwrap(), 0.5);
        assert!(matches!(auc_roc(&[0.1, 0.2], &[1, 1]), Err(Error::AucUndefined)));
        assert!(auc_roc(&[0.1], &[1, 0]).is_err());
    }

    #[test]
    fn f1_closed_forms() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 4)).collect();
        let majority = macro_f1(&[0; 100], &labels).unwrap();
        assert!((majority - (2.0 * 0.96 / 1.96) / 2.0).abs() < 1e-15);
        let minority = macro_f1(&[1; 100], &labels).unwrap();
        assert!((minority - (2.0 * 0.04 / 1.04) / 2.0).abs() < 1e-15);
        assert_eq!(macro_f1(&labels, &labels).unwrap(), 1.0);
    }

    #[test]
    fn confusion_sums_to_total() {
        let c = Confusion::from_predictions(&[1, 0, 1, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (1, 1, 1, 1));
        assert_eq!(c.total(), 4);
    }

    proptest! {
        #[test]
        fn auc_is_rank_invariant(
            raw in prop::collection::vec((0u8..6, any::<bool>()), 2..40),
        ) {
            let labels: Vec<u8> = raw.iter().map(|r| u8::from(r.1)).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let scores: Vec<f64> = raw.iter().map(|r| f64::from(r.0)).collect();
            let warped: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp() - 3.0).collect();
            prop_assert_eq!(auc_roc(&scores, &labels).unwrap(), auc_roc(&warped, &labels).unwrap());
        }

        #[test]
        fn auc_flips_with_negated_scores(
            raw in prop::collection::vec((-5i32..5, any::<bool>()), 2..40),
        ) {
            let labels: Vec<u8> = raw.iter().map(|r| u8::from(r.1)).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let s: Vec<f64> = raw.iter().map(|r| f64::from(r.0)).collect();
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            let sum = auc_roc(&s, &labels).unwrap() + auc_roc(&neg, &labels).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
