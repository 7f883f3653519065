use crate::error::{Error, Result};
use crate::numeric::{squared_distance, Matrix};

use super::{AnomalyScores, DetectorKind};

/// Floor on mean reachability distance so duplicate points keep a finite density.
const MIN_REACH: f64 = 1e-12;

/// Local outlier factor with exactly `k` neighbors per point (ties in
/// distance broken by index).
pub fn lof_scores(x: &Matrix, k: usize) -> Result<AnomalyScores> {
    let n = x.rows();
    if k == 0 || n <= k {
        return Err(Error::InvalidArgument(format!("LOF needs n > k >= 1 (n = {n}, k = {k})")));
    }
    let dist = Matrix::from_fn(n, n, |i, j| squared_distance(x.row(i), x.row(j)).sqrt());
    let mut knn = Vec::with_capacity(n);
    let mut kdist = Vec::with_capacity(n);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| dist.get(i, a).total_cmp(&dist.get(i, b)).then(a.cmp(&b)));
        order.truncate(k);
        kdist.push(dist.get(i, order[k - 1]));
        knn.push(order);
    }
    let lrd: Vec<f64> = (0..n)
        .map(|a| {
            let mean_reach = knn[a].iter().map(|&b| kdist[b].max(dist.get(a, b))).sum::<f64>() / k as f64;
            1.0 / mean_reach.max(MIN_REACH)
        })
        .collect();
    let scores = (0..n)
        .map(|a| knn[a].iter().map(|&b| lrd[b]).sum::<f64>() / (k as f64 * lrd[a]))
        .collect();
    AnomalyScores::new(scores, DetectorKind::Lof)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_outlier_is_max() {
        let mut rows = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                rows.push(vec![i as f64, j as f64]);
            }
        }
        rows.push(vec![100.0, 100.0]);
        let s = lof_scores(&Matrix::from_rows(&rows).unwrap(), 3).unwrap();
        let max = s.scores[..9].iter().copied().fold(f64::MIN, f64::max);
        assert!(s.scores[9] > max);
    }

    #[test]
    fn ring_is_uniform() {
        let n = 6;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let s = lof_scores(&Matrix::from_rows(&rows).unwrap(), n - 1).unwrap();
        assert!(s.scores.iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn duplicates_stay_finite() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0], vec![5.0]]).unwrap();
        let s = lof_scores(&x, 2).unwrap();
        assert!(s.scores.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_small_n() {
        assert!(lof_scores(&Matrix::zeros(3, 2), 3).is_err());
        assert!(lof_scores(&Matrix::zeros(3, 2), 0).is_err());
    }
}
