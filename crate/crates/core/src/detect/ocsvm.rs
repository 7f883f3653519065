use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{squared_distance, Matrix};

use super::{AnomalyScores, DetectorKind};

/// Stopping tolerance on the maximal KKT violation.
pub const OCSVM_TOLERANCE: f64 = 1e-4;

/// Trained one-class SVM with an RBF kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub support: Matrix,
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub nu: f64,
    pub iterations: usize,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

impl OcsvmModel {
    /// Solves `min ½ αᵀKα` subject to `0 ≤ α ≤ 1/(νn)`, `Σα = 1` by
    /// maximal-violating-pair updates.
    pub fn fit(x: &Matrix, nu: f64, gamma: f64) -> Result<Self> {
        let n = x.rows();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("one-class SVM needs n >= 2 (got {n})")));
        }
        if !(nu > 0.0 && nu <= 1.0) || !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("one-class SVM needs nu in (0,1] and gamma > 0 (nu = {nu}, gamma = {gamma})")));
        }
        let c = 1.0 / (nu * n as f64);
        let k = Matrix::from_fn(n, n, |i, j| rbf(gamma, x.row(i), x.row(j)));

        // Feasible start: fill the first points to the upper bound.
        let mut alpha = vec![0.0; n];
        let mut remaining = 1.0;
        for a in alpha.iter_mut() {
            if remaining <= 0.0 {
                break;
            }
            *a = c.min(remaining);
            remaining -= *a;
        }
        let mut grad = vec![0.0; n];
        for (j, &aj) in alpha.iter().enumerate() {
            if aj != 0.0 {
                for (i, g) in grad.iter_mut().enumerate() {
                    *g += aj * k.get(i, j);
                }
            }
        }

        let max_iter = (10_000 * n).max(1_000_000);
        let mut iterations = 0;
        loop {
            // i: may increase (α_i < C) with smallest gradient; j: may decrease with largest.
            let mut i_best = None;
            let mut j_best = None;
            for t in 0..n {
                if alpha[t] < c && i_best.is_none_or(|i: usize| grad[t] < grad[i]) {
                    i_best = Some(t);
                }
                if alpha[t] > 0.0 && j_best.is_none_or(|j: usize| grad[t] > grad[j]) {
                    j_best = Some(t);
                }
            }
            let (Some(i), Some(j)) = (i_best, j_best) else { break };
            let violation = grad[j] - grad[i];
            if violation <= OCSVM_TOLERANCE {
                break;
            }
            if iterations >= max_iter {
                return Err(Error::NoConvergence { iterations, residual: violation });
            }
            iterations += 1;
            let eta = (k.get(i, i) + k.get(j, j) - 2.0 * k.get(i, j)).max(1e-12);
            let step = (violation / eta).min(c - alpha[i]).min(alpha[j]);
            alpha[i] += step;
            alpha[j] -= step;
            // keep exact bounds despite rounding
            if c - alpha[i] < 1e-15 {
                alpha[i] = c;
            }
            if alpha[j] < 1e-15 {
                alpha[j] = 0.0;
            }
            for (t, g) in grad.iter_mut().enumerate() {
                *g += step * (k.get(t, i) - k.get(t, j));
            }
        }

        let free: Vec<f64> = (0..n).filter(|&t| alpha[t] > 0.0 && alpha[t] < c).map(|t| grad[t]).collect();
        let rho = if free.is_empty() {
            let upper = (0..n).filter(|&t| alpha[t] >= c).map(|t| grad[t]).fold(f64::NEG_INFINITY, f64::max);
            let lower = (0..n).filter(|&t| alpha[t] <= 0.0).map(|t| grad[t]).fold(f64::INFINITY, f64::min);
            match (upper.is_finite(), lower.is_finite()) {
                (true, true) => (upper + lower) / 2.0,
                (true, false) => upper,
                _ => lower,
            }
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        };
        Ok(Self {
            support: x.clone(),
            alpha,
            rho,
            gamma,
            nu,
            iterations,
        })
    }

    /// `ρ − Σ α_i k(x_i, x)`; positive means outside the estimated support.
    pub fn score(&self, row: &[f64]) -> f64 {
        let f: f64 = self
            .alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, &a)| a * rbf(self.gamma, self.support.row(i), row))
            .sum();
        self.rho - f
    }
}

/// Fits on `x` and scores the same rows.
pub fn ocsvm_scores(x: &Matrix, nu: f64, gamma: f64) -> Result<AnomalyScores> {
    let model = OcsvmModel::fit(x, nu, gamma)?;
    let scores = (0..x.rows()).map(|i| model.score(x.row(i))).collect();
    Ok(AnomalyScores::new(scores, DetectorKind::Ocsvm)?.with_contamination(nu.min(0.999)))
}
