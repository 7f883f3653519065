//! Finite-difference checks of every hand-written gradient on small random
//! problems.

use serde::Serialize;

use crate::balance::edge_generator_loss_and_grad;
use crate::classify::logreg_loss_and_grad;
use crate::codegraph::Topology;
use crate::detect::dominant_loss_and_grad;
use crate::embed::{gae_loss_and_grad, gcn_loss_and_grad, sample_non_edges};
use crate::error::Result;
use crate::numeric::{glorot, gradient_check, Matrix, SeededRng, SparseOperator};

/// Step used by the suites; matches the acceptance tolerance of `1e-4`.
pub const GRADCHECK_EPSILON: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub model: &'static str,
    pub max_relative_error: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.max_relative_error < GRADCHECK_TOLERANCE
    }
}

/// A ring with random chords over `n` nodes.
fn random_graph(n: usize, rng: &mut SeededRng) -> Topology {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for _ in 0..n / 2 {
        let (a, b) = (rng.below(n), rng.below(n));
        if a != b {
            edges.push((a, b));
        }
    }
    Topology::from_edges(n, &edges)
}

/// Runs the logistic regression, GCN, GAE, Dominant and GraphSMOTE edge
/// generator checks at [`GRADCHECK_EPSILON`].
pub fn gradient_suites(seed: u64) -> Result<Vec<SuiteResult>> {
    let mut rng = SeededRng::new(seed);
    let (n, m, hidden, out) = (12, 3, 5, 4);
    let topology = random_graph(n, &mut rng);
    let op = SparseOperator::gcn_normalized(&topology);
    let x = Matrix::from_fn(n, m, |_, _| rng.normal());
    let ax = op.apply(&x);
    let pos = topology.edges();
    let neg = sample_non_edges(&topology, pos.len(), &mut rng);
    let mut layer = |r: usize, c: usize| glorot(r, c, &mut rng);
    let encoder = [layer(m, hidden), layer(hidden, out)];
    let classifier = [layer(m, hidden), layer(hidden, 2)];
    let attribute = layer(out, m);
    let scorer = [layer(m, hidden), layer(hidden, hidden)];

    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    let lr_params = [Matrix::from_fn(m, 1, |i, _| 0.1 * i as f64 - 0.1), Matrix::filled(1, 1, 0.2)];
    let targets: Vec<(usize, usize, f64)> = (0..n).step_by(2).map(|i| (i, usize::from(y[i]), 1.0 + y[i] as f64)).collect();
    let dominant_params = [encoder[0].clone(), encoder[1].clone(), attribute];

    Ok(vec![
        SuiteResult {
            model: "logreg",
            max_relative_error: gradient_check(|p| logreg_loss_and_grad(&x, &y, 0.1, p), &lr_params, GRADCHECK_EPSILON)?,
        },
        SuiteResult {
            model: "gcn",
            max_relative_error: gradient_check(|p| gcn_loss_and_grad(&op, &ax, &targets, p), &classifier, GRADCHECK_EPSILON)?,
        },
        SuiteResult {
            model: "gae",
            max_relative_error: gradient_check(|p| gae_loss_and_grad(&op, &ax, &pos, &neg, p), &encoder, GRADCHECK_EPSILON)?,
        },
        SuiteResult {
            model: "dominant",
            max_relative_error: gradient_check(
                |p| dominant_loss_and_grad(&op, &x, &ax, &pos, &neg, 0.5, p),
                &dominant_params,
                GRADCHECK_EPSILON,
            )?,
        },
        SuiteResult {
            model: "graphsmote_edge_generator",
            max_relative_error: gradient_check(|p| edge_generator_loss_and_grad(&ax, &pos, &neg, p), &scorer, GRADCHECK_EPSILON)?,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for seed in 0..3 {
            for r in gradient_suites(seed).unwrap() {
                assert!(r.passed(), "seed {seed}: {r:?}");
            }
        }
    }
}
