//! Small deterministic numeric core: dense and sparse matrices, a seeded
//! random stream, first-order optimizers and a finite-difference gradient
//! checker. Everything is 64-bit and single-threaded.

mod gradcheck;
mod matrix;
mod optim;
mod rng;
mod sparse;

pub use gradcheck::gradient_check;
pub use matrix::{dot, sigmoid, softplus, squared_distance, Matrix};
pub use optim::{Adam, Sgd};
pub use rng::{mix_seed, SeededRng};
pub use sparse::{normalize_adjacency, SparseOperator};

/// Glorot-uniform initialization.
pub fn glorot(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform_range(-limit, limit))
}

/// Per-column standardization fitted on a subset of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fits mean and standard deviation on `rows` of `x`. Constant columns get scale 1.
    pub fn fit(x: &Matrix, rows: &[usize]) -> Self {
        let m = x.cols();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; m];
        for &i in rows {
            for (mu, v) in mean.iter_mut().zip(x.row(i)) {
                *mu += v;
            }
        }
        mean.iter_mut().for_each(|mu| *mu /= n);
        let mut var = vec![0.0; m];
        for &i in rows {
            for ((s, v), mu) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - mu) * (v - mu);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| (x.get(i, j) - self.mean[j]) / self.scale[j])
    }
}
