use crate::codegraph::{CodeGraph, Topology};

use super::matrix::Matrix;

/// Compressed-row sparse operator over graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

/// GCN propagation operator `D̃^{-1/2} (A + I) D̃^{-1/2}` with `d̃ = degree + 1`.
pub fn normalize_adjacency(graph: &CodeGraph) -> SparseOperator {
    SparseOperator::gcn_normalized(graph.topology())
}

impl SparseOperator {
    pub fn gcn_normalized(topology: &Topology) -> Self {
        let n = topology.node_count();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| 1.0 / ((topology.degree(i) + 1) as f64).sqrt())
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for i in 0..n {
            let nbrs = topology.neighbors(i);
            let mut self_done = false;
            for &j in nbrs {
                if !self_done && j > i {
                    indices.push(i);
                    weights.push(inv_sqrt[i] * inv_sqrt[i]);
                    self_done = true;
                }
                indices.push(j);
                weights.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            if !self_done {
                indices.push(i);
                weights.push(inv_sqrt[i] * inv_sqrt[i]);
            }
            offsets.push(indices.len());
        }
        Self {
            n,
            offsets,
            indices,
            weights,
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.weights[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    /// `self · m`
    pub fn apply(&self, m: &Matrix) -> Matrix {
        assert_eq!(m.rows(), self.n, "operator dimension");
        let mut out = Matrix::zeros(self.n, m.cols());
        for i in 0..self.n {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            let out_row = out.row_mut(i);
            for k in a..b {
                let w = self.weights[k];
                for (o, &v) in out_row.iter_mut().zip(m.row(self.indices[k])) {
                    *o += w * v;
                }
            }
        }
        out
    }

    /// `selfᵀ · m`; equals [`apply`](Self::apply) for the symmetric GCN operator.
    pub fn apply_transpose(&self, m: &Matrix) -> Matrix {
        assert_eq!(m.rows(), self.n, "operator dimension");
        let mut out = Matrix::zeros(self.n, m.cols());
        for i in 0..self.n {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            for k in a..b {
                let w = self.weights[k];
                let j = self.indices[k];
                for c in 0..m.cols() {
                    out.add_at(j, c, w * m.get(i, c));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut d = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                d.set(i, j, w);
            }
        }
        d
    }
}
