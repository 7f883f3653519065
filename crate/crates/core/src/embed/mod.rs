//! Node representations learned from the import graph: node2vec (structure
//! only), a supervised two-layer GCN and an unsupervised graph autoencoder.

mod gae;
mod gcn;
mod node2vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::FeatureMatrix;
use crate::numeric::Matrix;

pub(crate) use gcn::{encoder_loss_and_grad, encoder_output, init_encoder};
pub use gae::{gae_embed, gae_loss_and_grad, sample_non_edges, GaeModel};
pub use gcn::{gcn_loss_and_grad, gcn_train, gcn_train_on, GcnConfig, GcnFit, GcnModel};
pub use node2vec::{node2vec_embed, transition_probabilities, generate_walks, Node2VecConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Node2vec,
    GcnHidden,
    Gae,
}

impl Provenance {
    pub fn prefix(self) -> &'static str {
        match self {
            Provenance::Node2vec => "n2v",
            Provenance::GcnHidden => "gcn",
            Provenance::Gae => "gae",
        }
    }
}

/// Learned per-node vectors; row `i` belongs to graph node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Matrix,
    pub provenance: Provenance,
}

impl Embedding {
    pub fn new(values: Matrix, provenance: Provenance) -> Result<Self> {
        if !values.is_finite() {
            return Err(Error::NonFinite(format!("{provenance:?} embedding")));
        }
        Ok(Self { values, provenance })
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn to_feature_matrix(&self) -> FeatureMatrix {
        let names = (0..self.dim())
            .map(|k| format!("{}_{k}", self.provenance.prefix()))
            .collect();
        FeatureMatrix::new(names, self.values.clone()).expect("embedding is finite")
    }

    /// CSV: `node` id column followed by the embedding dimensions.
    pub fn to_csv(&self) -> String {
        let fm = self.to_feature_matrix();
        let mut out = format!("node,{}\n", fm.names.join(","));
        for i in 0..self.values.rows() {
            let cells: Vec<String> = self.values.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{i},{}\n", cells.join(",")));
        }
        out
    }
}

/// Column-wise concatenation of representations in the given order.
pub fn concat_representation(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
    let Some(first) = parts.first() else {
        return Err(Error::InvalidArgument("no representation parts".into()));
    };
    if let Some(bad) = parts.iter().find(|p| p.node_count() != first.node_count()) {
        return Err(Error::Shape(format!(
            "representation row mismatch: {} vs {}",
            first.node_count(),
            bad.node_count()
        )));
    }
    let matrices: Vec<&Matrix> = parts.iter().map(|p| &p.values).collect();
    let names = parts.iter().flat_map(|p| p.names.iter().cloned()).collect();
    FeatureMatrix::new(names, Matrix::hstack(&matrices)?)
}
