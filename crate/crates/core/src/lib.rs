//! Code revert prediction from static import graphs, commit-history features,
//! graph representation learning and imbalance-aware classification.

pub mod balance;
pub mod classify;
pub mod codegraph;
pub mod detect;
pub mod embed;
pub mod error;
pub mod history;
pub mod numeric;
pub mod pipeline;
pub mod selfcheck;
pub mod synth;

pub use error::{Error, Result};
