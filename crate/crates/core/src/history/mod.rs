//! Commit-log ingestion, revert labeling, per-file history features and
//! Information-Value feature ranking.

mod commits;
mod complexity;
mod features;
mod iv;
mod labels;

pub use commits::{parse_commit_log, CommitRecord, FileChange};
pub use complexity::cyclomatic_complexity;
pub use features::{
    compute_features, FeatureMatrix, FEATURE_NAMES, REVERT_WINDOW_SECONDS, SECONDS_PER_DAY,
};
pub use iv::{information_value, DEFAULT_IV_BINS};
pub use labels::{
    is_revert, label_reverts, label_reverts_after, revert_events, LabelSet, Overrides, RevertEvent,
};
