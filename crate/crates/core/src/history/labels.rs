use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::commits::CommitRecord;

/// Per-node revert labels plus the known/unknown partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub labels: Vec<u8>,
    pub known_mask: Vec<bool>,
}

impl LabelSet {
    /// All nodes known.
    pub fn from_labels(labels: Vec<u8>) -> Self {
        let known_mask = vec![true; labels.len()];
        Self { labels, known_mask }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn positive_rate(&self) -> f64 {
        self.positives() as f64 / self.len().max(1) as f64
    }

    /// Nodes to predict: the complement of `known_mask`.
    pub fn unknown(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.known_mask[i]).collect()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.len()
    }
}

/// Manual label corrections keyed by path.
pub type Overrides = BTreeMap<String, u8>;

/// A commit that rolls back an earlier one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevertEvent {
    pub revert_commit: String,
    pub ts: i64,
    /// Files of the reverted commit, or the revert commit's own files when the
    /// target is not in the log.
    pub files: Vec<String>,
    pub target_found: bool,
}

/// `revert_of` when present, otherwise the id quoted in a git-style
/// "This reverts commit <id>." trailer.
fn revert_target(c: &CommitRecord) -> Option<String> {
    if let Some(t) = &c.revert_of {
        return Some(t.clone());
    }
    let idx = c.message.find("This reverts commit ")?;
    let rest = &c.message[idx + "This reverts commit ".len()..];
    let id: String = rest
        .chars()
        .take_while(|ch| !ch.is_whitespace() && *ch != '.')
        .collect();
    (!id.is_empty()).then_some(id)
}

pub fn is_revert(c: &CommitRecord) -> bool {
    c.revert_of.is_some()
        || c.message.starts_with("Revert \"")
        || c.message.split_whitespace().any(|t| t == "revert:")
}

/// All revert events in `commits`, in log order.
pub fn revert_events(commits: &[CommitRecord]) -> Vec<RevertEvent> {
    let by_id: HashMap<&str, &CommitRecord> =
        commits.iter().map(|c| (c.commit_id.as_str(), c)).collect();
    let mut out = Vec::new();
    for c in commits.iter().filter(|c| is_revert(c)) {
        let target = revert_target(c).and_then(|t| by_id.get(t.as_str()).copied());
        let (files, target_found) = match target {
            Some(t) => (t.files.iter().map(|f| f.path.clone()).collect(), true),
            None => {
                if let Some(missing) = &c.revert_of {
                    log::warn!(
                        "commit {} reverts unknown commit {missing}; using its own file list",
                        c.commit_id
                    );
                }
                (c.files.iter().map(|f| f.path.clone()).collect(), false)
            }
        };
        out.push(RevertEvent {
            revert_commit: c.commit_id.clone(),
            ts: c.commit_ts,
            files,
            target_found,
        });
    }
    out
}

/// Labels every file touched by a reverted commit with 1.
///
/// `inventory` is the node path list; files outside it are ignored. Overrides
/// win over derived labels. `known_mask` is all-true.
pub fn label_reverts(
    commits: &[CommitRecord],
    inventory: &[String],
    overrides: Option<&Overrides>,
) -> LabelSet {
    label_reverts_after(commits, inventory, overrides, None)
}

/// As [`label_reverts`], counting only revert events with `ts > after` when set.
pub fn label_reverts_after(
    commits: &[CommitRecord],
    inventory: &[String],
    overrides: Option<&Overrides>,
    after: Option<i64>,
) -> LabelSet {
    let index: HashMap<&str, usize> = inventory
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let mut labels = vec![0u8; inventory.len()];
    for ev in revert_events(commits) {
        if after.is_some_and(|a| ev.ts <= a) {
            continue;
        }
        for f in &ev.files {
            if let Some(&i) = index.get(f.as_str()) {
                labels[i] = 1;
            }
        }
    }
    if let Some(ov) = overrides {
        for (path, &v) in ov {
            if let Some(&i) = index.get(path.as_str()) {
                labels[i] = u8::from(v != 0);
            }
        }
    }
    LabelSet::from_labels(labels)
}
