use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub added: u64,
    pub deleted: u64,
}

/// One commit as it appears in the JSON-lines log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_id: String,
    pub author: String,
    pub commit_ts: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub push_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub push_ts: Option<i64>,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revert_of: Option<String>,
    pub files: Vec<FileChange>,
}

impl CommitRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("commit serializes")
    }
}

/// Raw line shape; counts are signed so negative values can be reported.
#[derive(Deserialize)]
struct RawFileChange {
    path: String,
    added: i64,
    deleted: i64,
}

#[derive(Deserialize)]
struct RawCommit {
    commit_id: String,
    author: String,
    commit_ts: i64,
    #[serde(default)]
    push_id: Option<String>,
    #[serde(default)]
    push_ts: Option<i64>,
    message: String,
    #[serde(default)]
    revert_of: Option<String>,
    files: Vec<RawFileChange>,
}

/// Parses a JSON-lines commit log. Blank lines are skipped; any malformed line
/// aborts with its 1-based line number. Output is ordered by
/// `(commit_ts, commit_id)` so the result does not depend on input line order.
pub fn parse_commit_log(stream: &str) -> Result<Vec<CommitRecord>> {
    let mut out = Vec::new();
    for (idx, line) in stream.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawCommit = serde_json::from_str(line).map_err(|e| Error::CommitLog {
            line: line_no,
            message: e.to_string(),
        })?;
        if raw.files.is_empty() {
            return Err(Error::CommitLog {
                line: line_no,
                message: "commit has no file changes".into(),
            });
        }
        if let Some(push_ts) = raw.push_ts {
            if push_ts < raw.commit_ts {
                return Err(Error::CommitLog {
                    line: line_no,
                    message: format!("push_ts {push_ts} precedes commit_ts {}", raw.commit_ts),
                });
            }
        }
        let mut files = Vec::with_capacity(raw.files.len());
        for f in raw.files {
            if f.added < 0 || f.deleted < 0 {
                return Err(Error::NegativeLineCount { line: line_no });
            }
            files.push(FileChange {
                path: f.path.replace('\\', "/"),
                added: f.added as u64,
                deleted: f.deleted as u64,
            });
        }
        out.push(CommitRecord {
            commit_id: raw.commit_id,
            author: raw.author,
            commit_ts: raw.commit_ts,
            push_id: raw.push_id,
            push_ts: raw.push_ts,
            message: raw.message,
            revert_of: raw.revert_of,
            files,
        });
    }
    sort_commits(&mut out);
    Ok(out)
}

pub(crate) fn sort_commits(commits: &mut [CommitRecord]) {
    commits.sort_by(|a, b| {
        a.commit_ts
            .cmp(&b.commit_ts)
            .then_with(|| a.commit_id.cmp(&b.commit_id))
    });
}
