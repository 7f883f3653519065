//! Synthetic repositories: planted import graphs realized as Python sources,
//! commit logs whose history features follow risk-shifted log-normal draws,
//! and planted revert labels encoded as post-cutoff revert commits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codegraph::{build_code_graph, CodeGraph, Topology};
use crate::error::{Error, Result};
use crate::history::{compute_features, CommitRecord, FileChange, FEATURE_NAMES, SECONDS_PER_DAY};
use crate::numeric::{mix_seed, sigmoid, Matrix, SeededRng, Standardizer};

/// Feature importances the default signal weights are proportional to, in
/// the order of [`FEATURE_NAMES`].
pub const REFERENCE_IV: [f64; 8] = [0.570, 0.326, 0.188, 0.151, 0.100, 0.082, 0.063, 0.014];

/// Allowed gap between realized and target positive rate.
pub const RATE_TOLERANCE: f64 = 0.005;

pub const MAX_BISECTION_ITERATIONS: usize = 100;

/// Commit timestamp of the feature cutoff; label events come after it.
pub const DEFAULT_CUTOFF_TS: i64 = 1_700_000_000;

/// Column of `dependent_modules`, the one feature fixed by the graph.
const DEPENDENTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_nodes: usize,
    /// Import edges added per new file.
    pub attachment: usize,
    pub communities: usize,
    /// Probability that an edge leaves the new file's community.
    pub mixing: f64,
    pub positive_rate: f64,
    /// Logit weight per standardized log feature.
    pub beta: Vec<f64>,
    /// Logit increase per reverted neighbor.
    pub contagion: f64,
    /// Scale of the per-community risk offset (a centered exponential draw).
    pub community_risk: f64,
    /// How strongly latent risk shifts the history draws.
    pub risk_shift: f64,
    pub authors: usize,
    pub history_days: i64,
    pub seed: u64,
}

/// Largest weight of the default IV-proportional `beta`.
pub const DEFAULT_BETA_SCALE: f64 = 0.5;

/// `scale · IV_k / IV_max` for each feature.
pub fn iv_proportional_beta(scale: f64) -> Vec<f64> {
    REFERENCE_IV.iter().map(|iv| scale * iv / REFERENCE_IV[0]).collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_nodes: 2000,
            attachment: 1,
            communities: 10,
            mixing: 0.02,
            positive_rate: 0.04,
            beta: iv_proportional_beta(DEFAULT_BETA_SCALE),
            contagion: 1.0,
            community_risk: 3.0,
            risk_shift: 1.1,
            authors: 60,
            history_days: 365,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_nodes < 20 {
            return bad(format!("n_nodes must be ≥ 20 (got {})", self.n_nodes));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 0.5) {
            return bad(format!("positive_rate must lie in (0, 0.5) (got {})", self.positive_rate));
        }
        if self.beta.len() != FEATURE_NAMES.len() {
            return bad(format!("beta needs {} weights (got {})", FEATURE_NAMES.len(), self.beta.len()));
        }
        if self.attachment == 0 || self.communities == 0 || self.authors == 0 {
            return bad("attachment, communities and authors must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return bad(format!("mixing must lie in [0, 1] (got {})", self.mixing));
        }
        if self.history_days < 60 {
            return bad(format!("history_days must be ≥ 60 (got {})", self.history_days));
        }
        let finite = self.beta.iter().chain([&self.contagion, &self.community_risk, &self.risk_shift]);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return bad("synth weights must be finite".into());
        }
        Ok(())
    }
}

/// Generated repository plus the planted truth. Node `i` of `planted` is the
/// file `paths[i]`.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub config: SynthConfig,
    pub files: BTreeMap<String, String>,
    pub commits: Vec<CommitRecord>,
    pub paths: Vec<String>,
    pub planted: Topology,
    pub communities: Vec<usize>,
    pub labels: Vec<u8>,
    pub cutoff_ts: i64,
    pub intercept: f64,
    pub realized_rate: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a SynthConfig,
    cutoff_ts: i64,
    intercept: f64,
    realized_rate: f64,
    nodes: usize,
    positives: usize,
}

impl SyntheticDataset {
    pub fn commit_log(&self) -> String {
        let mut out = String::new();
        for c in &self.commits {
            out.push_str(&c.to_json_line());
            out.push('\n');
        }
        out
    }

    pub fn labels_by_path(&self) -> BTreeMap<String, u8> {
        self.paths.iter().cloned().zip(self.labels.iter().copied()).collect()
    }

    pub fn labels_csv(&self) -> String {
        let mut out = String::from("path,label\n");
        for (p, l) in self.labels_by_path() {
            let _ = writeln!(out, "{p},{l}");
        }
        out
    }

    /// Writes `repo/`, `commits.jsonl`, `labels.csv` and `synth.json` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let write = |path: &Path, text: &str| -> Result<()> {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(path, text).map_err(|e| Error::io(path, e))
        };
        for (rel, text) in &self.files {
            write(&dir.join("repo").join(rel), text)?;
        }
        write(&dir.join("commits.jsonl"), &self.commit_log())?;
        write(&dir.join("labels.csv"), &self.labels_csv())?;
        let manifest = Manifest {
            config: &self.config,
            cutoff_ts: self.cutoff_ts,
            intercept: self.intercept,
            realized_rate: self.realized_rate,
            nodes: self.paths.len(),
            positives: self.labels.iter().filter(|&&l| l == 1).count(),
        };
        let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json("synth manifest", e))?;
        json.push('\n');
        write(&dir.join("synth.json"), &json)
    }
}

/// Preferential attachment inside planted communities: file `i` links to
/// `attachment` distinct earlier files, chosen with weight `degree + 1` from its
/// own community with probability `1 − mixing` and from all files otherwise.
pub fn planted_graph(cfg: &SynthConfig, rng: &mut SeededRng) -> (Topology, Vec<usize>) {
    let n = cfg.n_nodes;
    let communities: Vec<usize> = (0..n).map(|_| rng.below(cfg.communities)).collect();
    let mut degree = vec![0usize; n];
    let mut edges = Vec::new();
    for i in 1..n {
        let mut chosen: Vec<usize> = Vec::new();
        let want = cfg.attachment.min(i);
        while chosen.len() < want {
            let local = !rng.bernoulli(cfg.mixing);
            let pool: Vec<usize> = (0..i)
                .filter(|&j| !chosen.contains(&j) && (!local || communities[j] == communities[i]))
                .collect();
            let pool = if pool.is_empty() {
                (0..i).filter(|j| !chosen.contains(j)).collect()
            } else {
                pool
            };
            let weights: Vec<f64> = pool.iter().map(|&j| (degree[j] + 1) as f64).collect();
            chosen.push(pool[rng.weighted_index(&weights)]);
        }
        for j in chosen {
            degree[i] += 1;
            degree[j] += 1;
            edges.push((i, j));
        }
    }
    (Topology::from_edges(n, &edges), communities)
}

fn module_path(i: usize, community: usize) -> String {
    format!("pkg{community:02}/mod{i:05}.py")
}

/// Source of file `i`: one import statement per planted edge to an earlier
/// file (forms vary), some external imports, and `branches` `if` statements.
fn render_source(
    i: usize,
    communities: &[usize],
    targets: &[usize],
    branches: usize,
    rng: &mut SeededRng,
) -> String {
    let own = communities[i];
    let mut s = format!("\"\"\"Synthetic module {i}.\"\"\"\n");
    if rng.bernoulli(0.3) {
        s.push_str("import os\n");
    }
    if rng.bernoulli(0.2) {
        s.push_str("from collections import defaultdict\n");
    }
    for &j in targets {
        let (c, name) = (communities[j], format!("mod{j:05}"));
        let line = match (c == own, rng.below(3)) {
            (true, 0) => format!("from . import {name}\n"),
            (true, 1) => format!("from .{name} import run as run_{j}\n"),
            (_, 0) | (_, 1) => format!("from pkg{c:02}.{name} import run\n"),
            _ => format!("import pkg{c:02}.{name} as dep_{j}\n"),
        };
        s.push_str(&line);
    }
    s.push_str("\n\ndef run(value):\n");
    for b in 0..branches {
        let _ = writeln!(s, "    if value > {b}:\n        value -= 1");
    }
    s.push_str("    return value\n");
    s
}

/// `exp(N(mu + shift, sd))`.
fn log_normal(rng: &mut SeededRng, mu: f64, shift: f64, sd: f64) -> f64 {
    (mu + shift + sd * rng.normal()).exp()
}

struct CommitFactory {
    seed: u64,
    counter: u64,
    commits: Vec<CommitRecord>,
}

impl CommitFactory {
    fn push(
        &mut self,
        author: &str,
        ts: i64,
        push_id: Option<String>,
        push_ts: i64,
        message: String,
        revert_of: Option<String>,
        files: Vec<FileChange>,
    ) -> String {
        let id = format!("{:016x}{:06}", mix_seed(self.seed, self.counter), self.counter);
        self.counter += 1;
        self.commits.push(CommitRecord {
            commit_id: id.clone(),
            author: author.to_string(),
            commit_ts: ts,
            push_id,
            push_ts: Some(push_ts),
            message,
            revert_of,
            files,
        });
        id
    }
}

fn change(path: &str, added: u64, deleted: u64) -> FileChange {
    FileChange {
        path: path.to_string(),
        added,
        deleted,
    }
}

/// Pre-cutoff history for one file. `r[k]` shifts the draws behind feature
/// `k` (in [`FEATURE_NAMES`] order); `r[6]` is unused since dependents come
/// from the graph.
fn file_history(
    path: &str,
    index: usize,
    r: &[f64; 8],
    cfg: &SynthConfig,
    cutoff: i64,
    factory: &mut CommitFactory,
    rng: &mut SeededRng,
) {
    let day = SECONDS_PER_DAY;
    let start = cutoff - cfg.history_days * day;
    let window = cutoff - 30 * day;
    let normal = log_normal(rng, 4f64.ln(), 0.4 * r[1], 0.6).floor() as usize;
    let reverts = rng.poisson(0.12 * (0.9 * r[0]).exp()).min(4) as usize;
    let total = normal + 2 * reverts + 1;
    let n_authors = (1.0 + log_normal(rng, 1.2f64.ln(), 0.3 * r[5], 0.5).floor()).min(total as f64) as usize;
    let authors: Vec<String> = rng
        .sample_without_replacement(cfg.authors, n_authors.min(cfg.authors))
        .into_iter()
        .map(|a| format!("dev{a:03}"))
        .collect();
    let lag_days = log_normal(rng, 0.0, 0.4 * r[2], 0.7);
    let mut k = 0usize;
    let mut next_author = || {
        let a = authors[k % authors.len()].clone();
        k += 1;
        a
    };
    let lag = |rng: &mut SeededRng| (lag_days * (0.5 + rng.uniform()) * day as f64) as i64;

    let mut times: Vec<i64> = (0..normal).map(|_| start + rng.below((window - start - day) as usize) as i64).collect();
    times.sort_unstable();
    for t in times {
        let (a, d) = (1 + rng.below(20) as u64, rng.below(10) as u64);
        let l = lag(rng);
        factory.push(&next_author(), t, None, t + l, format!("update module {index}"), None, vec![change(path, a, d)]);
    }
    for _ in 0..reverts {
        let t = window + day + rng.below((25 * day) as usize) as i64;
        let l = lag(rng);
        let author = next_author();
        let target = factory.push(&author, t, None, t + l, format!("change module {index}"), None, vec![change(path, 5 + rng.below(30) as u64, rng.below(5) as u64)]);
        let rt = t + 3600 + rng.below((12 * 3600) as usize) as i64;
        factory.push(&author, rt, None, rt + l, format!("Revert \"change module {index}\""), Some(target), vec![change(path, 1, 5)]);
    }

    // Latest commit: the file's push set, with companion non-source files.
    let t = cutoff - rng.below(day as usize) as i64;
    let loc = log_normal(rng, 60f64.ln(), 0.5 * r[3], 0.8).round().max(1.0) as u64;
    let companions = log_normal(rng, 2f64.ln(), 0.4 * r[7], 0.6).floor() as usize;
    let mut files = vec![change(path, loc.div_ceil(2), loc / 2)];
    for c in 0..companions {
        files.push(change(&format!("docs/mod{index:05}/note{c}.md"), 1, 0));
    }
    let l = lag(rng);
    factory.push(&next_author(), t, Some(format!("push-{index:05}")), t + l, format!("release module {index}"), None, files);
}

/// Realized labels for intercept `b`: a first pass from the feature logits,
/// then a second pass adding `contagion ·` (reverted neighbors in the first
/// pass). Both passes reuse fixed uniforms, so the rate is monotone in `b`.
fn realize_labels(b: f64, logits: &[f64], topology: &Topology, contagion: f64, u: &[(f64, f64)]) -> Vec<u8> {
    let first: Vec<bool> = logits.iter().zip(u).map(|(l, (u1, _))| *u1 < sigmoid(b + l)).collect();
    (0..logits.len())
        .map(|i| {
            let hits = topology.neighbors(i).iter().filter(|&&j| first[j]).count() as f64;
            u8::from(u[i].1 < sigmoid(b + logits[i] + contagion * hits))
        })
        .collect()
}

/// Bisects the intercept until the realized positive rate is within
/// [`RATE_TOLERANCE`] of `target`.
pub fn calibrate_intercept(
    logits: &[f64],
    topology: &Topology,
    contagion: f64,
    uniforms: &[(f64, f64)],
    target: f64,
) -> Result<(f64, Vec<u8>)> {
    let rate = |y: &[u8]| y.iter().filter(|&&l| l == 1).count() as f64 / y.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    let mut achieved = f64::NAN;
    for _ in 0..MAX_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let y = realize_labels(mid, logits, topology, contagion, uniforms);
        achieved = rate(&y);
        if (achieved - target).abs() <= RATE_TOLERANCE {
            return Ok((mid, y));
        }
        if achieved < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Bisection {
        iterations: MAX_BISECTION_ITERATIONS,
        achieved,
    })
}

/// Standardized `ln(1 + x)` of every feature column, fitted on all rows.
fn log_standardized(values: &Matrix) -> Matrix {
    let logged = values.map(|v| v.max(0.0).ln_1p());
    let all: Vec<usize> = (0..logged.rows()).collect();
    Standardizer::fit(&logged, &all).transform(&logged)
}

/// Builds a repository from `cfg`; see the module docs for the steps.
pub fn generate_synthetic_dataset(cfg: &SynthConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    let n = cfg.n_nodes;
    let mut graph_rng = SeededRng::new(mix_seed(cfg.seed, 1));
    let (planted, communities) = planted_graph(cfg, &mut graph_rng);

    let mut risk_rng = SeededRng::new(mix_seed(cfg.seed, 2));
    // Centered exponential: most communities sit slightly below average and a
    // few carry most of the risk.
    let offsets: Vec<f64> = (0..cfg.communities)
        .map(|_| cfg.community_risk * (-risk_rng.uniform_open().ln() - 1.0))
        .collect();
    // Per-file, per-feature propensities sharing the community offset.
    let latent: Vec<[f64; 8]> = (0..n)
        .map(|i| std::array::from_fn(|_| offsets[communities[i]] + risk_rng.normal()))
        .collect();
    let shifts: Vec<[f64; 8]> = latent.iter().map(|l| l.map(|v| cfg.risk_shift * v)).collect();

    let mut src_rng = SeededRng::new(mix_seed(cfg.seed, 3));
    let paths: Vec<String> = (0..n).map(|i| module_path(i, communities[i])).collect();
    let mut files = BTreeMap::new();
    for i in 0..n {
        let targets: Vec<usize> = planted.neighbors(i).iter().copied().filter(|&j| j < i).collect();
        let branches = log_normal(&mut src_rng, 3f64.ln(), 0.5 * shifts[i][4], 0.7).floor() as usize;
        files.insert(paths[i].clone(), render_source(i, &communities, &targets, branches, &mut src_rng));
    }

    let cutoff = DEFAULT_CUTOFF_TS;
    let mut factory = CommitFactory {
        seed: mix_seed(cfg.seed, 4),
        counter: 0,
        commits: Vec::new(),
    };
    for i in 0..n {
        let mut rng = SeededRng::new(mix_seed(cfg.seed, 1_000 + i as u64));
        file_history(&paths[i], i, &shifts[i], cfg, cutoff, &mut factory, &mut rng);
    }

    let graph = build_code_graph(&files)?;
    let features = compute_features(&factory.commits, &graph, &files, cutoff)?;
    let z = log_standardized(&features.values);
    let node_of: Vec<usize> = paths.iter().map(|p| graph.node_id(p).expect("planted file is a node")).collect();
    // Risk follows the propensities, not the noisy history they produced;
    // dependents have no propensity, so their observed value stands in.
    let propensity = Matrix::from_fn(n, FEATURE_NAMES.len(), |i, k| {
        if k == DEPENDENTS {
            z.get(node_of[i], k)
        } else {
            latent[i][k]
        }
    });
    let all: Vec<usize> = (0..n).collect();
    let propensity = Standardizer::fit(&propensity, &all).transform(&propensity);
    let logits: Vec<f64> = (0..n).map(|i| crate::numeric::dot(propensity.row(i), &cfg.beta)).collect();

    let mut label_rng = SeededRng::new(mix_seed(cfg.seed, 5));
    let uniforms: Vec<(f64, f64)> = (0..n).map(|_| (label_rng.uniform(), label_rng.uniform())).collect();
    let (intercept, labels) = calibrate_intercept(&logits, &planted, cfg.contagion, &uniforms, cfg.positive_rate)?;

    let mut event_rng = SeededRng::new(mix_seed(cfg.seed, 6));
    for i in (0..n).filter(|&i| labels[i] == 1) {
        let t = cutoff + SECONDS_PER_DAY + event_rng.below((50 * SECONDS_PER_DAY) as usize) as i64;
        let author = format!("dev{:03}", event_rng.below(cfg.authors));
        let target = factory.push(&author, t, None, t + 600, format!("follow-up on module {i}"), None, vec![change(&paths[i], 8, 2)]);
        let rt = t + 7200;
        factory.push(&author, rt, None, rt + 600, format!("Revert \"follow-up on module {i}\""), Some(target), vec![change(&paths[i], 2, 8)]);
    }
    let mut commits = factory.commits;
    commits.sort_by(|a, b| a.commit_ts.cmp(&b.commit_ts).then_with(|| a.commit_id.cmp(&b.commit_id)));

    let realized_rate = labels.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
    Ok(SyntheticDataset {
        config: cfg.clone(),
        files,
        commits,
        paths,
        planted,
        communities,
        labels,
        cutoff_ts: cutoff,
        intercept,
        realized_rate,
    })
}

/// Maps planted node ids to ids of `graph` by path.
pub fn node_mapping(dataset: &SyntheticDataset, graph: &CodeGraph) -> Option<Vec<usize>> {
    dataset.paths.iter().map(|p| graph.node_id(p)).collect()
}
