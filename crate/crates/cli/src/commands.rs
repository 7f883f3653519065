use std::collections::BTreeMap;
use std::hash::{BuildHasher, RandomState};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use revertgraph::codegraph::{build_code_graph_with_warnings, CodeGraph, SourceTree};
use revertgraph::history::{compute_features, information_value, label_reverts_after, parse_commit_log, FeatureMatrix};
use revertgraph::pipeline::{ExperimentReport, MatrixConfig, PreparedMatrix};
use revertgraph::selfcheck::gradient_suites;
use revertgraph::synth::{generate_synthetic_dataset, SynthConfig};

use crate::{output, ExtractArgs, FeaturizeArgs, GradcheckArgs, IvArgs, ReportArgs, RunArgs, SynthArgs};

/// Invalid flag combinations that clap cannot express.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| revertgraph::Error::Io {
        path: path.display().to_string(),
        source: e,
    })
    .map_err(Into::into)
}

/// Writes `text` to `path`, or to stdout without one.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn random_seed() -> u64 {
    let seed = RandomState::new().hash_one(std::time::SystemTime::now());
    log::warn!("no --seed given; using random seed {seed}");
    seed
}

pub fn extract(a: &ExtractArgs) -> Result<()> {
    let tree = SourceTree::load(&a.repo, &a.exclude)?;
    let build = build_code_graph_with_warnings(&tree.files)?;
    for w in tree.warnings.iter().chain(&build.warnings) {
        log::warn!("{w}");
    }
    log::info!("{} files, {} import edges", build.graph.node_count(), build.graph.edges().len());
    emit(a.output.as_deref(), &(build.graph.to_json() + "\n"))
}

pub fn featurize(a: &FeaturizeArgs) -> Result<()> {
    let graph = CodeGraph::from_json(&read(&a.graph)?)?;
    let commits = parse_commit_log(&read(&a.log)?)?;
    let sources = match &a.repo {
        Some(repo) => SourceTree::load(repo, &a.exclude)?.files,
        None => BTreeMap::new(),
    };
    let features = compute_features(&commits, &graph, &sources, a.cutoff.unwrap_or(i64::MAX))?;
    let labels = (!a.no_labels).then(|| label_reverts_after(&commits, graph.node_paths(), None, a.cutoff));
    emit(
        a.output.as_deref(),
        &output::features(&features, labels.as_ref(), graph.node_paths(), a.format),
    )
}

pub fn iv(a: &IvArgs) -> Result<()> {
    let (features, labels) = FeatureMatrix::from_csv(&read(&a.features)?)?;
    let Some(labels) = labels else {
        bail!("{} has no label column", a.features.display());
    };
    let values = features
        .names
        .iter()
        .enumerate()
        .map(|(k, name)| Ok((name.clone(), information_value(&features.values.column(k), &labels.labels, a.bins)?)))
        .collect::<Result<Vec<_>>>()?;
    emit(a.output.as_deref(), &output::information_values(&values, a.format))
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let (mut cfg, config_has_seed) = match &a.config {
        Some(p) => {
            let text = read(p)?;
            let doc: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| revertgraph::Error::Config(format!("{}: {e}", p.display())))?;
            let cfg: SynthConfig = serde_json::from_value(doc.clone())
                .map_err(|e| revertgraph::Error::Config(format!("{}: {e}", p.display())))?;
            (cfg, doc.get("seed").is_some())
        }
        None => (SynthConfig::default(), false),
    };
    cfg.seed = match a.seed {
        Some(s) => s,
        None if config_has_seed => cfg.seed,
        None => random_seed(),
    };
    let dataset = generate_synthetic_dataset(&cfg)?;
    dataset.write_to(&a.output)?;
    log::info!(
        "wrote {} files, {} commits, realized positive rate {:.4}",
        dataset.files.len(),
        dataset.commits.len(),
        dataset.realized_rate
    );
    Ok(())
}

pub fn run(a: &RunArgs) -> Result<()> {
    if a.jobs == 0 {
        return Err(UsageError("--jobs must be at least 1".into()).into());
    }
    let mut config = MatrixConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.seeds = vec![seed];
    } else if config.seeds.is_empty() {
        config.seeds = vec![random_seed()];
    }
    let plan = config.plan()?;
    for s in &plan.skipped {
        log::warn!(
            "skipped strategy {} {} {} {}: {}",
            s.strategy,
            s.representation,
            s.model,
            s.resampler,
            s.reason
        );
    }
    let prepared = PreparedMatrix::prepare(&config, &plan)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let reports: Vec<ExperimentReport> = pool.install(|| {
        plan.entries
            .par_iter()
            .map(|e| {
                log::info!("running {} (strategy {} {} {} {} seed {})", e.config_hash, e.strategy, e.representation.name(), e.model, e.resampler.name(), e.seed);
                prepared.run_entry(e)
            })
            .collect::<revertgraph::Result<Vec<_>>>()
    })?;
    if let Some(path) = &a.output {
        emit(Some(path), &output::reports(&reports, crate::Format::Json))?;
        if a.format != crate::Format::Json {
            emit(None, &output::reports(&reports, a.format))?;
        }
        Ok(())
    } else {
        emit(None, &output::reports(&reports, a.format))
    }
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<()> {
    let results = gradient_suites(a.seed)?;
    emit(None, &output::suites(&results, a.format))?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.model).collect();
    if !failed.is_empty() {
        bail!("gradient check failed for {}", failed.join(", "));
    }
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let reports = ExperimentReport::parse_lines(&read(&a.reports)?)?;
    emit(a.output.as_deref(), &output::reports(&reports, a.format))
}
