//! `revertgraph` command-line entry point.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on data
//! errors (unreadable inputs, malformed records, failed checks).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "revertgraph", version, about = "Predict code reverts from import graphs and commit history")]
struct Cli {
    /// Log more (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the import graph of a repository and write it as JSON.
    Extract(ExtractArgs),
    /// Compute history features (and revert labels) per graph node.
    Featurize(FeaturizeArgs),
    /// Information value of each column of a labeled features CSV.
    Iv(IvArgs),
    /// Generate a synthetic repository, commit log and labels.
    Synth(SynthArgs),
    /// Run an experiment matrix from a JSON config.
    Run(RunArgs),
    /// Run every gradient-check suite.
    Gradcheck(GradcheckArgs),
    /// Render experiment reports (JSON lines) as a table.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Repository directory or `{"files": {...}}` JSON file map.
    pub repo: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Glob of paths to leave out; repeatable.
    #[arg(long)]
    pub exclude: Vec<String>,
}

#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    /// Graph JSON from `extract`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Commit log, one JSON record per line.
    #[arg(long)]
    pub log: PathBuf,
    /// Sources for the complexity features; without it complexity is 0.
    #[arg(long)]
    pub repo: Option<PathBuf>,
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Features see commits up to this Unix time; labels use later reverts.
    #[arg(long)]
    pub cutoff: Option<i64>,
    /// Leave out the label column.
    #[arg(long)]
    pub no_labels: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct IvArgs {
    /// Features CSV with a trailing `label` column.
    pub features: PathBuf,
    #[arg(long, default_value_t = revertgraph::history::DEFAULT_IV_BINS)]
    pub bins: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// SynthConfig JSON; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces the config's seed list with this one seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for matrix entries.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Report JSON lines go here; stdout then gets only the formatted output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report JSON lines from `run`.
    pub reports: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Extract(a) => commands::extract(&a),
        Command::Featurize(a) => commands::featurize(&a),
        Command::Iv(a) => commands::iv(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Run(a) => commands::run(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error and its causes, skipping causes a message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut message = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !message.contains(&text) {
            if !message.is_empty() {
                message.push_str(": ");
            }
            message.push_str(&text);
        }
    }
    message
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<revertgraph::Error>() {
        Some(revertgraph::Error::Config(_)) => 1,
        Some(_) => 2,
        None if e.downcast_ref::<commands::UsageError>().is_some() => 1,
        None => 2,
    }
}
