//! `propagate`: train and evaluate retweeter models, simulate populations,
//! compare contact strategies and serve the campaign API.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use propagate_core::classify::{Imbalance, ModelKind};
use propagate_core::recommend::DEFAULT_CUTOFF;
use propagate_core::simulate::experiment::DEFAULT_BUDGET;
use propagate_core::simulate::strategy::{parse_strategies, StrategyKind};
use propagate_core::waittime::parse_duration;

#[derive(Parser, Debug)]
#[command(name = "propagate", version, about = "Find, rank and engage likely retweeters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a classifier on a labeled dataset.
    Train(TrainArgs),
    /// Score models on a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Rank features by χ² against the label.
    SelectFeatures(SelectArgs),
    /// Generate a labeled synthetic population.
    Simulate(SimulateArgs),
    /// Train on a synthetic population and compare contact strategies.
    Experiment(ExperimentArgs),
    /// Rank candidates for a deadline.
    Recommend(RecommendArgs),
    /// Serve the campaign API.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Labeled dataset (JSONL).
    #[arg(long)]
    data: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    model_kind: ModelKind,
    /// basic, smote[:K] or weighted:R.
    #[arg(long, default_value = "basic", value_parser = parse_imbalance)]
    imbalance: Imbalance,
    #[arg(long)]
    seed: u64,
    /// Keep only χ²-significant features, binned into this many bins.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Model files; repeat to compare several.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    /// Labeled test dataset (JSONL).
    #[arg(long)]
    data: PathBuf,
    /// Also write the reports as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = propagate_core::preprocess::DEFAULT_BINS)]
    bins: usize,
    /// Write the scores as CSV instead of printing them.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Population config (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the population size of the config.
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Labeled dataset to write; the training part when `--test-out` is given.
    #[arg(long)]
    out: PathBuf,
    /// Split 2/3–1/3 and write the smaller part here.
    #[arg(long)]
    test_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated: random, popular[:N], predicted, predicted_waittime[:T[:C]].
    #[arg(long, value_parser = parse_strategy_list)]
    strategies: Option<Strategies>,
    /// Users contacted per strategy.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Window of the windowed retweeting rate (e.g. 24h).
    #[arg(long, default_value = "24h", value_parser = parse_deadline)]
    deadline: i64,
    #[arg(long)]
    seed: u64,
    /// Write the comparison as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the full outcome as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Strategies(Vec<StrategyKind>);

#[derive(Args, Debug)]
struct RecommendArgs {
    #[arg(long)]
    model: PathBuf,
    /// Candidate users (JSONL).
    #[arg(long)]
    data: PathBuf,
    /// Deadline, in seconds or with an h/m/s suffix.
    #[arg(long, default_value = "24h", value_parser = parse_deadline)]
    deadline: i64,
    #[arg(long, default_value_t = DEFAULT_CUTOFF, value_parser = parse_cutoff)]
    cutoff: f64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    top_n: u64,
    /// Epoch seconds at which candidates are asked; defaults to the latest
    /// post in the data.
    #[arg(long)]
    request_time: Option<i64>,
    /// Write the ranking as JSON instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long)]
    log_dir: PathBuf,
    /// Answer dispatches from a synthetic population generated with this config.
    #[arg(long, requires = "seed")]
    config: Option<PathBuf>,
    /// Seed of the synthetic population and its responses.
    #[arg(long, requires = "config")]
    seed: Option<u64>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: propagate_core::classify::ClassifyError| e.to_string())
}

fn parse_imbalance(s: &str) -> Result<Imbalance, String> {
    s.parse().map_err(|e: propagate_core::classify::ClassifyError| e.to_string())
}

fn parse_deadline(s: &str) -> Result<i64, String> {
    match parse_duration(s) {
        Some(d) if d > 0 => Ok(d),
        _ => Err(format!("expected a positive duration such as 24h, 90m or 3600, got {s:?}")),
    }
}

fn parse_cutoff(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(c) if (0.0..=1.0).contains(&c) => Ok(c),
        _ => Err(format!("cutoff must lie in [0, 1], got {s:?}")),
    }
}

fn parse_strategy_list(s: &str) -> Result<Strategies, String> {
    parse_strategies(s).map(Strategies).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::SelectFeatures(a) => commands::select_features(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Recommend(a) => commands::recommend(a),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
