use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use log::info;
use propagate_core::classify::{self, ModelSpec};
use propagate_core::corpus;
use propagate_core::features::Extractor;
use propagate_core::io::write_atomic;
use propagate_core::metrics;
use propagate_core::pipeline;
use propagate_core::preprocess;
use propagate_core::recommend::{self, CandidateInput};
use propagate_core::simulate::experiment::TRAIN_FRACTION;
use propagate_core::simulate::{generate_population, probe_dataset, run_experiment, ExperimentConfig, PopulationConfig};
use propagate_core::waittime;
use propagate_service::{CampaignService, Dispatcher, LogOnly, SimulatorOracle, SystemClock};

use crate::error::{core, CliError, Result};
use crate::{EvaluateArgs, ExperimentArgs, RecommendArgs, SelectArgs, ServeArgs, SimulateArgs, TrainArgs};

fn input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new("MissingInput", format!("{} is not a readable file", path.display())))
    }
}

fn output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::new("MissingOutputDir", format!("directory {} does not exist", dir.display())))
        }
        _ if path.is_dir() => Err(CliError::new("MissingOutputDir", format!("{} is a directory", path.display()))),
        _ => Ok(()),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).map_err(|e| CliError::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn population_config(path: Option<&Path>, seed: u64) -> Result<PopulationConfig> {
    let mut cfg = match path {
        Some(p) => PopulationConfig::load(p).map_err(core)?,
        None => PopulationConfig::default(),
    };
    cfg.seed = seed;
    Ok(cfg)
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    bytes
}

pub fn train(a: TrainArgs) -> Result<()> {
    input(&a.data)?;
    output(&a.out)?;
    let ds = corpus::load_dataset(&a.data).map_err(core)?;
    let table = Extractor::default().extract_dataset(&ds).map_err(core)?;
    let spec = ModelSpec::new(a.model_kind, a.imbalance, a.seed);
    let model = pipeline::train_with_selection(&spec, &table, a.bins)?;
    write(&a.out, &model.to_json())?;
    println!("{} {} {} features", model.id, model.spec.imbalance.setting(), model.mask.len());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    a.model.iter().try_for_each(|m| input(m))?;
    input(&a.data)?;
    if let Some(out) = &a.out {
        output(out)?;
    }
    let models = a.model.iter().map(|p| classify::load_model(p).map_err(core)).collect::<Result<Vec<_>>>()?;
    let ds = corpus::load_dataset(&a.data).map_err(core)?;
    let table = Extractor::default().extract_dataset(&ds).map_err(core)?;
    let reports = models.iter().map(|m| metrics::evaluate(m, &table).map_err(core)).collect::<Result<Vec<_>>>()?;
    print!("{}", metrics::render_table(&reports));
    if let Some(out) = &a.out {
        write(out, metrics::render_csv(&reports).as_bytes())?;
    }
    Ok(())
}

pub fn select_features(a: SelectArgs) -> Result<()> {
    input(&a.data)?;
    if let Some(out) = &a.out {
        output(out)?;
    }
    let ds = corpus::load_dataset(&a.data).map_err(core)?;
    let table = Extractor::default().extract_dataset(&ds).map_err(core)?;
    let scores = preprocess::chi_squared_scores(&table, a.bins).map_err(core)?;
    let csv = preprocess::scores_to_csv(&scores);
    match &a.out {
        Some(out) => write(out, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    let selected = preprocess::selected_features(&scores);
    eprintln!("{} of {} features significant", selected.len(), scores.len());
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    if let Some(c) = &a.config {
        input(c)?;
    }
    output(&a.out)?;
    if let Some(t) = &a.test_out {
        output(t)?;
    }
    let mut cfg = population_config(a.config.as_deref(), a.seed)?;
    if let Some(n) = a.users {
        cfg.n_users = n;
    }
    let users = generate_population(&cfg).map_err(core)?;
    let ds = probe_dataset(&format!("population-{}", cfg.seed), &users, cfg.request_time, cfg.seed);
    let parts = match &a.test_out {
        Some(test_out) => {
            let (train, test) = corpus::stratified_split(&ds, TRAIN_FRACTION, a.seed).map_err(core)?;
            vec![(a.out.as_path(), train), (test_out.as_path(), test)]
        }
        None => vec![(a.out.as_path(), ds)],
    };
    for (path, part) in parts {
        write(path, part.to_jsonl().as_bytes())?;
        println!(
            "{}: {} users, {} retweeters",
            path.display(),
            part.len(),
            part.count(corpus::Label::Retweeter)
        );
    }
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    if let Some(c) = &a.config {
        input(c)?;
    }
    for out in [&a.out, &a.json].into_iter().flatten() {
        output(out)?;
    }
    let pop = population_config(a.config.as_deref(), a.seed)?;
    let mut cfg = ExperimentConfig::new(pop, a.seed);
    if let Some(s) = a.strategies {
        cfg.strategies = s.0;
    }
    cfg.budget = a.budget;
    cfg.window = a.deadline;
    let outcome = run_experiment(&cfg)?;
    print!("{}", outcome.render());
    if let Some(out) = &a.out {
        write(out, outcome.table.csv.as_bytes())?;
    }
    if let Some(json) = &a.json {
        write(json, &to_json(&outcome))?;
    }
    Ok(())
}

pub fn recommend(a: RecommendArgs) -> Result<()> {
    input(&a.model)?;
    input(&a.data)?;
    if let Some(out) = &a.out {
        output(out)?;
    }
    let model = classify::load_model(&a.model).map_err(core)?;
    let users = corpus::load_users(&a.data).map_err(core)?;
    let request_time = match a.request_time {
        Some(t) => t,
        None => users
            .iter()
            .filter_map(|u| u.last_timestamp())
            .max()
            .ok_or_else(|| CliError::new("EmptyDataset", "no posts to anchor the request time"))?,
    };
    let extractor = Extractor::default();
    let fallback = waittime::population_fallback(&users);
    let inputs = users
        .iter()
        .map(|u| {
            let fv = extractor.assemble(u, request_time).map_err(core)?;
            Ok(CandidateInput {
                user_id: u.user_id.clone(),
                retweet_probability: model.predict_vector(&fv).map_err(core)?,
                followers_count: u.followers_count,
                mean_wait: waittime::fit_wait_time(u, fallback).map_err(core)?.mean_wait,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ranked = recommend::rank_candidates(&inputs, a.deadline as f64, a.cutoff, a.top_n as usize).map_err(core)?;
    let json = to_json(&ranked);
    match &a.out {
        Some(out) => write(out, &json)?,
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    Ok(())
}

pub fn serve(a: ServeArgs) -> Result<()> {
    if let Some(c) = &a.config {
        input(c)?;
    }
    std::fs::create_dir_all(&a.log_dir).map_err(|e| CliError::io(&a.log_dir, e))?;
    let dispatcher: Arc<dyn Dispatcher> = match (&a.config, a.seed) {
        (Some(c), Some(seed)) => {
            let users = generate_population(&population_config(Some(c), seed)?).map_err(core)?;
            Arc::new(SimulatorOracle::new(&users, seed))
        }
        _ => Arc::new(LogOnly),
    };
    let service = Arc::new(CampaignService::open(&a.log_dir, Arc::new(SystemClock), dispatcher)?);
    let addr = SocketAddr::from(([127, 0, 0, 1], a.port));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::new("Io", e.to_string()))?;
    runtime
        .block_on(propagate_service::http::serve(service, addr))
        .map_err(|e| CliError::new("Io", format!("serving on {addr}: {e}")))
}
