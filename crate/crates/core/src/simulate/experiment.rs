//! End-to-end strategy comparison on a synthetic population.
//!
//! Everyone in a training population is probed once at the request time to
//! obtain labels; the labeled users are split 2/3–1/3 and a cost-sensitive
//! random forest is trained on the larger part and evaluated on the rest.
//! The strategies then contact users of a fresh population generated from
//! the same config with a different seed, standing in for the live
//! candidate stream of a campaign.

use serde::Serialize;

use super::oracle::probe_dataset;
use super::population::{generate_population, PopulationConfig, SyntheticUser};
use super::strategy::{experiment_report, run_strategy, ComparisonTable, RunContext, ScoredPool, StrategyKind, StrategyResult, StrategySpec};
use crate::classify::{self, Hyperparameters, Imbalance, ModelKind, ModelSpec, TrainedModel};
use crate::corpus::{self, Label};
use crate::features::{Extractor, FeatureTable};
use crate::metrics::{self, EvalReport};
use crate::pipeline;
use crate::preprocess::{FeatureMask, DEFAULT_BINS, WEIGHT_GRID};
use crate::recommend::DEFAULT_CUTOFF;
use crate::DAY;

pub const TRAIN_FRACTION: f64 = 2.0 / 3.0;
pub const DEFAULT_BUDGET: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub population: PopulationConfig,
    pub strategies: Vec<StrategyKind>,
    pub budget: usize,
    /// Window of the windowed retweeting rate, in seconds.
    pub window: i64,
    pub train_fraction: f64,
    pub ratios: Vec<f64>,
    pub hyper: Hyperparameters,
    /// Restrict the model to χ²-significant features.
    pub select_features: bool,
    /// Seed for the split, the model and the random strategy.
    pub seed: u64,
    /// Seed of the population the strategies contact.
    pub live_seed: u64,
}

impl ExperimentConfig {
    pub fn new(population: PopulationConfig, seed: u64) -> Self {
        ExperimentConfig {
            strategies: vec![
                StrategyKind::Random,
                StrategyKind::Popular { threshold: super::strategy::DEFAULT_POPULAR_THRESHOLD },
                StrategyKind::Predicted,
                StrategyKind::PredictedWaitTime { deadline: DAY, cutoff: DEFAULT_CUTOFF },
            ],
            budget: DEFAULT_BUDGET,
            window: DAY,
            train_fraction: TRAIN_FRACTION,
            ratios: WEIGHT_GRID.to_vec(),
            hyper: Hyperparameters::default(),
            select_features: false,
            seed,
            live_seed: live_seed(population.seed),
            population,
        }
    }
}

/// Default seed of the contacted population for a training population seed.
pub fn live_seed(population_seed: u64) -> u64 {
    population_seed.wrapping_add(1_000_000_007)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridEntry {
    pub ratio: f64,
    /// AUC on the hold-out carved from the training part.
    pub validation_auc: f64,
    /// AUC on the held-out third when trained on the whole training part.
    pub test_auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub population_size: usize,
    pub train_size: usize,
    pub train_retweeters: usize,
    pub test_size: usize,
    pub test_retweeters: usize,
    pub selected_features: usize,
    pub live_population_size: usize,
    pub grid: Vec<GridEntry>,
    pub chosen_ratio: f64,
    /// Held-out evaluation of the model used by the predicted strategies.
    pub report: EvalReport,
    /// Highest held-out AUC across the grid.
    pub best_grid_auc: f64,
    pub results: Vec<StrategyResult>,
    #[serde(skip)]
    pub table: ComparisonTable,
}

impl ExperimentOutcome {
    pub fn result(&self, kind: &StrategyKind) -> Option<&StrategyResult> {
        self.results.iter().find(|r| r.strategy == kind.to_string())
    }

    /// Text summary: dataset sizes, the weight grid and the strategy table.
    pub fn render(&self) -> String {
        let mut out = format!(
            "population {}  train {} ({} retweeters)  test {} ({} retweeters)  features {}  contacted population {}\n",
            self.population_size,
            self.train_size,
            self.train_retweeters,
            self.test_size,
            self.test_retweeters,
            self.selected_features,
            self.live_population_size
        );
        out.push_str("ratio  validation_auc  test_auc\n");
        for g in &self.grid {
            out.push_str(&format!("{:>5}  {:>14.3}  {:>8.3}\n", g.ratio, g.validation_auc, g.test_auc));
        }
        out.push_str(&format!("chosen ratio {}: {}\n\n", self.chosen_ratio, self.report.row()));
        out.push_str(&self.table.text);
        out
    }
}

/// Labels everyone at the request time and builds their feature table.
pub fn probe_table(users: &[SyntheticUser], extractor: &Extractor, request_time: i64, seed: u64) -> crate::Result<FeatureTable> {
    let ds = probe_dataset("probe", users, request_time, seed);
    Ok(extractor.extract_dataset(&ds)?)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> crate::Result<ExperimentOutcome> {
    let pop = &cfg.population;
    let users = generate_population(pop)?;
    let name = format!("population-{}", pop.seed);
    let ds = probe_dataset(&name, &users, pop.request_time, pop.seed);
    let (train_ds, test_ds) = corpus::stratified_split(&ds, cfg.train_fraction, cfg.seed)?;

    let extractor = Extractor::default();
    let train = extractor.extract_dataset(&train_ds)?;
    let test = extractor.extract_dataset(&test_ds)?;

    let mask = if cfg.select_features {
        pipeline::select_features(&train, DEFAULT_BINS)?.1
    } else {
        FeatureMask::all(train.dims())
    };
    let template = ModelSpec { kind: ModelKind::RandomForest, hyper: cfg.hyper.clone(), imbalance: Imbalance::Basic, seed: cfg.seed };
    let (chosen_ratio, validation) = pipeline::choose_weight_ratio(&template, &train, &mask, &cfg.ratios, cfg.seed)?;

    let mut grid = Vec::with_capacity(cfg.ratios.len());
    let mut chosen: Option<(TrainedModel, EvalReport)> = None;
    for v in validation {
        let spec = ModelSpec { imbalance: Imbalance::Weighted { ratio: v.ratio }, ..template.clone() };
        let model = classify::train_masked(&spec, &train, &mask)?;
        let report = metrics::evaluate(&model, &test)?;
        grid.push(GridEntry { ratio: v.ratio, validation_auc: v.validation_auc, test_auc: report.auc });
        if v.ratio == chosen_ratio {
            chosen = Some((model, report));
        }
    }
    let (model, report) = chosen.expect("chosen ratio comes from the grid");
    let best_grid_auc = grid.iter().map(|g| g.test_auc).fold(f64::NEG_INFINITY, f64::max);

    let live = generate_population(&PopulationConfig { seed: cfg.live_seed, ..pop.clone() })?;
    let pool = ScoredPool::new(&live, Some(&model), &extractor, pop.request_time)?;
    let ctx = RunContext { request_time: pop.request_time, window: cfg.window, oracle_seed: cfg.live_seed, selection_seed: cfg.seed };
    let results = cfg
        .strategies
        .iter()
        .map(|&kind| run_strategy(&pool, &StrategySpec { kind, budget: cfg.budget }, &ctx))
        .collect::<crate::Result<Vec<_>>>()?;
    let table = experiment_report(&results)?;

    Ok(ExperimentOutcome {
        population_size: users.len(),
        train_size: train.len(),
        train_retweeters: train.count(Label::Retweeter),
        test_size: test.len(),
        test_retweeters: test.count(Label::Retweeter),
        selected_features: mask.len(),
        live_population_size: live.len(),
        grid,
        chosen_ratio,
        report,
        best_grid_auc,
        results,
        table,
    })
}
