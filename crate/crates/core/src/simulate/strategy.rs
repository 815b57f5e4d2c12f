//! Contact strategies and their comparison tables.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::oracle::contact;
use super::population::SyntheticUser;
use super::SimulateError;
use crate::classify::TrainedModel;
use crate::features::Extractor;
use crate::recommend::{self, CandidateInput, ContactOutcome, InfoReach, ReachMode, DEFAULT_CUTOFF};
use crate::waittime::{self, fit_wait_time, format_duration, parse_duration};
use crate::DAY;

pub const DEFAULT_POPULAR_THRESHOLD: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StrategyKind {
    Random,
    /// Users with more than `threshold` followers, most-followed first.
    Popular { threshold: u64 },
    /// Highest predicted retweet probability first.
    Predicted,
    /// Predicted ranking restricted to users likely to act within `deadline`
    /// seconds with probability at least `cutoff`.
    PredictedWaitTime { deadline: i64, cutoff: f64 },
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Random => "Random People Contact",
            StrategyKind::Popular { .. } => "Popular People Contact",
            StrategyKind::Predicted => "Our Prediction Approach",
            StrategyKind::PredictedWaitTime { .. } => "Our Prediction Approach + Wait-Time Model",
        }
    }

    pub fn needs_model(&self) -> bool {
        matches!(self, StrategyKind::Predicted | StrategyKind::PredictedWaitTime { .. })
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::Random => f.write_str("random"),
            StrategyKind::Popular { threshold } => write!(f, "popular:{threshold}"),
            StrategyKind::Predicted => f.write_str("predicted"),
            StrategyKind::PredictedWaitTime { deadline, cutoff } => {
                write!(f, "predicted_waittime:{}:{cutoff}", format_duration(*deadline))
            }
        }
    }
}

impl FromStr for StrategyKind {
    type Err = SimulateError;

    /// `random`, `popular[:N]`, `predicted` or `predicted_waittime[:T[:C]]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimulateError::InvalidStrategy(s.to_string());
        let mut parts = s.trim().split(':');
        let kind = match parts.next().unwrap_or_default() {
            "random" => StrategyKind::Random,
            "popular" => StrategyKind::Popular {
                threshold: parts.next().map_or(Ok(DEFAULT_POPULAR_THRESHOLD), str::parse).map_err(|_| bad())?,
            },
            "predicted" => StrategyKind::Predicted,
            "predicted_waittime" => {
                let deadline = parts.next().map_or(Some(DAY), parse_duration).ok_or_else(bad)?;
                let cutoff = parts.next().map_or(Ok(DEFAULT_CUTOFF), str::parse::<f64>).map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&cutoff) || deadline <= 0 {
                    return Err(bad());
                }
                StrategyKind::PredictedWaitTime { deadline, cutoff }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(kind)
    }
}

/// Parses a comma-separated strategy list.
pub fn parse_strategies(s: &str) -> Result<Vec<StrategyKind>, SimulateError> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    /// Number of users contacted at most.
    pub budget: usize,
}

/// Candidates with everything the strategies rank on.
pub struct ScoredPool<'a> {
    pub users: &'a [SyntheticUser],
    /// Retweet probabilities, when a model was supplied.
    pub probabilities: Option<Vec<f64>>,
    /// Estimated mean waits in seconds.
    pub mean_waits: Vec<f64>,
}

impl<'a> ScoredPool<'a> {
    /// Scores `users` at `request_time`. Wait models fall back to the pool's
    /// median mean wait.
    pub fn new(
        users: &'a [SyntheticUser],
        model: Option<&TrainedModel>,
        extractor: &Extractor,
        request_time: i64,
    ) -> crate::Result<Self> {
        let probabilities = match model {
            Some(m) => Some(
                users
                    .par_iter()
                    .map(|u| {
                        let fv = extractor.assemble(&u.record, request_time)?;
                        Ok(m.predict_vector(&fv)?)
                    })
                    .collect::<crate::Result<Vec<f64>>>()?,
            ),
            None => None,
        };
        let fallback = waittime::population_fallback(users.iter().map(|u| &u.record));
        let mean_waits = users
            .iter()
            .map(|u| Ok(fit_wait_time(&u.record, fallback)?.mean_wait))
            .collect::<crate::Result<Vec<f64>>>()?;
        Ok(ScoredPool { users, probabilities, mean_waits })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunContext {
    /// Dispatch time of every contact.
    pub request_time: i64,
    /// Window for the windowed retweeting rate, in seconds.
    pub window: i64,
    /// Seed of the behavior oracle.
    pub oracle_seed: u64,
    /// Seed of the random strategy's sample.
    pub selection_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub label: String,
    pub contacted: usize,
    pub retweeted: usize,
    pub retweeted_within: usize,
    /// `None` when nobody was contacted.
    pub rate: Option<f64>,
    pub windowed_rate: Option<f64>,
    pub window: i64,
    pub reach: Option<InfoReach>,
    pub outcomes: Vec<ContactOutcome>,
}

fn select(pool: &ScoredPool<'_>, spec: &StrategySpec, ctx: &RunContext) -> crate::Result<Vec<usize>> {
    let n = pool.users.len();
    let budget = spec.budget;
    let probabilities = || pool.probabilities.as_ref().ok_or(SimulateError::MissingModel);
    Ok(match spec.kind {
        StrategyKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.selection_seed);
            let mut picked = index::sample(&mut rng, n, budget).into_vec();
            picked.sort_unstable();
            picked
        }
        StrategyKind::Popular { threshold } => {
            let mut eligible: Vec<usize> = (0..n).filter(|&i| pool.users[i].record.followers_count > threshold).collect();
            eligible.sort_by(|&a, &b| {
                let (ua, ub) = (&pool.users[a].record, &pool.users[b].record);
                ub.followers_count.cmp(&ua.followers_count).then_with(|| ua.user_id.cmp(&ub.user_id))
            });
            eligible.truncate(budget);
            eligible
        }
        StrategyKind::Predicted => {
            let p = probabilities()?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then_with(|| pool.users[a].record.user_id.cmp(&pool.users[b].record.user_id)));
            order.truncate(budget);
            order
        }
        StrategyKind::PredictedWaitTime { deadline, cutoff } => {
            let p = probabilities()?;
            let inputs: Vec<CandidateInput> = (0..n)
                .map(|i| CandidateInput {
                    user_id: pool.users[i].record.user_id.clone(),
                    retweet_probability: p[i],
                    followers_count: pool.users[i].record.followers_count,
                    mean_wait: pool.mean_waits[i],
                })
                .collect();
            let ranked = recommend::rank_candidates(&inputs, deadline as f64, cutoff, budget)?;
            let position: std::collections::HashMap<&str, usize> =
                pool.users.iter().enumerate().map(|(i, u)| (u.record.user_id.as_str(), i)).collect();
            ranked.iter().map(|s| position[s.user_id.as_str()]).collect()
        }
    })
}

/// Contacts the users chosen by `spec` once each and summarizes the outcomes.
pub fn run_strategy(pool: &ScoredPool<'_>, spec: &StrategySpec, ctx: &RunContext) -> crate::Result<StrategyResult> {
    if spec.budget > pool.users.len() {
        return Err(SimulateError::BudgetExceedsPopulation { budget: spec.budget, population: pool.users.len() }.into());
    }
    let chosen = select(pool, spec, ctx)?;
    let outcomes: Vec<ContactOutcome> =
        chosen.iter().map(|&i| contact(&pool.users[i], ctx.request_time, ctx.oracle_seed)).collect();
    summarize(spec.kind.to_string(), spec.kind.label(), outcomes, ctx.window)
}

pub fn summarize(strategy: String, label: &str, outcomes: Vec<ContactOutcome>, window: i64) -> crate::Result<StrategyResult> {
    let contacted = outcomes.len();
    let (rate, windowed_rate, reach) = if contacted == 0 {
        (None, None, None)
    } else {
        (
            Some(recommend::retweeting_rate(&outcomes, None)?),
            Some(recommend::retweeting_rate(&outcomes, Some(window))?),
            Some(recommend::unit_info_reach(&outcomes, ReachMode::Auto)?),
        )
    };
    Ok(StrategyResult {
        strategy,
        label: label.to_string(),
        contacted,
        retweeted: outcomes.iter().filter(|o| o.retweeted).count(),
        retweeted_within: outcomes.iter().filter(|o| o.counts_within(Some(window))).count(),
        rate,
        windowed_rate,
        window,
        reach,
        outcomes,
    })
}

/// `13.3%`, or `-` when undefined.
pub fn percent(rate: Option<f64>) -> String {
    rate.map_or_else(|| "-".to_string(), |r| format!("{:.1}%", r * 100.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub text: String,
    pub csv: String,
}

/// Rows are strategies; columns are retweeting rate, windowed rate and
/// unit-info-reach.
pub fn experiment_report(results: &[StrategyResult]) -> Result<ComparisonTable, SimulateError> {
    if results.len() < 2 {
        return Err(SimulateError::NotEnoughStrategies(results.len()));
    }
    let window = format_duration(results[0].window);
    let reach = |r: &StrategyResult| r.reach.map_or_else(|| "-".to_string(), |x| format!("{:.2}", x.value));
    let windowed_header = format!("Rate within {window}");
    let width = results.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(8);
    let mut text = format!(
        "{:<width$}  {:>9}  {:>9}  {:>15}  {:>w2$}  {:>16}\n",
        "Strategy",
        "Contacted",
        "Retweeted",
        "Retweeting rate",
        windowed_header,
        "Unit info reach",
        w2 = windowed_header.len()
    );
    let mut csv = String::from("strategy,label,contacted,retweeted,retweeted_within,rate,windowed_rate,window_seconds,unit_info_reach,overlap_adjusted\n");
    for r in results {
        text.push_str(&format!(
            "{:<width$}  {:>9}  {:>9}  {:>15}  {:>w2$}  {:>16}\n",
            r.label,
            r.contacted,
            r.retweeted,
            percent(r.rate),
            percent(r.windowed_rate),
            reach(r),
            w2 = windowed_header.len()
        ));
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.6}"));
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.strategy,
            r.label,
            r.contacted,
            r.retweeted,
            r.retweeted_within,
            opt(r.rate),
            opt(r.windowed_rate),
            r.window,
            opt(r.reach.map(|x| x.value)),
            r.reach.map_or_else(String::new, |x| x.overlap_adjusted.to_string()),
        ));
    }
    Ok(ComparisonTable { text, csv })
}
