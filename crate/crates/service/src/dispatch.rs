//! Delivery backends for retweet requests.

use std::collections::HashMap;

use log::info;
use propagate_core::corpus::UserRecord;
use propagate_core::simulate::oracle::respond;
use propagate_core::simulate::SyntheticUser;

pub trait Dispatcher: Send + Sync {
    fn name(&self) -> &'static str;

    /// Sends `message`. Called once, after the dispatch is durably logged.
    fn deliver(&self, campaign_id: &str, user: &UserRecord, message: &str, at: i64);

    /// When a retweet by `user_id` to a request sent at `at` will be seen,
    /// if the backend knows in advance. Must be a pure function so pending
    /// observations can be rebuilt on restart.
    fn scheduled_retweet(&self, user_id: &str, at: i64) -> Option<i64>;
}

/// Records requests in the log only.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogOnly;

impl Dispatcher for LogOnly {
    fn name(&self) -> &'static str {
        "log-only"
    }

    fn deliver(&self, campaign_id: &str, user: &UserRecord, message: &str, at: i64) {
        info!("campaign {campaign_id}: request to {} at {at}: {message}", user.user_id);
    }

    fn scheduled_retweet(&self, _user_id: &str, _at: i64) -> Option<i64> {
        None
    }
}

/// Answers requests with the behavior oracle of a synthetic population.
/// Users outside the population never retweet.
pub struct SimulatorOracle {
    latent: HashMap<String, (f64, f64)>,
    seed: u64,
}

impl SimulatorOracle {
    pub fn new(users: &[SyntheticUser], seed: u64) -> Self {
        let latent = users
            .iter()
            .map(|u| (u.record.user_id.clone(), (u.latent_willingness, u.latent_mean_wait)))
            .collect();
        SimulatorOracle { latent, seed }
    }
}

impl Dispatcher for SimulatorOracle {
    fn name(&self) -> &'static str {
        "simulator"
    }

    fn deliver(&self, _campaign_id: &str, _user: &UserRecord, _message: &str, _at: i64) {}

    fn scheduled_retweet(&self, user_id: &str, at: i64) -> Option<i64> {
        let &(willingness, mean_wait) = self.latent.get(user_id)?;
        respond(user_id, willingness, mean_wait, at, self.seed).wait.map(|w| at + w)
    }
}
