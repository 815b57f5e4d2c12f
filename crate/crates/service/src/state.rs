//! Campaign state as a fold over its events.

use std::collections::HashMap;

use propagate_core::corpus::UserRecord;
use propagate_core::recommend::{self, CandidateInput, ContactOutcome, InfoReach, ReachMode, ScoredCandidate};
use serde::Serialize;

use crate::error::{core, ServiceError};
use crate::events::{CampaignDefinition, CampaignEvent, EventKind};

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub user: UserRecord,
    pub retweet_probability: f64,
    pub mean_wait: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dispatch {
    pub user_id: String,
    pub at: i64,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignState {
    pub id: String,
    pub definition: CampaignDefinition,
    pub created_at: i64,
    pub status: Status,
    pub last_seq: u64,
    /// In arrival order.
    pub candidates: Vec<Candidate>,
    candidate_index: HashMap<String, usize>,
    /// In dispatch order.
    pub dispatches: Vec<Dispatch>,
    dispatch_index: HashMap<String, usize>,
    pub observed: HashMap<String, i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignInfo {
    pub id: String,
    pub status: Status,
    pub created_at: i64,
    pub definition: CampaignDefinition,
    pub candidates: usize,
    pub dispatched: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignMetrics {
    pub contacted: usize,
    pub retweeted: usize,
    pub retweeted_within: usize,
    /// `null` until someone has been contacted.
    pub rate: Option<f64>,
    pub windowed_rate: Option<f64>,
    /// Window of `windowed_rate` in seconds (the campaign deadline).
    pub window: i64,
    pub unit_info_reach: Option<InfoReach>,
}

impl CampaignState {
    /// Starts a state from a campaign's first event.
    pub fn from_created(event: &CampaignEvent) -> Result<Self, String> {
        let EventKind::Created { definition } = &event.kind else {
            return Err("first event must be created".into());
        };
        if event.seq != 1 {
            return Err(format!("first event has sequence {}", event.seq));
        }
        Ok(CampaignState {
            id: event.campaign_id.clone(),
            definition: definition.clone(),
            created_at: event.timestamp,
            status: Status::Open,
            last_seq: 1,
            candidates: Vec::new(),
            candidate_index: HashMap::new(),
            dispatches: Vec::new(),
            dispatch_index: HashMap::new(),
            observed: HashMap::new(),
        })
    }

    /// Rebuilds a state from a whole log.
    pub fn replay(events: &[CampaignEvent]) -> Result<Self, String> {
        let (first, rest) = events.split_first().ok_or("empty log")?;
        let mut state = Self::from_created(first)?;
        for e in rest {
            state.apply(e)?;
        }
        Ok(state)
    }

    /// Applies one event, rejecting anything that breaks an invariant.
    pub fn apply(&mut self, event: &CampaignEvent) -> Result<(), String> {
        if event.campaign_id != self.id {
            return Err(format!("event for campaign {} in log of {}", event.campaign_id, self.id));
        }
        if event.seq != self.last_seq + 1 {
            return Err(format!("sequence {} follows {}", event.seq, self.last_seq));
        }
        match &event.kind {
            EventKind::Created { .. } => return Err("duplicate created event".into()),
            EventKind::CandidateSeen { user, retweet_probability, mean_wait } => {
                self.require_open()?;
                if self.candidate_index.contains_key(&user.user_id) {
                    return Err(format!("candidate {} seen twice", user.user_id));
                }
                self.candidate_index.insert(user.user_id.clone(), self.candidates.len());
                self.candidates.push(Candidate {
                    user: user.clone(),
                    retweet_probability: *retweet_probability,
                    mean_wait: *mean_wait,
                });
            }
            EventKind::Dispatched { user_id, message } => {
                self.require_open()?;
                if !self.candidate_index.contains_key(user_id) {
                    return Err(format!("dispatch to unknown candidate {user_id}"));
                }
                if self.dispatch_index.contains_key(user_id) {
                    return Err(format!("second dispatch to {user_id}"));
                }
                self.dispatch_index.insert(user_id.clone(), self.dispatches.len());
                self.dispatches.push(Dispatch { user_id: user_id.clone(), at: event.timestamp, message: message.clone() });
            }
            EventKind::RetweetObserved { user_id, observed_at } => {
                let d = self.dispatch(user_id).ok_or_else(|| format!("observation before dispatch to {user_id}"))?;
                if *observed_at < d.at {
                    return Err(format!("observation for {user_id} precedes its dispatch"));
                }
                if self.observed.insert(user_id.clone(), *observed_at).is_some() {
                    return Err(format!("second observation for {user_id}"));
                }
            }
            EventKind::Closed => {
                self.require_open()?;
                self.status = Status::Closed;
            }
        }
        self.last_seq = event.seq;
        Ok(())
    }

    fn require_open(&self) -> Result<(), String> {
        match self.status {
            Status::Open => Ok(()),
            Status::Closed => Err("event after close".into()),
        }
    }

    pub fn candidate(&self, user_id: &str) -> Option<&Candidate> {
        self.candidate_index.get(user_id).map(|&i| &self.candidates[i])
    }

    pub fn dispatch(&self, user_id: &str) -> Option<&Dispatch> {
        self.dispatch_index.get(user_id).map(|&i| &self.dispatches[i])
    }

    pub fn info(&self) -> CampaignInfo {
        CampaignInfo {
            id: self.id.clone(),
            status: self.status,
            created_at: self.created_at,
            definition: self.definition.clone(),
            candidates: self.candidates.len(),
            dispatched: self.dispatches.len(),
        }
    }

    /// Ranker inputs for candidates not yet contacted, in arrival order.
    pub fn open_candidates(&self) -> Vec<CandidateInput> {
        self.candidates
            .iter()
            .filter(|c| !self.dispatch_index.contains_key(&c.user.user_id))
            .map(|c| CandidateInput {
                user_id: c.user.user_id.clone(),
                retweet_probability: c.retweet_probability,
                followers_count: c.user.followers_count,
                mean_wait: c.mean_wait,
            })
            .collect()
    }

    pub fn recommendations(&self) -> Result<Vec<ScoredCandidate>, ServiceError> {
        let d = &self.definition;
        recommend::rank_candidates(&self.open_candidates(), d.deadline as f64, d.cutoff, d.top_n).map_err(core)
    }

    pub fn outcomes(&self) -> Vec<ContactOutcome> {
        self.dispatches
            .iter()
            .map(|d| {
                let user = &self.candidate(&d.user_id).expect("dispatched users are candidates").user;
                let observed = self.observed.get(&d.user_id).copied();
                ContactOutcome {
                    user_id: d.user_id.clone(),
                    dispatched_at: d.at,
                    retweeted: observed.is_some(),
                    retweet_at: observed,
                    follower_ids: observed.and(user.follower_ids.clone()),
                    followers_count: user.followers_count,
                }
            })
            .collect()
    }

    pub fn metrics(&self) -> CampaignMetrics {
        let outcomes = self.outcomes();
        let window = self.definition.deadline;
        CampaignMetrics {
            contacted: outcomes.len(),
            retweeted: outcomes.iter().filter(|o| o.retweeted).count(),
            retweeted_within: outcomes.iter().filter(|o| o.counts_within(Some(window))).count(),
            rate: recommend::retweeting_rate(&outcomes, None).ok(),
            windowed_rate: recommend::retweeting_rate(&outcomes, Some(window)).ok(),
            window,
            unit_info_reach: recommend::unit_info_reach(&outcomes, ReachMode::Auto).ok(),
        }
    }
}
