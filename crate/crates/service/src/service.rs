//! The campaign service: models, campaigns and their event logs.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use log::info;
use propagate_core::corpus::UserRecord;
use propagate_core::features::Extractor;
use propagate_core::recommend::ScoredCandidate;
use propagate_core::waittime::{fit_wait_time, population_fallback};
use rayon::prelude::*;

use crate::clock::Clock;
use crate::dispatch::Dispatcher;
use crate::error::{core, ServiceError};
use crate::events::{render_message, CampaignDefinition, CampaignEvent, EventKind};
use crate::log::EventLog;
use crate::registry::{ModelRegistry, ModelSummary};
use crate::state::{CampaignInfo, CampaignMetrics, CampaignState, Status};

const CAMPAIGN_DIR: &str = "campaigns";
const MODEL_DIR: &str = "models";
const ID_PREFIX: &str = "cmp-";

struct Writer {
    log: EventLog,
    state: CampaignState,
    /// Scheduled retweets not yet logged, by due time.
    pending: BTreeSet<(i64, String)>,
}

struct Campaign {
    writer: Mutex<Writer>,
    snapshot: RwLock<Arc<CampaignState>>,
}

impl Campaign {
    fn snapshot(&self) -> Arc<CampaignState> {
        self.snapshot.read().expect("snapshot lock").clone()
    }
}

pub struct CampaignService {
    log_dir: PathBuf,
    clock: Arc<dyn Clock>,
    dispatcher: Arc<dyn Dispatcher>,
    registry: ModelRegistry,
    extractor: Extractor,
    campaigns: RwLock<BTreeMap<String, Arc<Campaign>>>,
    next_id: Mutex<u64>,
}

impl Writer {
    /// Appends events built from the current sequence number, then folds
    /// them into the state and publishes a new snapshot.
    fn commit(&mut self, campaign: &Campaign, now: i64, kinds: Vec<EventKind>) -> Result<Vec<CampaignEvent>, ServiceError> {
        let events: Vec<CampaignEvent> = kinds
            .into_iter()
            .enumerate()
            .map(|(i, kind)| CampaignEvent {
                seq: self.state.last_seq + 1 + i as u64,
                timestamp: now,
                campaign_id: self.state.id.clone(),
                kind,
            })
            .collect();
        if events.is_empty() {
            return Ok(events);
        }
        let mut next = self.state.clone();
        for e in &events {
            next.apply(e).map_err(|reason| ServiceError::CorruptLog { path: self.log.path().to_path_buf(), reason })?;
        }
        self.log.append(&events)?;
        self.state = next;
        *campaign.snapshot.write().expect("snapshot lock") = Arc::new(self.state.clone());
        Ok(events)
    }
}

fn campaign_number(id: &str) -> Option<u64> {
    id.strip_prefix(ID_PREFIX)?.parse().ok()
}

impl CampaignService {
    /// Opens the service rooted at `log_dir`, replaying every campaign log.
    pub fn open(log_dir: &Path, clock: Arc<dyn Clock>, dispatcher: Arc<dyn Dispatcher>) -> Result<Self, ServiceError> {
        let campaign_dir = log_dir.join(CAMPAIGN_DIR);
        std::fs::create_dir_all(&campaign_dir).map_err(|source| ServiceError::Io { path: campaign_dir.clone(), source })?;
        let registry = ModelRegistry::open(&log_dir.join(MODEL_DIR))?;
        let mut campaigns = BTreeMap::new();
        let mut next_id = 1;
        let entries = std::fs::read_dir(&campaign_dir).map_err(|source| ServiceError::Io { path: campaign_dir.clone(), source })?;
        let mut paths: Vec<PathBuf> =
            entries.flatten().map(|e| e.path()).filter(|p| p.extension().is_some_and(|e| e == "jsonl")).collect();
        paths.sort();
        for path in paths {
            let (log, events) = EventLog::open(&path)?;
            let state = CampaignState::replay(&events).map_err(|reason| ServiceError::CorruptLog { path: path.clone(), reason })?;
            let pending = state
                .dispatches
                .iter()
                .filter(|d| !state.observed.contains_key(&d.user_id))
                .filter_map(|d| dispatcher.scheduled_retweet(&d.user_id, d.at).map(|due| (due, d.user_id.clone())))
                .collect();
            next_id = next_id.max(campaign_number(&state.id).map_or(0, |n| n + 1));
            info!("replayed campaign {} ({} events)", state.id, events.len());
            let snapshot = RwLock::new(Arc::new(state.clone()));
            campaigns.insert(state.id.clone(), Arc::new(Campaign { writer: Mutex::new(Writer { log, state, pending }), snapshot }));
        }
        Ok(CampaignService {
            log_dir: log_dir.to_path_buf(),
            clock,
            dispatcher,
            registry,
            extractor: Extractor::default(),
            campaigns: RwLock::new(campaigns),
            next_id: Mutex::new(next_id),
        })
    }

    pub fn now(&self) -> i64 {
        self.clock.now()
    }

    pub fn dispatcher_name(&self) -> &'static str {
        self.dispatcher.name()
    }

    fn campaign(&self, id: &str) -> Result<Arc<Campaign>, ServiceError> {
        self.campaigns
            .read()
            .expect("campaign table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownCampaign(id.to_string()))
    }

    pub fn publish_model(&self, bytes: &[u8]) -> Result<ModelSummary, ServiceError> {
        Ok(ModelSummary::of(&*self.registry.publish(bytes)?))
    }

    pub fn create_campaign(&self, definition: CampaignDefinition) -> Result<CampaignInfo, ServiceError> {
        definition.validate()?;
        if self.registry.get(&definition.model_id).is_none() {
            return Err(ServiceError::UnknownModel(definition.model_id));
        }
        let mut table = self.campaigns.write().expect("campaign table lock");
        let mut next_id = self.next_id.lock().expect("id lock");
        let id = format!("{ID_PREFIX}{:06}", *next_id);
        let path = self.log_dir.join(CAMPAIGN_DIR).join(format!("{id}.jsonl"));
        let created = CampaignEvent { seq: 1, timestamp: self.now(), campaign_id: id.clone(), kind: EventKind::Created { definition } };
        let mut log = EventLog::create(&path)?;
        log.append(std::slice::from_ref(&created))?;
        *next_id += 1;
        let state = CampaignState::from_created(&created).expect("created event starts a campaign");
        let info = state.info();
        let snapshot = RwLock::new(Arc::new(state.clone()));
        table.insert(id, Arc::new(Campaign { writer: Mutex::new(Writer { log, state, pending: BTreeSet::new() }), snapshot }));
        Ok(info)
    }

    pub fn campaign_ids(&self) -> Vec<String> {
        self.campaigns.read().expect("campaign table lock").keys().cloned().collect()
    }

    pub fn info(&self, id: &str) -> Result<CampaignInfo, ServiceError> {
        Ok(self.campaign(id)?.snapshot().info())
    }

    pub fn events(&self, id: &str) -> Result<Vec<CampaignEvent>, ServiceError> {
        let c = self.campaign(id)?;
        let w = c.writer.lock().expect("writer lock");
        crate::log::read_log(w.log.path())
    }

    /// Scores the records that mention a campaign topic and logs the new
    /// ones as candidates. Returns how many were accepted.
    pub fn ingest(&self, id: &str, records: Vec<UserRecord>) -> Result<usize, ServiceError> {
        let campaign = self.campaign(id)?;
        let snapshot = campaign.snapshot();
        if snapshot.status == Status::Closed {
            return Err(ServiceError::CampaignClosed(id.to_string()));
        }
        let definition = &snapshot.definition;
        let model = self.registry.get(&definition.model_id).ok_or_else(|| ServiceError::UnknownModel(definition.model_id.clone()))?;
        let mut seen = HashSet::new();
        let matching: Vec<UserRecord> = records
            .into_iter()
            .filter(|u| definition.matches(u) && snapshot.candidate(&u.user_id).is_none() && seen.insert(u.user_id.clone()))
            .collect();
        let now = self.now();
        let fallback = population_fallback(&matching);
        // Scoring fans out; the append below is serialized per campaign.
        let scored: Vec<EventKind> = matching
            .into_par_iter()
            .map(|user| {
                let fv = self.extractor.assemble(&user, now).map_err(core)?;
                let retweet_probability = model.predict_vector(&fv).map_err(core)?;
                let mean_wait = fit_wait_time(&user, fallback).map_err(core)?.mean_wait;
                Ok(EventKind::CandidateSeen { user, retweet_probability, mean_wait })
            })
            .collect::<Result<_, ServiceError>>()?;

        let mut w = campaign.writer.lock().expect("writer lock");
        if w.state.status == Status::Closed {
            return Err(ServiceError::CampaignClosed(id.to_string()));
        }
        // Another batch may have added some of these meanwhile.
        let fresh: Vec<EventKind> = scored
            .into_iter()
            .filter(|k| matches!(k, EventKind::CandidateSeen { user, .. } if w.state.candidate(&user.user_id).is_none()))
            .collect();
        Ok(w.commit(&campaign, now, fresh)?.len())
    }

    pub fn recommendations(&self, id: &str) -> Result<Vec<ScoredCandidate>, ServiceError> {
        self.campaign(id)?.snapshot().recommendations()
    }

    /// Sends `message` (the campaign template when `None`) to a candidate,
    /// at most once per user.
    pub fn dispatch(&self, id: &str, user_id: &str, message: Option<&str>) -> Result<CampaignEvent, ServiceError> {
        let campaign = self.campaign(id)?;
        let mut w = campaign.writer.lock().expect("writer lock");
        if w.state.status == Status::Closed {
            return Err(ServiceError::CampaignClosed(id.to_string()));
        }
        let user = w.state.candidate(user_id).ok_or_else(|| ServiceError::UnknownCandidate(user_id.to_string()))?.user.clone();
        if w.state.dispatch(user_id).is_some() {
            return Err(ServiceError::AlreadyDispatched(user_id.to_string()));
        }
        let text = render_message(message.unwrap_or(&w.state.definition.template), &user.screen_name);
        let (length, limit) = (text.chars().count(), w.state.definition.message_limit);
        if length > limit {
            return Err(ServiceError::MessageTooLong { length, limit });
        }
        let now = self.now();
        let event = w
            .commit(&campaign, now, vec![EventKind::Dispatched { user_id: user_id.to_string(), message: text.clone() }])?
            .remove(0);
        self.dispatcher.deliver(id, &user, &text, now);
        if let Some(due) = self.dispatcher.scheduled_retweet(user_id, now) {
            w.pending.insert((due, user_id.to_string()));
        }
        Ok(event)
    }

    /// Records a retweet seen outside the service.
    pub fn observe(&self, id: &str, user_id: &str, observed_at: i64) -> Result<CampaignEvent, ServiceError> {
        let campaign = self.campaign(id)?;
        let mut w = campaign.writer.lock().expect("writer lock");
        let dispatched_at = w.state.dispatch(user_id).ok_or_else(|| ServiceError::NotDispatched(user_id.to_string()))?.at;
        if w.state.observed.contains_key(user_id) {
            return Err(ServiceError::AlreadyObserved(user_id.to_string()));
        }
        if observed_at < dispatched_at {
            return Err(ServiceError::ObservationBeforeDispatch { observed_at, dispatched_at });
        }
        w.pending.retain(|(_, u)| u != user_id);
        let kind = EventKind::RetweetObserved { user_id: user_id.to_string(), observed_at };
        Ok(w.commit(&campaign, self.now(), vec![kind])?.remove(0))
    }

    pub fn close(&self, id: &str) -> Result<CampaignEvent, ServiceError> {
        let campaign = self.campaign(id)?;
        let mut w = campaign.writer.lock().expect("writer lock");
        if w.state.status == Status::Closed {
            return Err(ServiceError::CampaignClosed(id.to_string()));
        }
        Ok(w.commit(&campaign, self.now(), vec![EventKind::Closed])?.remove(0))
    }

    pub fn metrics(&self, id: &str) -> Result<CampaignMetrics, ServiceError> {
        Ok(self.campaign(id)?.snapshot().metrics())
    }

    /// Logs every scheduled retweet that is due by now. Returns how many.
    pub fn flush_due(&self) -> Result<usize, ServiceError> {
        let now = self.now();
        let campaigns: Vec<Arc<Campaign>> = self.campaigns.read().expect("campaign table lock").values().cloned().collect();
        let mut total = 0;
        for campaign in campaigns {
            let mut w = campaign.writer.lock().expect("writer lock");
            let due: Vec<(i64, String)> = w.pending.iter().take_while(|(t, _)| *t <= now).cloned().collect();
            if due.is_empty() {
                continue;
            }
            let kinds = due
                .iter()
                .filter(|(_, u)| !w.state.observed.contains_key(u))
                .map(|(t, u)| EventKind::RetweetObserved { user_id: u.clone(), observed_at: *t })
                .collect();
            total += w.commit(&campaign, now, kinds)?.len();
            for d in &due {
                w.pending.remove(d);
            }
        }
        Ok(total)
    }
}
