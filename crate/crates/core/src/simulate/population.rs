//! Synthetic populations with planted willingness and wait-time structure.

use std::collections::BTreeSet;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Exp, LogNormal, Normal, Pareto, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimulateError;
use crate::classify::logistic::sigmoid;
use crate::corpus::{Message, UserRecord, MAX_TIMELINE};
use crate::{DAY, HOUR};

/// An hourly posting profile shared by a group of users.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityRegime {
    pub name: String,
    /// Mixture weight of the regime.
    pub weight: f64,
    /// Relative intensity for each UTC hour.
    pub hourly: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityConfig {
    pub median_posts_per_day: f64,
    /// Standard deviation of log posts per day.
    pub log_sd: f64,
    pub regimes: Vec<ActivityRegime>,
}

fn peaked(centre: usize, width: f64) -> Vec<f64> {
    (0..24)
        .map(|h| {
            let d = (h as f64 - centre as f64).abs();
            let d = d.min(24.0 - d);
            0.05 + (-d * d / (2.0 * width * width)).exp()
        })
        .collect()
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            median_posts_per_day: 2.0,
            log_sd: 1.0,
            regimes: vec![
                ActivityRegime { name: "office".into(), weight: 0.4, hourly: peaked(13, 3.0) },
                ActivityRegime { name: "evening".into(), weight: 0.35, hourly: peaked(21, 2.0) },
                ActivityRegime { name: "night".into(), weight: 0.15, hourly: peaked(2, 2.0) },
                ActivityRegime { name: "flat".into(), weight: 0.1, hourly: vec![1.0; 24] },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetweetConfig {
    /// Mean and spread of the logit of the share of posts that are retweets.
    pub mean_logit: f64,
    pub logit_sd: f64,
    /// Mean and spread of the logit of the share of retweets from strangers.
    pub stranger_mean_logit: f64,
    pub stranger_logit_sd: f64,
}

impl Default for RetweetConfig {
    fn default() -> Self {
        RetweetConfig { mean_logit: -1.5, logit_sd: 1.0, stranger_mean_logit: -0.5, stranger_logit_sd: 1.2 }
    }
}

/// Coefficients of the willingness logit on standardized latent traits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WillingnessConfig {
    pub activity: f64,
    pub retweeting: f64,
    pub stranger: f64,
    /// Concentration of the hourly profile (higher means lower hour entropy).
    pub routine: f64,
    pub log_followers: f64,
    /// Standard deviation of the unexplained logit component.
    pub noise: f64,
}

impl Default for WillingnessConfig {
    fn default() -> Self {
        WillingnessConfig { activity: 1.0, retweeting: 1.5, stranger: 1.0, routine: 0.6, log_followers: 0.0, noise: 0.4 }
    }
}

/// Log-normal distribution of per-user mean retweet waits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaitConfig {
    pub median_hours: f64,
    pub log_sd: f64,
}

impl Default for WaitConfig {
    fn default() -> Self {
        WaitConfig { median_hours: 3.0, log_sd: 2.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowerConfig {
    /// Pareto shape and scale of follower counts.
    pub pareto_shape: f64,
    pub pareto_scale: f64,
    pub cap: u64,
    /// Probability that a follower comes from the shared hub pool.
    pub overlap: f64,
    pub hub_pool: u64,
    pub median_friends: f64,
    /// Write follower id sets into the exported records.
    pub materialize_ids: bool,
}

impl Default for FollowerConfig {
    fn default() -> Self {
        FollowerConfig {
            pareto_shape: 1.1,
            pareto_scale: 30.0,
            cap: 20_000,
            overlap: 0.3,
            hub_pool: 5_000,
            median_friends: 150.0,
            materialize_ids: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub n_users: usize,
    pub base_positive_rate: f64,
    pub seed: u64,
    /// Epoch seconds at which candidates are asked.
    pub request_time: i64,
    pub history_days: u32,
    pub activity: ActivityConfig,
    pub retweeting: RetweetConfig,
    pub willingness: WillingnessConfig,
    pub wait: WaitConfig,
    pub followers: FollowerConfig,
    /// Keywords sprinkled into posts; used for topical matching.
    pub topics: Vec<String>,
    /// Probability that a post mentions a topic keyword.
    pub topic_rate: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            n_users: 2000,
            base_positive_rate: 0.05,
            seed: 1,
            request_time: 1_700_000_000,
            history_days: 365,
            activity: ActivityConfig::default(),
            retweeting: RetweetConfig::default(),
            willingness: WillingnessConfig::default(),
            wait: WaitConfig::default(),
            followers: FollowerConfig::default(),
            topics: ["flu", "vaccine", "outbreak", "safety", "alert"].map(String::from).to_vec(),
            topic_rate: 0.15,
        }
    }
}

impl PopulationConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // negations also reject NaN
    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |m: String| Err(SimulateError::InvalidConfig(m));
        if self.n_users < 10 {
            return bad(format!("n_users must be at least 10, got {}", self.n_users));
        }
        let prob = |p: f64| p > 0.0 && p < 1.0;
        if !prob(self.base_positive_rate) {
            return bad(format!("base_positive_rate must lie in (0, 1), got {}", self.base_positive_rate));
        }
        if self.request_time <= 0 || self.history_days == 0 {
            return bad("request_time and history_days must be positive".into());
        }
        let a = &self.activity;
        if !(a.median_posts_per_day > 0.0 && a.log_sd >= 0.0) || a.regimes.is_empty() {
            return bad("activity needs a positive median rate and at least one regime".into());
        }
        for r in &a.regimes {
            if r.hourly.len() != 24 || r.hourly.iter().any(|h| !(*h >= 0.0)) || r.hourly.iter().sum::<f64>() <= 0.0 || !(r.weight > 0.0) {
                return bad(format!("regime {:?} needs a positive weight and 24 nonnegative hourly values", r.name));
            }
        }
        let rt = &self.retweeting;
        let w = &self.willingness;
        let numbers = [
            rt.mean_logit, rt.logit_sd, rt.stranger_mean_logit, rt.stranger_logit_sd, w.activity, w.retweeting, w.stranger,
            w.routine, w.log_followers, w.noise, self.topic_rate,
        ];
        if numbers.iter().any(|v| !v.is_finite()) || rt.logit_sd < 0.0 || rt.stranger_logit_sd < 0.0 || w.noise < 0.0 {
            return bad("retweeting and willingness parameters must be finite, spreads nonnegative".into());
        }
        if !(self.wait.median_hours > 0.0 && self.wait.log_sd >= 0.0) {
            return bad("wait median must be positive".into());
        }
        let f = &self.followers;
        if !(f.pareto_shape > 0.0 && f.pareto_scale > 0.0 && f.median_friends > 0.0) || !(0.0..=1.0).contains(&f.overlap) {
            return bad("follower distribution parameters out of range".into());
        }
        if !(0.0..=1.0).contains(&self.topic_rate) {
            return bad("topic_rate must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, SimulateError> {
        let cfg: PopulationConfig = serde_json::from_str(s).map_err(|e| SimulateError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimulateError> {
        let s = std::fs::read_to_string(path).map_err(|source| SimulateError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&s)
    }
}

/// A generated user together with the hidden quantities the oracle reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUser {
    pub record: UserRecord,
    pub latent_willingness: f64,
    /// Seconds.
    pub latent_mean_wait: f64,
    pub follower_seed: u64,
    pub follower_overlap: f64,
    pub hub_pool: u64,
}

impl SyntheticUser {
    /// Follower ids, a mix of shared hub accounts and private ones.
    /// Deterministic per user; its size equals `followers_count`.
    pub fn follower_ids(&self) -> BTreeSet<String> {
        if let Some(ids) = &self.record.follower_ids {
            return ids.clone();
        }
        let n = self.record.followers_count;
        let mut rng = ChaCha8Rng::seed_from_u64(self.follower_seed);
        let hubs = if self.follower_overlap > 0.0 && n > 0 {
            Binomial::new(n, self.follower_overlap).expect("valid binomial").sample(&mut rng).min(self.hub_pool)
        } else {
            0
        };
        let mut ids: BTreeSet<String> = index::sample(&mut rng, self.hub_pool as usize, hubs as usize)
            .into_iter()
            .map(|k| format!("hub{k}"))
            .collect();
        ids.extend((0..n - hubs).map(|j| format!("{}-f{j}", self.record.user_id)));
        ids
    }
}

const WORDS: &[&str] = &[
    "i", "me", "my", "we", "our", "you", "they", "the", "a", "an", "is", "was", "will", "have", "not", "never", "and", "but",
    "because", "think", "know", "maybe", "perhaps", "always", "happy", "love", "good", "great", "sad", "cry", "hate", "angry",
    "worried", "afraid", "friend", "family", "work", "job", "school", "money", "home", "eat", "sleep", "music", "game", "team",
    "today", "tonight", "tomorrow", "news", "city", "people", "health", "doctor", "sick", "hospital", "church", "pray", "party",
    "fun", "lol", "um", "like", "see", "hear", "feel", "look", "go", "come", "win", "success", "fail", "should", "must", "very",
    "really", "so", "damn",
];

/// Per-user latent traits, as standard normal scores.
struct Traits {
    activity: f64,
    retweeting: f64,
    stranger: f64,
    routine: f64,
    noise: f64,
}

struct Draft {
    user: SyntheticUser,
    traits: Traits,
}

fn standard(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

fn word_body(rng: &mut ChaCha8Rng, style: &[f64], cfg: &PopulationConfig) -> String {
    let pick = WeightedIndex::new(style).expect("positive style weights");
    let len = rng.random_range(5..13);
    let mut words: Vec<String> = (0..len).map(|_| WORDS[pick.sample(rng)].to_string()).collect();
    if !cfg.topics.is_empty() && rng.random::<f64>() < cfg.topic_rate {
        let at = rng.random_range(0..=words.len());
        words.insert(at, cfg.topics.choose(rng).expect("nonempty topics").clone());
    }
    if rng.random::<f64>() < 0.3 {
        words.push(format!("@acct{}", rng.random_range(0..1_000_000)));
    }
    if rng.random::<f64>() < 0.2 {
        words.push(format!("#tag{}", rng.random_range(0..50)));
    }
    if rng.random::<f64>() < 0.15 {
        words.push(format!("http://t.co/{:x}", rng.random::<u32>()));
    }
    words.join(" ")
}

fn draft_user(cfg: &PopulationConfig, i: usize) -> Draft {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(i as u64 + 1);
    let traits = Traits {
        activity: standard(&mut rng),
        retweeting: standard(&mut rng),
        stranger: standard(&mut rng),
        routine: standard(&mut rng),
        noise: standard(&mut rng),
    };
    let user_id = format!("s{}-{i:05}", cfg.seed);
    let rt = cfg.request_time;

    let posts_per_day = (cfg.activity.median_posts_per_day.ln() + cfg.activity.log_sd * traits.activity).exp().clamp(0.02, 60.0);
    let retweet_share = sigmoid(cfg.retweeting.mean_logit + cfg.retweeting.logit_sd * traits.retweeting);
    let stranger_share = sigmoid(cfg.retweeting.stranger_mean_logit + cfg.retweeting.stranger_logit_sd * traits.stranger);
    let concentration = sigmoid(1.5 * traits.routine);
    let regime_pick = WeightedIndex::new(cfg.activity.regimes.iter().map(|r| r.weight)).expect("validated weights");
    let regime = &cfg.activity.regimes[regime_pick.sample(&mut rng)];
    let regime_total: f64 = regime.hourly.iter().sum();
    let hourly: Vec<f64> = regime.hourly.iter().map(|h| (1.0 - concentration) / 24.0 + concentration * h / regime_total).collect();
    let hour_pick = WeightedIndex::new(&hourly).expect("positive hourly profile");
    let weekend_factor = rng.random_range(0.4..1.6);
    let mean_wait = LogNormal::new((cfg.wait.median_hours * HOUR as f64).ln(), cfg.wait.log_sd)
        .expect("validated wait distribution")
        .sample(&mut rng)
        .clamp(60.0, 60.0 * DAY as f64);

    let longevity_days = rng.random_range(60..3000);
    let created_at = rt - longevity_days * DAY;
    let followers = (Pareto::new(cfg.followers.pareto_scale, cfg.followers.pareto_shape).expect("validated pareto").sample(&mut rng)
        as u64)
        .min(cfg.followers.cap);
    let friends_n = LogNormal::new(cfg.followers.median_friends.ln(), 0.8).expect("valid").sample(&mut rng).clamp(1.0, 2000.0) as usize;
    let friend_ids: BTreeSet<String> =
        index::sample(&mut rng, 1_000_000, friends_n).into_iter().map(|k| format!("acct{k}")).collect();
    let friend_list: Vec<&String> = friend_ids.iter().collect();

    let style: Vec<f64> = (0..WORDS.len()).map(|_| rng.random_range(0.2..2.0)).collect();

    // Walk backwards day by day until the timeline is full or history ends.
    let day0 = rt.div_euclid(DAY) * DAY;
    let mut timeline: Vec<Message> = Vec::new();
    for d in 0..cfg.history_days as i64 {
        if timeline.len() >= MAX_TIMELINE {
            break;
        }
        let day_start = day0 - d * DAY;
        if day_start + DAY <= created_at {
            break;
        }
        let weekday = (day_start.div_euclid(DAY) + 3).rem_euclid(7);
        let intensity = posts_per_day * if weekday >= 5 { weekend_factor } else { 1.0 };
        let count = Poisson::new(intensity).expect("positive intensity").sample(&mut rng) as usize;
        let mut day_msgs = Vec::with_capacity(count);
        for _ in 0..count {
            let ts = day_start + hour_pick.sample(&mut rng) as i64 * HOUR + rng.random_range(0..HOUR);
            let body = word_body(&mut rng, &style, cfg);
            let is_retweet = rng.random::<f64>() < retweet_share;
            if ts >= rt || ts < created_at {
                continue;
            }
            let msg = if is_retweet {
                let author = if friend_list.is_empty() || rng.random::<f64>() < stranger_share {
                    loop {
                        let candidate = format!("acct{}", rng.random_range(0..1_000_000));
                        if !friend_ids.contains(&candidate) {
                            break candidate;
                        }
                    }
                } else {
                    (*friend_list.choose(&mut rng).expect("nonempty")).clone()
                };
                let wait = Exp::new(1.0 / mean_wait).expect("positive mean").sample(&mut rng).max(1.0) as i64;
                let mut m = Message::from_text(ts, format!("RT @{author} {body}"));
                m.original_timestamp = Some(ts - wait);
                m
            } else {
                Message::from_text(ts, body)
            };
            day_msgs.push(msg);
        }
        timeline.extend(day_msgs);
    }

    let name_len = rng.random_range(4..16);
    let screen_name: String = (0..name_len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
    let description = if rng.random::<f64>() < 0.3 { String::new() } else { word_body(&mut rng, &style, cfg) };
    let lifetime = (posts_per_day * longevity_days as f64 * rng.random_range(0.7..1.3)).round() as u64;
    let follower_seed = rng.random::<u64>();

    let mut record = UserRecord {
        user_id,
        screen_name,
        created_at,
        description,
        has_url: rng.random::<f64>() < 0.4,
        friends_count: friend_ids.len() as u64,
        followers_count: followers,
        follower_ids: None,
        friend_ids: Some(friend_ids),
        statuses_count: None,
        timeline,
    };
    record.normalize_timeline();
    record.statuses_count = Some(lifetime.max(record.timeline.len() as u64));

    Draft {
        user: SyntheticUser {
            record,
            latent_willingness: 0.0,
            latent_mean_wait: mean_wait,
            follower_seed,
            follower_overlap: cfg.followers.overlap,
            hub_pool: cfg.followers.hub_pool,
        },
        traits,
    }
}

/// Intercept `b` such that the mean of `sigmoid(a_i + b)` equals `target`.
pub fn calibrate_intercept(logits: &[f64], target: f64) -> f64 {
    let mean = |b: f64| logits.iter().map(|a| sigmoid(a + b)).sum::<f64>() / logits.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Generates `config.n_users` users, deterministically for a given seed.
pub fn generate_population(config: &PopulationConfig) -> Result<Vec<SyntheticUser>, SimulateError> {
    config.validate()?;
    let drafts: Vec<Draft> = (0..config.n_users).into_par_iter().map(|i| draft_user(config, i)).collect();

    let log_followers: Vec<f64> = drafts.iter().map(|d| (d.user.record.followers_count as f64 + 1.0).ln()).collect();
    let n = log_followers.len() as f64;
    let mean = log_followers.iter().sum::<f64>() / n;
    let sd = (log_followers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-9);

    let w = &config.willingness;
    let logits: Vec<f64> = drafts
        .iter()
        .zip(&log_followers)
        .map(|(d, lf)| {
            let t = &d.traits;
            w.activity * t.activity
                + w.retweeting * t.retweeting
                + w.stranger * t.stranger
                + w.routine * t.routine
                + w.log_followers * (lf - mean) / sd
                + w.noise * t.noise
        })
        .collect();
    let b = calibrate_intercept(&logits, config.base_positive_rate);

    Ok(drafts
        .into_iter()
        .zip(logits)
        .map(|(d, a)| {
            let mut user = d.user;
            user.latent_willingness = sigmoid(a + b);
            if config.followers.materialize_ids {
                user.record.follower_ids = Some(user.follower_ids());
            }
            user
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, seed: u64) -> PopulationConfig {
        PopulationConfig { n_users: n, seed, ..Default::default() }
    }

    #[test]
    fn minimal_population() {
        let pop = generate_population(&small(10, 3)).unwrap();
        assert_eq!(pop.len(), 10);
        for u in &pop {
            let r = &u.record;
            assert!(r.timeline.len() <= MAX_TIMELINE);
            assert!(r.timeline.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
            assert!(r.timeline.iter().all(|m| m.timestamp < 1_700_000_000 && m.timestamp >= r.created_at));
            assert!(r.timeline.iter().filter(|m| m.is_retweet).all(|m| m.original_author_id.is_some()
                && m.original_timestamp.is_some_and(|o| o < m.timestamp)));
            assert!((0.0..=1.0).contains(&u.latent_willingness));
            assert!(u.latent_mean_wait > 0.0);
            assert_eq!(u.follower_ids().len() as u64, r.followers_count);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_population(&small(20, 5)).unwrap(), generate_population(&small(20, 5)).unwrap());
        assert_ne!(generate_population(&small(20, 5)).unwrap(), generate_population(&small(20, 6)).unwrap());
    }

    #[test]
    fn mean_willingness_matches_base_rate() {
        let pop = generate_population(&small(500, 2)).unwrap();
        let mean = pop.iter().map(|u| u.latent_willingness).sum::<f64>() / 500.0;
        assert!((mean - 0.05).abs() < 1e-9, "{mean}");
    }

    #[test]
    fn config_validation() {
        assert_eq!(generate_population(&small(9, 1)).unwrap_err().code(), "InvalidConfig");
        let cfg = PopulationConfig { base_positive_rate: 1.0, ..small(10, 1) };
        assert!(cfg.validate().is_err());
        assert!(PopulationConfig::from_json(r#"{"n_users": 10, "bogus": 1}"#).is_err());
        let cfg = PopulationConfig::from_json(r#"{"n_users": 12, "seed": 9}"#).unwrap();
        assert_eq!((cfg.n_users, cfg.seed, cfg.base_positive_rate), (12, 9, 0.05));
    }

    #[test]
    fn calibration() {
        let logits = [-2.0, 0.0, 1.0, 3.0];
        let b = calibrate_intercept(&logits, 0.2);
        let mean = logits.iter().map(|a| sigmoid(a + b)).sum::<f64>() / 4.0;
        assert!((mean - 0.2).abs() < 1e-12);
    }

    #[test]
    fn overlapping_followers() {
        let cfg = PopulationConfig {
            followers: FollowerConfig { overlap: 1.0, hub_pool: 50, materialize_ids: true, ..Default::default() },
            ..small(30, 4)
        };
        let pop = generate_population(&cfg).unwrap();
        assert!(pop.iter().all(|u| u.record.follower_ids.as_ref().unwrap().iter().all(|id| id.starts_with("hub") || id.contains("-f"))));
    }
}
