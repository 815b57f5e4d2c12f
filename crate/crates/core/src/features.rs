//! Feature extraction over the six families: profile, social network,
//! personality, activity, past retweeting and readiness.
//!
//! All day/hour bucketing is in UTC. Rates that divide by a message count use
//! `max(1, N)`; rates that divide by a number of days floor it at one day.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, LabeledDataset, UserRecord};
use crate::personality::{self, Lexicon, PersonalityError, TraitMapping, BIG5, FACETS};
use crate::DAY;

/// Manifest schema version; bump when names or order change.
pub const MANIFEST_VERSION: u32 = 1;

/// Most recent messages used for tweeting steadiness.
pub const STEADINESS_WINDOW: usize = 20;
/// Additive floor on σ so that perfectly periodic posting stays finite.
pub const STEADINESS_EPSILON: f64 = 1.0;
/// Length of the "last month" window, in seconds.
pub const MONTH_WINDOW: i64 = 30 * DAY;

pub const PROFILE_FEATURES: [&str; 5] = [
    "longevity_days",
    "screen_name_length",
    "has_description",
    "description_length",
    "has_url",
];

pub const SOCIAL_FEATURES: [&str; 3] = ["friends_count", "followers_count", "friends_followers_ratio"];

pub const ACTIVITY_FEATURES: [&str; 9] = [
    "status_count",
    "mentions_per_status",
    "urls_per_status",
    "hashtags_per_status",
    "statuses_per_day_lifetime",
    "statuses_per_day_last_month",
    "mentions_per_day_last_month",
    "urls_per_day_last_month",
    "hashtags_per_day_last_month",
];

pub const RETWEETING_FEATURES: [&str; 3] = ["retweets_per_status", "retweets_per_day", "stranger_retweet_fraction"];

pub const READINESS_FEATURES: [&str; 6] = [
    "day_likelihood",
    "hour_likelihood",
    "day_entropy",
    "hour_entropy",
    "steadiness",
    "inactivity_seconds",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("user {user_id}: request time {request_time} precedes account creation {created_at}")]
    NegativeLongevity {
        user_id: String,
        created_at: i64,
        request_time: i64,
    },
    #[error("user {user_id}: feature {feature} is not finite")]
    NonFinite { user_id: String, feature: String },
    #[error("feature manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error(transparent)]
    Personality(#[from] PersonalityError),
}

impl FeatureError {
    pub fn code(&self) -> &'static str {
        match self {
            FeatureError::NegativeLongevity { .. } => "NegativeLongevity",
            FeatureError::NonFinite { .. } => "NonFinite",
            FeatureError::ManifestMismatch(_) => "ManifestMismatch",
            FeatureError::Personality(e) => e.code(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Profile,
    Social,
    Personality,
    Activity,
    Retweeting,
    Readiness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub family: Family,
}

/// Ordered feature names shared by extractors, model files and services.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub version: u32,
    pub features: Vec<FeatureDef>,
}

impl FeatureManifest {
    /// Manifest produced by an extractor over `lexicon`.
    pub fn for_lexicon(lexicon: &Lexicon) -> Self {
        let mut features = Vec::new();
        let mut push = |names: &mut dyn Iterator<Item = String>, family| {
            features.extend(names.map(|name| FeatureDef { name, family }));
        };
        push(&mut PROFILE_FEATURES.iter().map(|s| s.to_string()), Family::Profile);
        push(&mut SOCIAL_FEATURES.iter().map(|s| s.to_string()), Family::Social);
        push(
            &mut lexicon.categories().iter().map(|c| format!("liwc_{}", c.name)),
            Family::Personality,
        );
        push(
            &mut BIG5.iter().chain(FACETS.iter()).map(|t| format!("trait_{t}")),
            Family::Personality,
        );
        push(&mut ACTIVITY_FEATURES.iter().map(|s| s.to_string()), Family::Activity);
        push(&mut RETWEETING_FEATURES.iter().map(|s| s.to_string()), Family::Retweeting);
        push(&mut READINESS_FEATURES.iter().map(|s| s.to_string()), Family::Readiness);
        FeatureManifest { version: MANIFEST_VERSION, features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn family_count(&self, family: Family) -> usize {
        self.features.iter().filter(|f| f.family == family).count()
    }

    /// Manifest restricted to `indices` (ascending), same version.
    pub fn subset(&self, indices: &[usize]) -> FeatureManifest {
        FeatureManifest {
            version: self.version,
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub user_id: String,
    pub request_time: i64,
    /// Values in manifest order.
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, manifest: &FeatureManifest, name: &str) -> Option<f64> {
        manifest.index_of(name).and_then(|i| self.values.get(i).copied())
    }
}

/// A labeled feature vector with a training weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedInstance {
    pub features: FeatureVector,
    pub label: Label,
    pub weight: f64,
}

/// Labeled vectors conforming to one manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub name: String,
    pub manifest: Arc<FeatureManifest>,
    pub instances: Vec<WeightedInstance>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.instances.iter().filter(|i| i.label == label).count()
    }

    pub fn dims(&self) -> usize {
        self.manifest.len()
    }
}

// ---------------------------------------------------------------------------
// Family extractors
// ---------------------------------------------------------------------------

fn longevity_days(user: &UserRecord, request_time: i64) -> f64 {
    (request_time - user.created_at) as f64 / DAY as f64
}

/// (longevity_days, screen-name length, has_description, description length, has_url).
pub fn extract_profile(user: &UserRecord, request_time: i64) -> Result<[f64; 5], FeatureError> {
    if request_time < user.created_at {
        return Err(FeatureError::NegativeLongevity {
            user_id: user.user_id.clone(),
            created_at: user.created_at,
            request_time,
        });
    }
    let desc_len = user.description.chars().count();
    Ok([
        longevity_days(user, request_time),
        user.screen_name.chars().count() as f64,
        if desc_len > 0 { 1.0 } else { 0.0 },
        desc_len as f64,
        if user.has_url { 1.0 } else { 0.0 },
    ])
}

/// (friends, followers, friends / max(1, followers)).
pub fn extract_social(user: &UserRecord) -> [f64; 3] {
    let friends = user.friends_count as f64;
    let followers = user.followers_count as f64;
    [friends, followers, friends / followers.max(1.0)]
}

/// Category scores followed by the 35 trait outputs, over all timeline text.
pub fn extract_personality(
    user: &UserRecord,
    lexicon: &Lexicon,
    mapping: &TraitMapping,
) -> Result<Vec<f64>, PersonalityError> {
    let tokens: Vec<String> = user.timeline.iter().flat_map(|m| personality::tokenize(&m.text)).collect();
    let scores = personality::score_categories(&tokens, lexicon);
    let traits = personality::derive_traits(&scores, mapping)?;
    let mut out: Vec<f64> = scores.scores.iter().map(|(_, v)| *v).collect();
    out.extend(traits.values());
    Ok(out)
}

fn in_month_window(ts: i64, request_time: i64) -> bool {
    ts > request_time - MONTH_WINDOW && ts <= request_time
}

/// The nine activity rates; see [`ACTIVITY_FEATURES`] for order.
pub fn extract_activity(user: &UserRecord, request_time: i64) -> [f64; 9] {
    let tl = &user.timeline;
    if tl.is_empty() {
        return [0.0; 9];
    }
    let n = tl.len() as f64;
    let denom = n.max(1.0);
    let mentions: u64 = tl.iter().map(|m| u64::from(m.mention_count)).sum();
    let urls: u64 = tl.iter().map(|m| u64::from(m.url_count)).sum();
    let hashtags: u64 = tl.iter().map(|m| u64::from(m.hashtag_count)).sum();

    let total_posted = user.statuses_count.map(|c| c as f64).unwrap_or(n);
    let life = longevity_days(user, request_time).max(1.0);

    let (mut w_n, mut w_m, mut w_u, mut w_h) = (0u64, 0u64, 0u64, 0u64);
    for m in tl.iter().filter(|m| in_month_window(m.timestamp, request_time)) {
        w_n += 1;
        w_m += u64::from(m.mention_count);
        w_u += u64::from(m.url_count);
        w_h += u64::from(m.hashtag_count);
    }
    let days = (MONTH_WINDOW / DAY) as f64;
    [
        n,
        mentions as f64 / denom,
        urls as f64 / denom,
        hashtags as f64 / denom,
        total_posted / life,
        w_n as f64 / days,
        w_m as f64 / days,
        w_u as f64 / days,
        w_h as f64 / days,
    ]
}

/// (R / max(1, N), retweets per day over the timeline span, fraction of
/// retweets whose original author is not a friend).
///
/// Without a friend-id set the stranger fraction is 0.
pub fn extract_retweeting(user: &UserRecord) -> [f64; 3] {
    let tl = &user.timeline;
    let retweets: Vec<_> = tl.iter().filter(|m| m.is_retweet).collect();
    if retweets.is_empty() {
        return [0.0; 3];
    }
    let r = retweets.len() as f64;
    let span_days = match (tl.first(), tl.last()) {
        (Some(a), Some(b)) => (b.timestamp - a.timestamp) as f64 / DAY as f64,
        _ => 0.0,
    }
    .max(1.0);
    let stranger = match &user.friend_ids {
        Some(friends) => {
            let outside = retweets
                .iter()
                .filter(|m| m.original_author_id.as_ref().is_none_or(|a| !friends.contains(a)))
                .count();
            outside as f64 / r
        }
        None => 0.0,
    };
    [r / (tl.len() as f64).max(1.0), r / span_days, stranger]
}

/// Monday = 0 .. Sunday = 6, UTC.
pub fn weekday(ts: i64) -> usize {
    // 1970-01-01 was a Thursday.
    (ts.div_euclid(DAY) + 3).rem_euclid(7) as usize
}

/// 0..24, UTC.
pub fn hour_of_day(ts: i64) -> usize {
    (ts.rem_euclid(DAY) / 3600) as usize
}

/// Shannon entropy in nats of the normalized bucket counts.
pub fn entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Population standard deviation of consecutive gaps among the most recent
/// [`STEADINESS_WINDOW`] timestamps; `None` with fewer than two.
pub fn recent_gap_std(timestamps: &[i64]) -> Option<f64> {
    let recent = &timestamps[timestamps.len().saturating_sub(STEADINESS_WINDOW)..];
    if recent.len() < 2 {
        return None;
    }
    let gaps: Vec<f64> = recent.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64;
    Some(var.sqrt())
}

/// The six readiness features; see [`READINESS_FEATURES`] for order.
///
/// Likelihoods are anchored at the weekday and hour of `request_time`.
/// Steadiness is `1 / (σ + 1 s)`, and 0 with fewer than two messages.
/// Inactivity falls back to the account age when the timeline is empty.
pub fn extract_readiness(user: &UserRecord, request_time: i64) -> [f64; 6] {
    let tl = &user.timeline;
    if tl.is_empty() {
        let inactivity = (request_time - user.created_at).max(0) as f64;
        return [0.0, 0.0, 0.0, 0.0, 0.0, inactivity];
    }
    let mut days = [0u64; 7];
    let mut hours = [0u64; 24];
    for m in tl {
        days[weekday(m.timestamp)] += 1;
        hours[hour_of_day(m.timestamp)] += 1;
    }
    let n = tl.len() as f64;
    let timestamps: Vec<i64> = tl.iter().map(|m| m.timestamp).collect();
    let steadiness = recent_gap_std(&timestamps)
        .map(|sigma| 1.0 / (sigma + STEADINESS_EPSILON))
        .unwrap_or(0.0);
    let last = *timestamps.last().expect("non-empty timeline");
    [
        days[weekday(request_time)] as f64 / n,
        hours[hour_of_day(request_time)] as f64 / n,
        entropy(&days),
        entropy(&hours),
        steadiness,
        (request_time - last).max(0) as f64,
    ]
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Holds the lexicon and trait mapping and assembles full feature vectors.
#[derive(Clone, Debug)]
pub struct Extractor {
    lexicon: Arc<Lexicon>,
    mapping: Arc<TraitMapping>,
    manifest: Arc<FeatureManifest>,
}

impl Default for Extractor {
    fn default() -> Self {
        Extractor::new(Lexicon::builtin(), TraitMapping::builtin()).expect("bundled lexicon and mapping agree")
    }
}

impl Extractor {
    pub fn new(lexicon: Lexicon, mapping: TraitMapping) -> Result<Self, PersonalityError> {
        mapping.validate(&lexicon)?;
        let manifest = Arc::new(FeatureManifest::for_lexicon(&lexicon));
        Ok(Extractor {
            lexicon: Arc::new(lexicon),
            mapping: Arc::new(mapping),
            manifest,
        })
    }

    pub fn manifest(&self) -> &Arc<FeatureManifest> {
        &self.manifest
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Concatenates profile, social, personality, activity, retweeting and
    /// readiness features, in that order.
    pub fn assemble(&self, user: &UserRecord, request_time: i64) -> Result<FeatureVector, FeatureError> {
        let mut values = Vec::with_capacity(self.manifest.len());
        values.extend(extract_profile(user, request_time)?);
        values.extend(extract_social(user));
        values.extend(extract_personality(user, &self.lexicon, &self.mapping)?);
        values.extend(extract_activity(user, request_time));
        values.extend(extract_retweeting(user));
        values.extend(extract_readiness(user, request_time));
        debug_assert_eq!(values.len(), self.manifest.len());
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite {
                user_id: user.user_id.clone(),
                feature: self.manifest.features[i].name.clone(),
            });
        }
        Ok(FeatureVector {
            user_id: user.user_id.clone(),
            request_time,
            values,
        })
    }

    /// Feature vectors for every entry, unit weights, dataset order.
    pub fn extract_dataset(&self, ds: &LabeledDataset) -> Result<FeatureTable, FeatureError> {
        let instances = ds
            .entries
            .par_iter()
            .map(|e| {
                Ok(WeightedInstance {
                    features: self.assemble(&e.user, e.request_time)?,
                    label: e.label,
                    weight: 1.0,
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?;
        Ok(FeatureTable {
            name: ds.name.clone(),
            manifest: Arc::clone(&self.manifest),
            instances,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Message;
    use std::collections::BTreeSet;

    const T0: i64 = 1_340_000_000;

    fn user() -> UserRecord {
        UserRecord {
            user_id: "u".into(),
            screen_name: "abc".into(),
            created_at: T0 - 10 * DAY,
            description: String::new(),
            has_url: false,
            friends_count: 50,
            followers_count: 100,
            follower_ids: None,
            friend_ids: None,
            statuses_count: None,
            timeline: vec![],
        }
    }

    fn msg(ts: i64, text: &str) -> Message {
        Message::from_text(ts, text)
    }

    #[test]
    fn profile_basic() {
        assert_eq!(extract_profile(&user(), T0).unwrap(), [10.0, 3.0, 0.0, 0.0, 0.0]);
        let mut u = user();
        u.created_at = T0;
        assert_eq!(extract_profile(&u, T0).unwrap()[0], 0.0);
        assert!(matches!(extract_profile(&u, T0 - 1), Err(FeatureError::NegativeLongevity { .. })));
    }

    #[test]
    fn profile_fixture() {
        let mut u = user();
        u.screen_name = "SFsafety_news".into();
        u.description = "Local news, façade".into();
        u.has_url = true;
        u.created_at = T0 - 36 * 3600;
        assert_eq!(extract_profile(&u, T0).unwrap(), [1.5, 13.0, 1.0, 18.0, 1.0]);
    }

    #[test]
    fn social_ratios() {
        assert_eq!(extract_social(&user()), [50.0, 100.0, 0.5]);
        let mut u = user();
        u.friends_count = 10;
        u.followers_count = 0;
        assert_eq!(extract_social(&u)[2], 10.0);
        u.friends_count = 7;
        u.followers_count = 4;
        assert_eq!(extract_social(&u), [7.0, 4.0, 1.75]);
    }

    #[test]
    fn activity_empty_and_urls() {
        assert_eq!(extract_activity(&user(), T0), [0.0; 9]);
        let mut u = user();
        u.timeline = (0..10)
            .map(|i| msg(T0 - 100 * DAY + i, if i < 4 { "see http://x.y" } else { "hi" }))
            .collect();
        let a = extract_activity(&u, T0);
        assert_eq!(a[0], 10.0);
        assert_eq!(a[2], 0.4);
        assert_eq!(a[5], 0.0);
    }

    #[test]
    fn retweeting_rates() {
        let mut u = user();
        u.timeline = (0..20)
            .map(|i| msg(T0 - 20 * DAY + i * DAY, if i % 4 == 0 { "RT @z hi" } else { "own" }))
            .collect();
        let r = extract_retweeting(&u);
        assert_eq!(r[0], 0.25);
        assert!((r[1] - 5.0 / 19.0).abs() < 1e-12);
        assert_eq!(r[2], 0.0);
        u.timeline.retain(|m| !m.is_retweet);
        assert_eq!(extract_retweeting(&u), [0.0; 3]);
    }

    #[test]
    fn stranger_fraction_enumeration() {
        let mut u = user();
        u.friend_ids = Some(BTreeSet::from(["a".to_string(), "b".to_string()]));
        u.timeline = vec![msg(T0 - 30, "RT @a x"), msg(T0 - 20, "RT @c y"), msg(T0 - 10, "RT @c z")];
        assert!((extract_retweeting(&u)[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weekday_and_hour() {
        assert_eq!(weekday(0), 3); // Thursday
        assert_eq!(weekday(4 * DAY), 0); // Monday 1970-01-05
        assert_eq!(weekday(-1), 2);
        assert_eq!(hour_of_day(3 * 3600 + 59), 3);
        assert_eq!(hour_of_day(-1), 23);
    }

    #[test]
    fn uniform_hours() {
        let mut u = user();
        let day_start = T0 - T0.rem_euclid(DAY) - DAY;
        u.timeline = (0..24).map(|h| msg(day_start + h * 3600 + 60, "x")).collect();
        let r = extract_readiness(&u, T0);
        assert!((r[3] - 24f64.ln()).abs() < 1e-12);
        assert!((r[1] - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(r[2], 0.0);
        assert_eq!(r[0], if weekday(T0) == weekday(day_start) { 1.0 } else { 0.0 });
    }

    #[test]
    fn single_bucket_and_periodic() {
        let mut u = user();
        let base = T0 - T0.rem_euclid(DAY) + hour_of_day(T0) as i64 * 3600 - 7 * DAY;
        // Same hour every day: one hour bucket, periodic 1-day gaps.
        u.timeline = (0..5).map(|d| msg(base + d * DAY, "x")).collect();
        let r = extract_readiness(&u, T0);
        assert_eq!(r[3], 0.0);
        assert_eq!(r[1], 1.0);
        assert_eq!(r[4], 1.0);

        u.timeline = (0..30).map(|i| msg(T0 - 40 * 3600 + i * 3600, "x")).collect();
        let r = extract_readiness(&u, T0);
        assert_eq!(r[4], 1.0 / STEADINESS_EPSILON);
        assert_eq!(r[5], (11 * 3600) as f64);
    }

    #[test]
    fn readiness_empty_and_single() {
        let r = extract_readiness(&user(), T0);
        assert_eq!(r, [0.0, 0.0, 0.0, 0.0, 0.0, (10 * DAY) as f64]);
        let mut u = user();
        u.timeline = vec![msg(T0 - 100, "x")];
        assert_eq!(extract_readiness(&u, T0)[4], 0.0);
    }

    #[test]
    fn assembled_shape() {
        let ex = Extractor::default();
        let m = ex.manifest();
        assert_eq!(m.len(), 129);
        assert_eq!(m.family_count(Family::Profile), 5);
        assert_eq!(m.family_count(Family::Social), 3);
        assert_eq!(m.family_count(Family::Personality), 103);
        assert_eq!(m.family_count(Family::Activity), 9);
        assert_eq!(m.family_count(Family::Retweeting), 3);
        assert_eq!(m.family_count(Family::Readiness), 6);
        let names: BTreeSet<_> = m.names().collect();
        assert_eq!(names.len(), 129);

        let mut u = user();
        u.timeline = vec![msg(T0 - 5000, "I love my family #home"), msg(T0 - 50, "RT @bob so sad http://t.co")];
        let a = ex.assemble(&u, T0).unwrap();
        let b = ex.assemble(&u, T0).unwrap();
        assert_eq!(a.values.len(), 129);
        assert!(a.values.iter().all(|v| v.is_finite()));
        assert_eq!(a, b);
    }
}
