//! Canonical dataset model, JSONL ingestion and stratified splitting.
//!
//! One user per line:
//!
//! ```text
//! {"user_id":"42","screen_name":"abc","created_at":1339000000,"description":"",
//!  "has_url":false,"friends_count":10,"followers_count":20,"label":"retweeter",
//!  "request_time":1340000000,"timeline":[{"ts":1339999000,"text":"RT @a hi"}]}
//! ```
//!
//! Optional keys are filled in on load: `is_retweet` from the `"RT @"` prefix,
//! mention/URL/hashtag counts from the message text.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Most recent messages kept per user.
pub const MAX_TIMELINE: usize = 200;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate user id {0}")]
    DuplicateUser(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has a single class; both retweeters and non-retweeters are required")]
    SingleClass,
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::Io { .. } => "Io",
            CorpusError::MalformedRecord { .. } => "MalformedRecord",
            CorpusError::DuplicateUser(_) => "DuplicateUser",
            CorpusError::EmptyDataset => "EmptyDataset",
            CorpusError::SingleClass => "SingleClass",
            CorpusError::InvalidFraction(_) => "InvalidFraction",
        }
    }
}

/// Ground-truth response to a retweet request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NonRetweeter,
    Retweeter,
}

impl Label {
    /// Class index: 0 for non-retweeters, 1 for retweeters.
    pub fn index(self) -> usize {
        match self {
            Label::NonRetweeter => 0,
            Label::Retweeter => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 1 {
            Label::Retweeter
        } else {
            Label::NonRetweeter
        }
    }

    pub fn from_bool(retweeted: bool) -> Label {
        if retweeted {
            Label::Retweeter
        } else {
            Label::NonRetweeter
        }
    }

    pub fn is_retweeter(self) -> bool {
        self == Label::Retweeter
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMessage", into = "RawMessage")]
pub struct Message {
    pub timestamp: i64,
    pub text: String,
    pub is_retweet: bool,
    pub original_author_id: Option<String>,
    pub original_timestamp: Option<i64>,
    pub mention_count: u32,
    pub url_count: u32,
    pub hashtag_count: u32,
}

impl Message {
    /// Builds a message from its text, deriving retweet status and entity
    /// counts the same way the loader does.
    pub fn from_text(timestamp: i64, text: impl Into<String>) -> Message {
        let text = text.into();
        let (mention_count, hashtag_count, url_count) = count_entities(&text);
        let original_author_id = retweet_author(&text);
        Message {
            timestamp,
            is_retweet: original_author_id.is_some(),
            original_author_id,
            original_timestamp: None,
            mention_count,
            url_count,
            hashtag_count,
            text,
        }
    }
}

/// A candidate's profile, social counts and message timeline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUser", into = "RawUser")]
pub struct UserRecord {
    pub user_id: String,
    pub screen_name: String,
    pub created_at: i64,
    pub description: String,
    pub has_url: bool,
    pub friends_count: u64,
    pub followers_count: u64,
    pub follower_ids: Option<BTreeSet<String>>,
    pub friend_ids: Option<BTreeSet<String>>,
    /// Lifetime number of posted statuses, when the source reports it.
    pub statuses_count: Option<u64>,
    /// Ascending by timestamp, at most [`MAX_TIMELINE`] entries.
    pub timeline: Vec<Message>,
}

impl UserRecord {
    /// Sorts the timeline and keeps its most recent [`MAX_TIMELINE`] messages.
    pub fn normalize_timeline(&mut self) {
        self.timeline.sort_by_key(|m| m.timestamp);
        if self.timeline.len() > MAX_TIMELINE {
            let cut = self.timeline.len() - MAX_TIMELINE;
            self.timeline.drain(..cut);
        }
    }

    pub fn last_timestamp(&self) -> Option<i64> {
        self.timeline.last().map(|m| m.timestamp)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledUser {
    pub user: UserRecord,
    pub label: Label,
    pub request_time: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub entries: Vec<LabeledUser>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, entries: Vec<LabeledUser>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.user.user_id.as_str()) {
                return Err(CorpusError::DuplicateUser(e.user.user_id.clone()));
            }
        }
        if entries.is_empty() {
            return Err(CorpusError::EmptyDataset);
        }
        Ok(LabeledDataset { name: name.into(), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// Canonical JSONL rendering; `load_dataset` of this text reproduces `self`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let mut raw = RawUser::from(e.user.clone());
            raw.label = Some(e.label);
            raw.request_time = Some(e.request_time);
            out.push_str(&serde_json::to_string(&raw).expect("dataset rows serialize"));
            out.push('\n');
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawMessage {
    ts: i64,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_retweet: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    original_author_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    original_ts: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mention_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    url_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hashtag_count: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawUser {
    user_id: String,
    screen_name: String,
    created_at: i64,
    #[serde(default)]
    description: String,
    #[serde(default)]
    has_url: bool,
    friends_count: u64,
    followers_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    follower_ids: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    friend_ids: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    statuses_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    request_time: Option<i64>,
    timeline: Vec<RawMessage>,
}

impl TryFrom<RawMessage> for Message {
    type Error = String;

    fn try_from(raw: RawMessage) -> Result<Self, String> {
        let is_retweet = raw.is_retweet.unwrap_or_else(|| raw.text.starts_with("RT @"));
        let original_author_id = match raw.original_author_id {
            Some(a) => Some(a),
            None if is_retweet => Some(
                retweet_author(&raw.text)
                    .ok_or_else(|| "retweet without original_author_id".to_string())?,
            ),
            None => None,
        };
        let original_timestamp = match raw.original_ts {
            Some(o) if o > raw.ts => {
                log::warn!("dropping original_ts {o} later than retweet ts {}", raw.ts);
                None
            }
            other => other,
        };
        let (m, h, u) = count_entities(&raw.text);
        Ok(Message {
            timestamp: raw.ts,
            is_retweet,
            original_author_id,
            original_timestamp,
            mention_count: raw.mention_count.unwrap_or(m),
            url_count: raw.url_count.unwrap_or(u),
            hashtag_count: raw.hashtag_count.unwrap_or(h),
            text: raw.text,
        })
    }
}

impl From<Message> for RawMessage {
    fn from(m: Message) -> Self {
        RawMessage {
            ts: m.timestamp,
            text: m.text,
            is_retweet: Some(m.is_retweet),
            original_author_id: m.original_author_id,
            original_ts: m.original_timestamp,
            mention_count: Some(m.mention_count),
            url_count: Some(m.url_count),
            hashtag_count: Some(m.hashtag_count),
        }
    }
}

impl TryFrom<RawUser> for UserRecord {
    type Error = String;

    fn try_from(raw: RawUser) -> Result<Self, String> {
        if raw.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        let timeline = raw
            .timeline
            .into_iter()
            .map(Message::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        let mut user = UserRecord {
            user_id: raw.user_id,
            screen_name: raw.screen_name,
            created_at: raw.created_at,
            description: raw.description,
            has_url: raw.has_url,
            friends_count: raw.friends_count,
            followers_count: raw.followers_count,
            follower_ids: raw.follower_ids,
            friend_ids: raw.friend_ids,
            statuses_count: raw.statuses_count,
            timeline,
        };
        user.normalize_timeline();
        Ok(user)
    }
}

impl From<UserRecord> for RawUser {
    fn from(u: UserRecord) -> Self {
        RawUser {
            user_id: u.user_id,
            screen_name: u.screen_name,
            created_at: u.created_at,
            description: u.description,
            has_url: u.has_url,
            friends_count: u.friends_count,
            followers_count: u.followers_count,
            follower_ids: u.follower_ids,
            friend_ids: u.friend_ids,
            statuses_count: u.statuses_count,
            label: None,
            request_time: None,
            timeline: u.timeline.into_iter().map(RawMessage::from).collect(),
        }
    }
}

/// Counts (mentions, hashtags, URLs) among whitespace-separated tokens.
pub fn count_entities(text: &str) -> (u32, u32, u32) {
    let (mut mentions, mut hashtags, mut urls) = (0, 0, 0);
    for tok in text.split_whitespace() {
        if tok.starts_with("http") {
            urls += 1;
        } else if tok.len() > 1 && tok.starts_with('@') {
            mentions += 1;
        } else if tok.len() > 1 && tok.starts_with('#') {
            hashtags += 1;
        }
    }
    (mentions, hashtags, urls)
}

/// Screen name after a leading `"RT @"`, if any.
fn retweet_author(text: &str) -> Option<String> {
    let rest = text.strip_prefix("RT @")?;
    let name: String = rest
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect();
    (!name.is_empty()).then_some(name)
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

fn parse_line(line: &str, lineno: usize) -> Result<(UserRecord, Option<Label>, Option<i64>), CorpusError> {
    let raw: RawUser = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
        line: lineno,
        reason: e.to_string(),
    })?;
    let label = raw.label;
    let request_time = raw.request_time;
    let user = UserRecord::try_from(raw)
        .map_err(|reason| CorpusError::MalformedRecord { line: lineno, reason })?;
    Ok((user, label, request_time))
}

fn lines<R: Read>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
}

/// Parses a labeled dataset from JSONL text. Blank lines are skipped.
pub fn parse_dataset<R: Read>(name: &str, reader: R) -> Result<LabeledDataset, CorpusError> {
    let mut entries = Vec::new();
    for (lineno, line) in lines(reader) {
        let line = line.map_err(|e| CorpusError::MalformedRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (user, label, request_time) = parse_line(&line, lineno)?;
        let label = label.ok_or_else(|| CorpusError::MalformedRecord {
            line: lineno,
            reason: "missing label".into(),
        })?;
        // Without an explicit request time, the request is taken to follow the
        // last observed activity.
        let request_time = request_time
            .unwrap_or_else(|| user.last_timestamp().unwrap_or(user.created_at));
        if request_time <= 0 {
            return Err(CorpusError::MalformedRecord {
                line: lineno,
                reason: format!("request_time must be positive, got {request_time}"),
            });
        }
        entries.push(LabeledUser { user, label, request_time });
    }
    LabeledDataset::new(name, entries)
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_dataset(&name, file)
}

pub fn save_dataset(ds: &LabeledDataset, path: &Path) -> Result<(), CorpusError> {
    crate::io::write_atomic(path, ds.to_jsonl().as_bytes()).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses unlabeled user records (a candidate stream). Labels and request
/// times, if present, are ignored; duplicates are kept for the caller to handle.
pub fn parse_users<R: Read>(reader: R) -> Result<Vec<UserRecord>, CorpusError> {
    let mut users = Vec::new();
    for (lineno, line) in lines(reader) {
        let line = line.map_err(|e| CorpusError::MalformedRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        users.push(parse_line(&line, lineno)?.0);
    }
    Ok(users)
}

pub fn load_users(path: &Path) -> Result<Vec<UserRecord>, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_users(file)
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// Per-position training membership for a stratified split of `labels`:
/// each class sends `round(count × train_fraction)` members to training
/// (halves round toward training).
pub fn stratified_mask(labels: &[Label], train_fraction: f64, seed: u64) -> Result<Vec<bool>, CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(train_fraction));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    if by_class.iter().any(|c| c.is_empty()) {
        return Err(CorpusError::SingleClass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; labels.len()];
    for members in by_class.iter_mut() {
        let take = (members.len() as f64 * train_fraction).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..take.min(members.len())] {
            in_train[i] = true;
        }
    }
    Ok(in_train)
}

/// Splits `ds` per [`stratified_mask`]. Both halves keep the parent's order.
pub fn stratified_split(
    ds: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), CorpusError> {
    let labels: Vec<Label> = ds.entries.iter().map(|e| e.label).collect();
    let in_train = stratified_mask(&labels, train_fraction, seed)?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (e, t) in ds.entries.iter().zip(in_train) {
        if t {
            train.push(e.clone());
        } else {
            test.push(e.clone());
        }
    }
    Ok((
        LabeledDataset { name: format!("{}-train", ds.name), entries: train },
        LabeledDataset { name: format!("{}-test", ds.name), entries: test },
    ))
}
