//! Campaign definitions and the events that make up a campaign's log.

use propagate_core::corpus::UserRecord;
use propagate_core::recommend::DEFAULT_CUTOFF;
use propagate_core::waittime::parse_duration;
use propagate_core::DAY;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::ServiceError;

pub const USER_PLACEHOLDER: &str = "{user}";
pub const DEFAULT_MESSAGE_LIMIT: usize = 280;
pub const DEFAULT_TOP_N: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignDefinition {
    /// Keywords; a candidate qualifies when any timeline message contains one.
    pub topics: Vec<String>,
    /// Request text with a `{user}` placeholder.
    pub template: String,
    pub model_id: String,
    /// Seconds; a duration string such as `24h` is accepted on input.
    #[serde(default = "default_deadline", deserialize_with = "deadline_seconds")]
    pub deadline: i64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default = "default_message_limit")]
    pub message_limit: usize,
}

fn default_deadline() -> i64 {
    DAY
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

fn default_top_n() -> usize {
    DEFAULT_TOP_N
}

fn default_message_limit() -> usize {
    DEFAULT_MESSAGE_LIMIT
}

fn deadline_seconds<'de, D: Deserializer<'de>>(d: D) -> Result<i64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Seconds(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Seconds(s) => Ok(s),
        Raw::Text(t) => parse_duration(&t).ok_or_else(|| serde::de::Error::custom(format!("invalid duration {t:?}"))),
    }
}

impl CampaignDefinition {
    pub fn new(topics: &[&str], template: &str, model_id: &str) -> Self {
        CampaignDefinition {
            topics: topics.iter().map(|t| t.to_string()).collect(),
            template: template.to_string(),
            model_id: model_id.to_string(),
            deadline: DAY,
            cutoff: DEFAULT_CUTOFF,
            top_n: DEFAULT_TOP_N,
            message_limit: DEFAULT_MESSAGE_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if !self.template.contains(USER_PLACEHOLDER) {
            return Err(ServiceError::InvalidTemplate(format!("template must contain {USER_PLACEHOLDER}")));
        }
        let length = self.template.chars().count();
        if length > self.message_limit {
            return Err(ServiceError::InvalidTemplate(format!("{length} characters exceeds the limit of {}", self.message_limit)));
        }
        let bad = |m: &str| Err(ServiceError::InvalidCampaign(m.to_string()));
        if self.topics.is_empty() || self.topics.iter().any(|t| t.trim().is_empty()) {
            return bad("topics must be non-empty keywords");
        }
        if self.deadline <= 0 {
            return bad("deadline must be positive");
        }
        if !(0.0..=1.0).contains(&self.cutoff) {
            return bad("cutoff must lie in [0, 1]");
        }
        if self.top_n == 0 {
            return bad("top_n must be at least 1");
        }
        if self.message_limit == 0 {
            return bad("message_limit must be at least 1");
        }
        Ok(())
    }

    /// Case-insensitive keyword match against the timeline text.
    pub fn matches(&self, user: &UserRecord) -> bool {
        let topics: Vec<String> = self.topics.iter().map(|t| t.to_lowercase()).collect();
        user.timeline.iter().any(|m| {
            let text = m.text.to_lowercase();
            topics.iter().any(|t| text.contains(t.as_str()))
        })
    }
}

/// Replaces every `{user}` with `@screen_name`.
pub fn render_message(message: &str, screen_name: &str) -> String {
    message.replace(USER_PLACEHOLDER, &format!("@{screen_name}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Created {
        definition: CampaignDefinition,
    },
    /// A qualifying candidate with the scores computed when it arrived.
    CandidateSeen {
        user: UserRecord,
        retweet_probability: f64,
        /// Seconds.
        mean_wait: f64,
    },
    Dispatched {
        user_id: String,
        message: String,
    },
    RetweetObserved {
        user_id: String,
        observed_at: i64,
    },
    Closed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignEvent {
    /// 1-based and gapless within a campaign.
    pub seq: u64,
    pub timestamp: i64,
    pub campaign_id: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definition_defaults_and_durations() {
        let d: CampaignDefinition =
            serde_json::from_str(r#"{"topics":["flu"],"template":"{user} please share","model_id":"m"}"#).unwrap();
        assert_eq!((d.deadline, d.cutoff, d.top_n, d.message_limit), (86_400, 0.7, 10, 280));
        let d: CampaignDefinition =
            serde_json::from_str(r#"{"topics":["flu"],"template":"{user}","model_id":"m","deadline":"90m"}"#).unwrap();
        assert_eq!(d.deadline, 5_400);
        assert!(serde_json::from_str::<CampaignDefinition>(r#"{"topics":[],"template":"x","model_id":"m","extra":1}"#).is_err());
    }

    #[test]
    fn validation() {
        let ok = CampaignDefinition::new(&["flu"], "Hi {user}, please retweet", "m");
        ok.validate().unwrap();
        let no_placeholder = CampaignDefinition { template: "please retweet".into(), ..ok.clone() };
        assert_eq!(no_placeholder.validate().unwrap_err().code(), "InvalidTemplate");
        let long = CampaignDefinition { template: format!("{{user}}{}", "x".repeat(280)), ..ok.clone() };
        assert_eq!(long.validate().unwrap_err().code(), "InvalidTemplate");
        let cutoff = CampaignDefinition { cutoff: 1.5, ..ok.clone() };
        assert_eq!(cutoff.validate().unwrap_err().code(), "InvalidCampaign");
        let top = CampaignDefinition { top_n: 0, ..ok };
        assert_eq!(top.validate().unwrap_err().code(), "InvalidCampaign");
    }

    #[test]
    fn rendering() {
        assert_eq!(render_message("{user} pls RT, thanks {user}", "ann"), "@ann pls RT, thanks @ann");
    }

    #[test]
    fn event_json_shape() {
        let e = CampaignEvent {
            seq: 3,
            timestamp: 10,
            campaign_id: "c".into(),
            kind: EventKind::RetweetObserved { user_id: "u".into(), observed_at: 12 },
        };
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"seq":3,"timestamp":10,"campaign_id":"c","kind":"retweet_observed","user_id":"u","observed_at":12}"#);
        assert_eq!(serde_json::from_str::<CampaignEvent>(&s).unwrap(), e);
    }
}
