//! Exponential wait-time models.
//!
//! A user's retweet delay is treated as exponential with mean equal to the
//! average of the delays observed in their timeline (original post to
//! retweet).

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::UserRecord;
use crate::HOUR;

/// Fallback mean wait when no population statistics exist.
pub const DEFAULT_FALLBACK: f64 = 12.0 * HOUR as f64;

#[derive(Debug, Error, PartialEq)]
pub enum WaitTimeError {
    #[error("deadline must be nonnegative, got {0}")]
    NegativeDeadline(f64),
    #[error("cutoff must lie in [0, 1], got {0}")]
    InvalidCutoff(f64),
    #[error("population fallback must be positive, got {0}")]
    InvalidFallback(f64),
}

impl WaitTimeError {
    pub fn code(&self) -> &'static str {
        match self {
            WaitTimeError::NegativeDeadline(_) => "NegativeDeadline",
            WaitTimeError::InvalidCutoff(_) => "InvalidCutoff",
            WaitTimeError::InvalidFallback(_) => "InvalidFallback",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitSource {
    History,
    PopulationFallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaitTimeModel {
    pub user_id: String,
    /// Mean wait in seconds, `1/λ`.
    pub mean_wait: f64,
    pub sample_count: usize,
    pub source: WaitSource,
}

/// Positive original-to-retweet delays in the user's timeline.
pub fn wait_samples(user: &UserRecord) -> Vec<f64> {
    let mut out = Vec::new();
    for m in user.timeline.iter().filter(|m| m.is_retweet) {
        let Some(orig) = m.original_timestamp else { continue };
        let wait = m.timestamp - orig;
        if wait > 0 {
            out.push(wait as f64);
        } else {
            warn!("user {}: discarding non-positive retweet wait {wait}s", user.user_id);
        }
    }
    out
}

pub fn fit_wait_time(user: &UserRecord, population_fallback: f64) -> Result<WaitTimeModel, WaitTimeError> {
    if !(population_fallback.is_finite() && population_fallback > 0.0) {
        return Err(WaitTimeError::InvalidFallback(population_fallback));
    }
    let samples = wait_samples(user);
    Ok(if samples.is_empty() {
        WaitTimeModel {
            user_id: user.user_id.clone(),
            mean_wait: population_fallback,
            sample_count: 0,
            source: WaitSource::PopulationFallback,
        }
    } else {
        WaitTimeModel {
            user_id: user.user_id.clone(),
            mean_wait: samples.iter().sum::<f64>() / samples.len() as f64,
            sample_count: samples.len(),
            source: WaitSource::History,
        }
    })
}

/// Median of the per-user mean waits of users with history, or
/// [`DEFAULT_FALLBACK`] if nobody has one.
pub fn population_fallback<'a>(users: impl IntoIterator<Item = &'a UserRecord>) -> f64 {
    let mut means: Vec<f64> = users
        .into_iter()
        .filter_map(|u| {
            let s = wait_samples(u);
            (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64)
        })
        .collect();
    if means.is_empty() {
        return DEFAULT_FALLBACK;
    }
    means.sort_by(f64::total_cmp);
    let n = means.len();
    if n % 2 == 1 {
        means[n / 2]
    } else {
        (means[n / 2 - 1] + means[n / 2]) / 2.0
    }
}

/// Exponential CDF `1 − e^{−t/mean}` for a mean wait in seconds.
pub fn prob_within_mean(mean_wait: f64, t: f64) -> Result<f64, WaitTimeError> {
    if t.is_nan() || t < 0.0 {
        return Err(WaitTimeError::NegativeDeadline(t));
    }
    Ok(-(-t / mean_wait).exp_m1())
}

impl WaitTimeModel {
    pub fn prob_within(&self, t: f64) -> Result<f64, WaitTimeError> {
        prob_within_mean(self.mean_wait, t)
    }

    pub fn passes_cutoff(&self, t: f64, c: f64) -> Result<bool, WaitTimeError> {
        if !(0.0..=1.0).contains(&c) {
            return Err(WaitTimeError::InvalidCutoff(c));
        }
        Ok(self.prob_within(t)? >= c)
    }
}

/// Parses a duration such as `24h`, `90m`, `30s` or a bare number of seconds.
pub fn parse_duration(s: &str) -> Option<i64> {
    let s = s.trim();
    let (digits, unit) = match s.char_indices().last()? {
        (i, 'h') => (&s[..i], HOUR),
        (i, 'm') => (&s[..i], 60),
        (i, 's') => (&s[..i], 1),
        _ => (s, 1),
    };
    let value: f64 = digits.parse().ok()?;
    let secs = value * unit as f64;
    (secs.is_finite() && secs >= 0.0 && secs <= i64::MAX as f64).then(|| secs.round() as i64)
}

/// Renders seconds with the largest unit that divides them evenly.
pub fn format_duration(secs: i64) -> String {
    if secs != 0 && secs % HOUR == 0 {
        format!("{}h", secs / HOUR)
    } else if secs != 0 && secs % 60 == 0 {
        format!("{}m", secs / 60)
    } else {
        format!("{secs}s")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Message;

    const MIN: f64 = 60.0;

    fn model(mean_minutes: f64) -> WaitTimeModel {
        WaitTimeModel { user_id: "u".into(), mean_wait: mean_minutes * MIN, sample_count: 1, source: WaitSource::History }
    }

    fn user_with_waits(waits: &[i64]) -> UserRecord {
        let mut u = UserRecord { user_id: "u".into(), ..Default::default() };
        u.timeline = waits
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let ts = 1_000_000 + i as i64 * 10_000;
                let mut m = Message::from_text(ts, "RT @x hello");
                m.original_timestamp = Some(ts - w);
                m
            })
            .collect();
        u
    }

    #[test]
    fn mean_of_history() {
        let u = user_with_waits(&[3600, 7200, 10800]);
        let m = fit_wait_time(&u, 1.0).unwrap();
        assert_eq!(m.mean_wait, 7200.0);
        assert_eq!(m.sample_count, 3);
        assert_eq!(m.source, WaitSource::History);
    }

    #[test]
    fn negative_wait_filtered() {
        let waits = [100, 200, -50, 300, 400, 500, 600];
        let u = user_with_waits(&waits);
        let valid: Vec<f64> = waits.iter().filter(|&&w| w > 0).map(|&w| w as f64).collect();
        let m = fit_wait_time(&u, 1.0).unwrap();
        assert_eq!(m.sample_count, 6);
        assert_eq!(m.mean_wait, valid.iter().sum::<f64>() / 6.0);
    }

    #[test]
    fn fallback() {
        let mut u = UserRecord::default();
        u.timeline.push(Message::from_text(5, "plain"));
        let m = fit_wait_time(&u, 42.0).unwrap();
        assert_eq!((m.mean_wait, m.sample_count, m.source), (42.0, 0, WaitSource::PopulationFallback));
        assert_eq!(fit_wait_time(&u, 0.0).unwrap_err().code(), "InvalidFallback");
        assert_eq!(population_fallback([&u]), DEFAULT_FALLBACK);
        let a = user_with_waits(&[100]);
        let b = user_with_waits(&[300]);
        assert_eq!(population_fallback([&a, &b, &u]), 200.0);
    }

    #[test]
    fn cdf_values() {
        assert_eq!(model(60.0).prob_within(0.0).unwrap(), 0.0);
        assert!((model(180.0).prob_within(200.0 * MIN).unwrap() - 0.6708).abs() < 1e-4);
        assert!((model(60.0).prob_within(60.0 * MIN).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(model(60.0).prob_within(-1.0).unwrap_err().code(), "NegativeDeadline");
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("24h"), Some(86_400));
        assert_eq!(parse_duration("90m"), Some(5_400));
        assert_eq!(parse_duration("30s"), Some(30));
        assert_eq!(parse_duration("1.5h"), Some(5_400));
        assert_eq!(parse_duration("3600"), Some(3_600));
        assert_eq!(parse_duration("-1h"), None);
        assert_eq!(parse_duration("h"), None);
        assert_eq!(parse_duration(""), None);
        assert_eq!(format_duration(86_400), "24h");
        assert_eq!(format_duration(90), "90s");
        assert_eq!(format_duration(120), "2m");
    }

    #[test]
    fn cutoff() {
        assert!(model(180.0).passes_cutoff(0.0, 0.0).unwrap());
        assert!(!model(180.0).passes_cutoff(200.0 * MIN, 0.7).unwrap());
        assert!(model(100.0).passes_cutoff(200.0 * MIN, 0.7).unwrap());
        assert_eq!(model(1.0).passes_cutoff(1.0, 1.5).unwrap_err().code(), "InvalidCutoff");
    }
}
