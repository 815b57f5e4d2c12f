//! Top-N ranking under a deadline, and campaign outcome metrics.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::waittime::{prob_within_mean, WaitTimeError};

/// Cut-off probability used by default for deadline filtering.
pub const DEFAULT_CUTOFF: f64 = 0.7;

#[derive(Debug, Error, PartialEq)]
pub enum RecommendError {
    #[error("no contact outcomes")]
    EmptyOutcomes,
    #[error("cutoff must lie in [0, 1], got {0}")]
    InvalidCutoff(f64),
    #[error(transparent)]
    WaitTime(#[from] WaitTimeError),
}

impl RecommendError {
    pub fn code(&self) -> &'static str {
        match self {
            RecommendError::EmptyOutcomes => "EmptyOutcomes",
            RecommendError::InvalidCutoff(_) => "InvalidCutoff",
            RecommendError::WaitTime(e) => e.code(),
        }
    }
}

/// What the ranker needs to know about a candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateInput {
    pub user_id: String,
    pub retweet_probability: f64,
    pub followers_count: u64,
    /// Seconds.
    pub mean_wait: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub user_id: String,
    pub retweet_probability: f64,
    pub prob_within_deadline: f64,
    pub followers_count: u64,
    pub mean_wait: f64,
    pub eligible: bool,
}

/// Scores candidates against deadline `t` (seconds) and cutoff `c`, in input order.
pub fn score_candidates(candidates: &[CandidateInput], t: f64, c: f64) -> Result<Vec<ScoredCandidate>, RecommendError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(RecommendError::InvalidCutoff(c));
    }
    candidates
        .iter()
        .map(|cand| {
            let p = prob_within_mean(cand.mean_wait, t)?;
            Ok(ScoredCandidate {
                user_id: cand.user_id.clone(),
                retweet_probability: cand.retweet_probability,
                prob_within_deadline: p,
                followers_count: cand.followers_count,
                mean_wait: cand.mean_wait,
                eligible: p >= c,
            })
        })
        .collect()
}

/// Ranking order: retweet probability descending, then deadline probability
/// descending, then user id ascending.
pub fn ranking_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.retweet_probability
        .total_cmp(&a.retweet_probability)
        .then(b.prob_within_deadline.total_cmp(&a.prob_within_deadline))
        .then_with(|| a.user_id.cmp(&b.user_id))
}

/// The `n` best candidates whose probability of acting within `t` is at least `c`.
pub fn rank_candidates(candidates: &[CandidateInput], t: f64, c: f64, n: usize) -> Result<Vec<ScoredCandidate>, RecommendError> {
    let mut scored: Vec<ScoredCandidate> = score_candidates(candidates, t, c)?.into_iter().filter(|s| s.eligible).collect();
    scored.sort_by(ranking_order);
    scored.truncate(n);
    Ok(scored)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactOutcome {
    pub user_id: String,
    pub dispatched_at: i64,
    pub retweeted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_at: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follower_ids: Option<BTreeSet<String>>,
    pub followers_count: u64,
}

impl ContactOutcome {
    /// Retweeted, and within `window` seconds of dispatch when a window is given.
    pub fn counts_within(&self, window: Option<i64>) -> bool {
        match (self.retweeted, window, self.retweet_at) {
            (false, _, _) => false,
            (true, None, _) => true,
            (true, Some(w), Some(at)) => at - self.dispatched_at <= w,
            (true, Some(_), None) => false,
        }
    }
}

/// Share of contacted users who retweeted (within `window` seconds if given).
pub fn retweeting_rate(outcomes: &[ContactOutcome], window: Option<i64>) -> Result<f64, RecommendError> {
    if outcomes.is_empty() {
        return Err(RecommendError::EmptyOutcomes);
    }
    Ok(outcomes.iter().filter(|o| o.counts_within(window)).count() as f64 / outcomes.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachMode {
    /// Distinct followers when every retweeter's follower set is known,
    /// otherwise the plain sum.
    Auto,
    /// Plain sum of follower counts.
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoReach {
    pub value: f64,
    /// True when distinct followers were counted.
    pub overlap_adjusted: bool,
}

/// Followers reached by retweeters per contacted user.
pub fn unit_info_reach(outcomes: &[ContactOutcome], mode: ReachMode) -> Result<InfoReach, RecommendError> {
    if outcomes.is_empty() {
        return Err(RecommendError::EmptyOutcomes);
    }
    let n = outcomes.len() as f64;
    let retweeters: Vec<&ContactOutcome> = outcomes.iter().filter(|o| o.retweeted).collect();
    let all_known = retweeters.iter().all(|o| o.follower_ids.is_some());
    if mode == ReachMode::Auto && all_known {
        let union: BTreeSet<&String> = retweeters.iter().flat_map(|o| o.follower_ids.iter().flatten()).collect();
        return Ok(InfoReach { value: union.len() as f64 / n, overlap_adjusted: true });
    }
    let sum: u64 = retweeters.iter().map(|o| o.followers_count).sum();
    Ok(InfoReach { value: sum as f64 / n, overlap_adjusted: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: &str, p: f64, mean_wait: f64) -> CandidateInput {
        CandidateInput { user_id: id.into(), retweet_probability: p, followers_count: 10, mean_wait }
    }

    fn outcome(id: &str, retweet_after: Option<i64>, followers: Option<&[u32]>) -> ContactOutcome {
        ContactOutcome {
            user_id: id.into(),
            dispatched_at: 1000,
            retweeted: retweet_after.is_some(),
            retweet_at: retweet_after.map(|d| 1000 + d),
            follower_ids: followers.map(|f| f.iter().map(|i| i.to_string()).collect()),
            followers_count: followers.map_or(0, |f| f.len() as u64),
        }
    }

    #[test]
    fn empty_ranking() {
        assert!(rank_candidates(&[], 10.0, 0.7, 5).unwrap().is_empty());
    }

    #[test]
    fn filter_then_rank() {
        let day = 86_400.0;
        let cands = vec![
            cand("a", 0.9, 10.0 * day), // fails cutoff
            cand("b", 0.4, 3600.0),
            cand("c", 0.8, 3600.0),
            cand("d", 0.95, 20.0 * day), // fails cutoff
            cand("e", 0.6, 7200.0),
        ];
        let ranked = rank_candidates(&cands, day, 0.7, 2).unwrap();
        let ids: Vec<&str> = ranked.iter().map(|s| s.user_id.as_str()).collect();
        assert_eq!(ids, ["c", "e"]);
        assert!(ranked.iter().all(|s| s.eligible && s.prob_within_deadline >= 0.7));
    }

    #[test]
    fn tie_breaks() {
        let cands = vec![cand("z", 0.5, 100.0), cand("y", 0.5, 50.0), cand("x", 0.5, 50.0)];
        let ranked = rank_candidates(&cands, 100.0, 0.0, 10).unwrap();
        let ids: Vec<&str> = ranked.iter().map(|s| s.user_id.as_str()).collect();
        assert_eq!(ids, ["x", "y", "z"]);
    }

    #[test]
    fn rates() {
        let mut outcomes: Vec<ContactOutcome> = (0..1902).map(|i| outcome(&i.to_string(), None, None)).collect();
        for o in outcomes.iter_mut().take(52) {
            o.retweeted = true;
            o.retweet_at = Some(2000);
        }
        let r = retweeting_rate(&outcomes, None).unwrap();
        assert!((r - 0.0273).abs() < 1e-4);

        let late = [outcome("a", Some(25 * 3600), None)];
        assert_eq!(retweeting_rate(&late, Some(24 * 3600)).unwrap(), 0.0);
        assert_eq!(retweeting_rate(&late, None).unwrap(), 1.0);
        assert_eq!(retweeting_rate(&[], None).unwrap_err(), RecommendError::EmptyOutcomes);
    }

    #[test]
    fn reach() {
        let big: Vec<u32> = (0..100).collect();
        let small: Vec<u32> = (100..150).collect();
        let mut outcomes = vec![outcome("a", Some(1), Some(&big)), outcome("b", Some(1), Some(&small))];
        outcomes.extend((0..8).map(|i| outcome(&format!("n{i}"), None, None)));
        assert_eq!(unit_info_reach(&outcomes, ReachMode::Auto).unwrap(), InfoReach { value: 15.0, overlap_adjusted: true });

        let mut overlap = vec![outcome("a", Some(1), Some(&[1, 2, 3])), outcome("b", Some(1), Some(&[3, 4]))];
        overlap.extend((0..3).map(|i| outcome(&format!("n{i}"), None, None)));
        assert_eq!(unit_info_reach(&overlap, ReachMode::Auto).unwrap().value, 0.8);
        assert_eq!(unit_info_reach(&overlap, ReachMode::Sum).unwrap().value, 1.0);

        let nobody = [outcome("a", None, None)];
        assert_eq!(unit_info_reach(&nobody, ReachMode::Auto).unwrap().value, 0.0);

        let mut unknown = overlap.clone();
        unknown[0].follower_ids = None;
        assert!(!unit_info_reach(&unknown, ReachMode::Auto).unwrap().overlap_adjusted);
    }
}
