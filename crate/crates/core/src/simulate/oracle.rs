//! Ground-truth responses of synthetic users.

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use sha2::{Digest, Sha256};

use super::population::SyntheticUser;
use crate::corpus::{Label, LabeledDataset, LabeledUser};
use crate::recommend::ContactOutcome;

/// How a user reacts to a request sent at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Response {
    pub retweeted: bool,
    /// Seconds from dispatch to retweet, at least 1.
    pub wait: Option<i64>,
}

fn response_rng(user_id: &str, dispatch_time: i64, seed: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(dispatch_time.to_le_bytes());
    h.update(user_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Retweets with probability `willingness`; the delay is exponential with
/// mean `mean_wait` seconds. Deterministic in `(user_id, dispatch_time, seed)`.
pub fn respond(user_id: &str, willingness: f64, mean_wait: f64, dispatch_time: i64, seed: u64) -> Response {
    let mut rng = response_rng(user_id, dispatch_time, seed);
    let u: f64 = rng.random();
    if u >= willingness {
        return Response { retweeted: false, wait: None };
    }
    let wait = Exp::new(1.0 / mean_wait).expect("positive mean wait").sample(&mut rng);
    Response { retweeted: true, wait: Some((wait.round() as i64).max(1)) }
}

pub fn behavior_oracle(user: &SyntheticUser, dispatch_time: i64, seed: u64) -> Response {
    respond(&user.record.user_id, user.latent_willingness, user.latent_mean_wait, dispatch_time, seed)
}

/// Contacts `user` at `dispatch_time` and records what happened.
pub fn contact(user: &SyntheticUser, dispatch_time: i64, seed: u64) -> ContactOutcome {
    let r = behavior_oracle(user, dispatch_time, seed);
    ContactOutcome {
        user_id: user.record.user_id.clone(),
        dispatched_at: dispatch_time,
        retweeted: r.retweeted,
        retweet_at: r.wait.map(|w| dispatch_time + w),
        follower_ids: r.retweeted.then(|| user.follower_ids()),
        followers_count: user.record.followers_count,
    }
}

/// Asks everyone once at `request_time` and labels them by whether they
/// retweeted at all.
pub fn probe_dataset(name: &str, users: &[SyntheticUser], request_time: i64, seed: u64) -> LabeledDataset {
    let entries = users
        .iter()
        .map(|u| LabeledUser {
            user: u.record.clone(),
            label: Label::from_bool(behavior_oracle(u, request_time, seed).retweeted),
            request_time,
        })
        .collect();
    LabeledDataset::new(name, entries).expect("generated ids are unique and nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_willingness() {
        for t in 0..200 {
            assert!(respond("u", 1.0, 100.0, t, 1).retweeted);
            assert!(!respond("u", 0.0, 100.0, t, 1).retweeted);
        }
    }

    #[test]
    fn half_willing() {
        let hits = (0..10_000).filter(|&s| respond("u", 0.5, 100.0, 0, s).retweeted).count();
        let rate = hits as f64 / 10_000.0;
        assert!((0.48..=0.52).contains(&rate), "{rate}");
    }

    #[test]
    fn deterministic_and_waits_positive() {
        let a = respond("u", 0.7, 3600.0, 55, 9);
        assert_eq!(a, respond("u", 0.7, 3600.0, 55, 9));
        let waits: Vec<i64> = (0..2000).filter_map(|s| respond("u", 1.0, 3600.0, 0, s).wait).collect();
        assert!(waits.iter().all(|&w| w >= 1));
        let mean = waits.iter().sum::<i64>() as f64 / waits.len() as f64;
        assert!((mean - 3600.0).abs() < 250.0, "{mean}");
    }
}
