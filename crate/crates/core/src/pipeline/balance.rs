//! Engagement-bin balancing and per-user train/test splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::SessionRecord;
use crate::error::{Error, Result};
use crate::rng;

pub const N_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSplit {
    pub user_id: String,
    pub train: Vec<SessionRecord>,
    pub test: Vec<SessionRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub bin_sizes: Vec<usize>,
    /// Sessions kept per bin after equalization.
    pub per_bin: usize,
    pub users_removed: Vec<String>,
    pub sessions_out: usize,
}

/// Bin index: right-open tenths, the last bin closed at 1.
pub fn engagement_bin(e: f64) -> usize {
    ((e * N_BINS as f64).floor().max(0.0) as usize).min(N_BINS - 1)
}

pub fn balance_and_split(records: &[SessionRecord], min_user_sessions: usize, seed: u64) -> Result<(Vec<UserSplit>, BalanceReport)> {
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); N_BINS];
    for (i, r) in records.iter().enumerate() {
        bins[engagement_bin(r.engagement)].push(i);
    }
    let bin_sizes: Vec<usize> = bins.iter().map(Vec::len).collect();
    if let Some(empty) = bin_sizes.iter().position(|&n| n == 0) {
        return Err(Error::config(format!(
            "engagement bin {empty} ([{:.1}, {:.1})) is empty; use fewer bins or more sessions",
            empty as f64 / N_BINS as f64,
            (empty + 1) as f64 / N_BINS as f64
        )));
    }
    let per_bin = *bin_sizes.iter().min().expect("ten bins");
    let mut kept = Vec::with_capacity(per_bin * N_BINS);
    for (b, idx) in bins.iter_mut().enumerate() {
        idx.shuffle(&mut rng::stream(seed, &[0x62616c, b as u64]));
        kept.extend_from_slice(&idx[..per_bin]);
    }
    kept.sort_unstable();

    let mut by_user: BTreeMap<&str, Vec<&SessionRecord>> = BTreeMap::new();
    for &i in &kept {
        by_user.entry(records[i].user_id.as_str()).or_default().push(&records[i]);
    }
    let mut report = BalanceReport { bin_sizes, per_bin, ..Default::default() };
    let mut splits = Vec::new();
    for (user, mut recs) in by_user {
        if recs.len() < min_user_sessions {
            report.users_removed.push(user.to_string());
            continue;
        }
        recs.shuffle(&mut rng::stream(seed, &[0x73706c, rng::hash_str(user)]));
        let n_test = recs.len() / 5;
        let test = recs[..n_test].iter().map(|r| (*r).clone()).collect();
        let train = recs[n_test..].iter().map(|r| (*r).clone()).collect();
        report.sessions_out += recs.len();
        splits.push(UserSplit { user_id: user.to_string(), train, test });
    }
    Ok((splits, report))
}
