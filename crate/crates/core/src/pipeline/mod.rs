//! From grouped sessions to model-ready records: cleaning, enrichment,
//! compression, engagement balancing, user splits and feature selection.

pub mod balance;
pub mod clean;
pub mod features;
pub mod select;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use balance::{balance_and_split, engagement_bin, BalanceReport, UserSplit, N_BINS};
pub use clean::{clean, CleanConfig, CleanReport, RULES};
pub use features::{
    compress, compute_engagement, engineer, engineer_with_score, popularity_index, positional_skew, EnrichedSession,
    FeatureFamily, SessionRecord, CANDIDATE_FEATURES,
};
pub use select::{records_matrix, select_features, FeatureCatalog, FeatureEntry};

use crate::error::Result;
use crate::event_store::Sessions;

/// Enriches and compresses every session in parallel, in key order. Sessions
/// without a usable engagement label are dropped.
pub fn compress_sessions(sessions: &Sessions) -> Vec<SessionRecord> {
    let pop = popularity_index(sessions);
    let items: Vec<_> = sessions.iter().collect();
    items
        .par_iter()
        .filter_map(|(k, evs)| compress(&engineer((*evs).clone(), pop.get(&k.video_id).copied().unwrap_or(0))))
        .collect()
}

pub fn candidate_features() -> Vec<String> {
    CANDIDATE_FEATURES.iter().map(|s| s.to_string()).collect()
}

pub fn write_records(path: &Path, records: &[SessionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SessionRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<std::result::Result<Vec<SessionRecord>, _>>()?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
