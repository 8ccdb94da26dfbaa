//! The end-to-end chain: clean and compress sessions, balance and split,
//! select features, train twins, then the unified and benchmark models.

use serde::{Deserialize, Serialize};

use crate::engagement_model::{concatenate, evaluate, train_benchmark, train_unified, UnifiedModel, VariantEval};
use crate::error::Result;
use crate::event_store::Sessions;
use crate::learner::ForestConfig;
use crate::pipeline::{
    balance_and_split, candidate_features, clean, compress_sessions, select_features, BalanceReport, CleanConfig,
    CleanReport, FeatureCatalog, SessionRecord, UserSplit,
};
use crate::rng;
use crate::twin_registry::{train_twins, SensitivityDb, TuningConfig, TwinEntry};

/// Users need this many sessions after balancing.
pub const MIN_USER_SESSIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkflowConfig {
    pub clean: CleanConfig,
    pub min_user_sessions: usize,
    pub threshold: f64,
    pub forest: ForestConfig,
    pub tuning: TuningConfig<f64>,
    pub seed: u64,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        Self {
            clean: CleanConfig::default(),
            min_user_sessions: MIN_USER_SESSIONS,
            threshold: 0.02,
            forest: ForestConfig { n_trees: 60, ..ForestConfig::default() },
            tuning: TuningConfig::default(),
            seed: 0,
        }
    }
}

/// Stage seeds are derived from the run seed so stages stay independent.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    rng::derive_seed(seed, &[rng::hash_str(stage)])
}

#[derive(Debug, Clone)]
pub struct Processed {
    pub sessions: Sessions,
    pub clean_report: CleanReport,
    pub records: Vec<SessionRecord>,
    pub balance_report: BalanceReport,
    pub splits: Vec<UserSplit>,
    pub catalog: FeatureCatalog,
}

impl Processed {
    pub fn train_records(&self) -> Vec<SessionRecord> {
        self.splits.iter().flat_map(|s| s.train.iter().cloned()).collect()
    }

    pub fn test_records(&self) -> Vec<SessionRecord> {
        self.splits.iter().flat_map(|s| s.test.iter().cloned()).collect()
    }
}

/// Cleaning through feature selection. Selection sees training sessions only.
pub fn process(sessions: Sessions, cfg: &WorkflowConfig) -> Result<Processed> {
    let (sessions, clean_report) = clean(sessions, &cfg.clean);
    let records = compress_sessions(&sessions);
    let (splits, balance_report) = balance_and_split(&records, cfg.min_user_sessions, stage_seed(cfg.seed, "balance"))?;
    let train: Vec<SessionRecord> = splits.iter().flat_map(|s| s.train.iter().cloned()).collect();
    let catalog = select_features(&train, &candidate_features(), cfg.threshold, &cfg.forest, stage_seed(cfg.seed, "select"))?;
    Ok(Processed { sessions, clean_report, records, balance_report, splits, catalog })
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub features: Vec<String>,
    pub twins: Vec<TwinEntry<f64>>,
    pub db: SensitivityDb,
    pub unified: UnifiedModel,
    pub benchmark: UnifiedModel,
    pub augmented_eval: VariantEval,
    pub benchmark_eval: VariantEval,
}

pub fn train_twin_db(splits: &[UserSplit], features: &[String], cfg: &WorkflowConfig) -> Result<(Vec<TwinEntry<f64>>, SensitivityDb)> {
    let twins = train_twins::<f64>(splits, features, &cfg.tuning, stage_seed(cfg.seed, "twins"))?;
    let db = SensitivityDb::from_twins(features, &twins);
    Ok((twins, db))
}

/// Twins, sensitivities and both unified variants on the selected features.
pub fn train(p: &Processed, cfg: &WorkflowConfig) -> Result<Trained> {
    let features = p.catalog.selected();
    let (twins, db) = train_twin_db(&p.splits, &features, cfg)?;
    let train = concatenate(&p.train_records(), &features, &db)?;
    let test = concatenate(&p.test_records(), &features, &db)?;
    let seed = stage_seed(cfg.seed, "unified");
    let unified = train_unified(&train, &db, &cfg.tuning, seed)?;
    let benchmark = train_benchmark(&train, &cfg.tuning, seed)?;
    let augmented_eval = evaluate(&unified, train.len(), &test)?;
    let benchmark_eval = evaluate(&benchmark, train.len(), &test)?;
    Ok(Trained { features, twins, db, unified, benchmark, augmented_eval, benchmark_eval })
}
