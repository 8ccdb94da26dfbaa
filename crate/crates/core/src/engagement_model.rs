//! The unified engagement model: session features joined with the user's
//! sensitivity vector, its no-sensitivity benchmark, horizon-limited
//! evaluation, threshold sweeps and classification-style metric adapters.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::event_store::{SessionKey, Sessions};
use crate::learner::stats::pearson;
use crate::learner::{metrics, FeatureMatrix, GbdtConfig, Metrics, TreeEnsemble};
use crate::pipeline::{
    compress, engagement_bin, engineer, popularity_index, records_matrix, write_json, FeatureCatalog, SessionRecord,
    UserSplit,
};
use crate::twin_registry::{train_twins, tune_and_fit, SensitivityDb, TuningConfig};

pub const SENS_PREFIX: &str = "sens_";
pub const MIN_UNIFIED_ROWS: usize = 200;
pub const EVAL_SCHEMA: &str = "digitwise.eval-report/1";
pub const MODEL_SCHEMA: &str = "digitwise.unified-model/1";
pub const DEFAULT_HORIZONS: &str = "10s,30s,1m,2m,3m,5m,7m,10m,full";
/// Videos need this many sessions to enter the quit-rate correlation.
pub const QUIT50_MIN_SESSIONS: usize = 10;

pub fn sens_column(feature: &str) -> String {
    format!("{SENS_PREFIX}{feature}")
}

/// Records joined with their user's sensitivities. Identifiers are kept
/// beside the matrix, never in it.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedTable {
    pub features: Vec<String>,
    pub sensitivity_columns: Vec<String>,
    /// Columns are `features` followed by `sensitivity_columns`.
    pub x: FeatureMatrix<f64>,
    pub y: Vec<f64>,
    pub video_ids: Vec<String>,
    pub session_ids: Vec<String>,
}

impl AugmentedTable {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// The same rows without the sensitivity columns.
    pub fn benchmark_matrix(&self) -> FeatureMatrix<f64> {
        self.x.project(&self.features).expect("feature columns are present")
    }
}

pub fn concatenate(records: &[SessionRecord], features: &[String], db: &SensitivityDb) -> Result<AugmentedTable> {
    let missing: BTreeSet<&str> =
        records.iter().map(|r| r.user_id.as_str()).filter(|u| db.get(u).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::UnknownUsers(missing.into_iter().map(String::from).collect()));
    }
    let base = records_matrix(records, features)?;
    let sens: Vec<String> = db.features.iter().map(|f| sens_column(f)).collect();
    if let Some(clash) = sens.iter().find(|c| features.contains(c)) {
        return Err(Error::schema(format!("column `{clash}` is both a feature and a sensitivity")));
    }
    let width = features.len() + sens.len();
    let mut data = Vec::with_capacity(records.len() * width);
    for (i, r) in records.iter().enumerate() {
        data.extend_from_slice(base.row(i));
        data.extend(db.get(&r.user_id).expect("checked above").weights.values().copied());
    }
    let mut names = features.to_vec();
    names.extend(sens.iter().cloned());
    Ok(AugmentedTable {
        features: features.to_vec(),
        sensitivity_columns: sens,
        x: FeatureMatrix::new(names, data)?,
        y: records.iter().map(|r| r.engagement).collect(),
        video_ids: records.iter().map(|r| r.video_id.clone()).collect(),
        session_ids: records.iter().map(|r| r.session_id.clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Augmented,
    Benchmark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnifiedModel {
    pub schema: String,
    pub variant: Variant,
    pub features: Vec<String>,
    /// Sensitivity feature names (unprefixed); empty for the benchmark.
    pub sensitivity_features: Vec<String>,
    pub config: GbdtConfig<f64>,
    pub model: TreeEnsemble<f64>,
}

impl UnifiedModel {
    /// Clamped predictions for a table, matching columns by name.
    pub fn predict_table(&self, table: &AugmentedTable) -> Result<Vec<f64>> {
        Ok(self.model.predict_matrix(&table.x)?.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    pub fn predict_records(&self, records: &[SessionRecord], db: &SensitivityDb) -> Result<Vec<f64>> {
        if self.variant == Variant::Augmented && db.features != self.sensitivity_features {
            return Err(Error::schema("sensitivity db features differ from the ones the model was trained with"));
        }
        self.predict_table(&concatenate(records, &self.features, db)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: UnifiedModel = crate::pipeline::read_json(path)?;
        if m.schema != MODEL_SCHEMA {
            return Err(Error::schema(format!("unsupported model schema `{}`", m.schema)));
        }
        Ok(m)
    }
}

fn fit_variant(
    x: &FeatureMatrix<f64>,
    y: &[f64],
    table: &AugmentedTable,
    variant: Variant,
    sensitivity_features: Vec<String>,
    tuning: &TuningConfig<f64>,
    seed: u64,
) -> Result<UnifiedModel> {
    if y.len() < MIN_UNIFIED_ROWS {
        return Err(Error::config(format!("unified model needs at least {MIN_UNIFIED_ROWS} rows, got {}", y.len())));
    }
    let (model, config) = tune_and_fit(x, y, tuning, seed)?;
    Ok(UnifiedModel {
        schema: MODEL_SCHEMA.into(),
        variant,
        features: table.features.clone(),
        sensitivity_features,
        config,
        model,
    })
}

pub fn train_unified(table: &AugmentedTable, db: &SensitivityDb, tuning: &TuningConfig<f64>, seed: u64) -> Result<UnifiedModel> {
    fit_variant(&table.x, &table.y, table, Variant::Augmented, db.features.clone(), tuning, seed)
}

/// Same rows, order, search and seed as [`train_unified`], minus the
/// sensitivity columns.
pub fn train_benchmark(table: &AugmentedTable, tuning: &TuningConfig<f64>, seed: u64) -> Result<UnifiedModel> {
    fit_variant(&table.benchmark_matrix(), &table.y, table, Variant::Benchmark, Vec::new(), tuning, seed)
}

/// Fraction of pairs landing in the same tenth of engagement.
pub fn bin10_accuracy(y_true: &[f64], y_pred: &[f64]) -> f64 {
    agreement(y_true, y_pred, |t, p| engagement_bin(t.clamp(0.0, 1.0)) == engagement_bin(p.clamp(0.0, 1.0)))
}

/// Fraction of pairs on the same side of `tau` (`>= tau` is positive).
pub fn binary_at_threshold(y_true: &[f64], y_pred: &[f64], tau: f64) -> f64 {
    agreement(y_true, y_pred, |t, p| (t >= tau) == (p >= tau))
}

fn agreement(y_true: &[f64], y_pred: &[f64], same: impl Fn(f64, f64) -> bool) -> f64 {
    assert_eq!(y_true.len(), y_pred.len(), "truth and predictions differ in length");
    if y_true.is_empty() {
        return 0.0;
    }
    y_true.iter().zip(y_pred).filter(|(t, p)| same(**t, **p)).count() as f64 / y_true.len() as f64
}

/// Pearson correlation, across videos with at least `min_sessions` sessions,
/// between the true and predicted share of sessions below 0.5 engagement.
/// `None` with fewer than three such videos or no spread.
pub fn quit50_pcc(video_ids: &[String], y_true: &[f64], y_pred: &[f64], min_sessions: usize) -> Option<f64> {
    assert!(video_ids.len() == y_true.len() && y_true.len() == y_pred.len(), "inputs differ in length");
    let mut per_video: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for ((v, t), p) in video_ids.iter().zip(y_true).zip(y_pred) {
        let e = per_video.entry(v.as_str()).or_default();
        e.0 += 1;
        e.1 += (*t < 0.5) as usize;
        e.2 += (*p < 0.5) as usize;
    }
    let (a, b): (Vec<f64>, Vec<f64>) = per_video
        .values()
        .filter(|c| c.0 >= min_sessions)
        .map(|&(n, t, p)| (t as f64 / n as f64, p as f64 / n as f64))
        .unzip();
    if a.len() < 3 {
        return None;
    }
    pearson(&a, &b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantEval {
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Metrics<f64>,
    pub bin10_accuracy: f64,
    pub binary70_accuracy: f64,
    pub quit50_pcc: Option<f64>,
}

pub fn evaluate(model: &UnifiedModel, train_rows: usize, test: &AugmentedTable) -> Result<VariantEval> {
    let pred = model.predict_table(test)?;
    Ok(VariantEval {
        n_train: train_rows,
        n_test: test.len(),
        metrics: metrics(&test.y, &pred)?,
        bin10_accuracy: bin10_accuracy(&test.y, &pred),
        binary70_accuracy: binary_at_threshold(&test.y, &pred, 0.7),
        quit50_pcc: quit50_pcc(&test.video_ids, &test.y, &pred, QUIT50_MIN_SESSIONS),
    })
}

/// How much of each session the predictors may see.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Seconds(f64),
    Full,
}

impl Horizon {
    pub fn seconds(self) -> Option<f64> {
        match self {
            Horizon::Seconds(s) => Some(s),
            Horizon::Full => None,
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "full" || s == "inf" {
            return Ok(Horizon::Full);
        }
        let (num, scale) = if let Some(n) = s.strip_suffix("ms") {
            (n, 0.001)
        } else if let Some(n) = s.strip_suffix('s') {
            (n, 1.0)
        } else if let Some(n) = s.strip_suffix('m') {
            (n, 60.0)
        } else if let Some(n) = s.strip_suffix('h') {
            (n, 3600.0)
        } else {
            (s.as_str(), 1.0)
        };
        match num.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Horizon::Seconds(v * scale)),
            _ => Err(Error::config(format!("bad horizon `{s}`; use e.g. 10s, 2m or full"))),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Horizon::Full => f.write_str("full"),
            Horizon::Seconds(s) if s >= 60.0 && s % 60.0 == 0.0 => write!(f, "{}m", s / 60.0),
            Horizon::Seconds(s) => write!(f, "{s}s"),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub fn parse_horizons(list: &str) -> Result<Vec<Horizon>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Records compressed from the first `horizon` of each session.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonDataset {
    pub horizon: Horizon,
    pub records: Vec<SessionRecord>,
    pub dropped: usize,
}

/// Recompresses `keys` using only events within `horizon` of each session's
/// first event. Labels come from `labels` (full-session engagement). The
/// popularity index is taken from the whole corpus.
pub fn truncate_horizon(
    sessions: &Sessions,
    keys: &[SessionKey],
    labels: &HashMap<SessionKey, f64>,
    horizon: Horizon,
) -> HorizonDataset {
    use rayon::prelude::*;
    let pop = popularity_index(sessions);
    let out: Vec<Option<SessionRecord>> = keys
        .par_iter()
        .map(|k| {
            let events = sessions.get(k)?;
            let start = events.iter().map(|e| e.client_time).min()?;
            let kept: Vec<_> = match horizon.seconds() {
                None => events.clone(),
                Some(t) => {
                    let limit = (t * 1000.0).round() as i64;
                    events.iter().filter(|e| e.client_time - start <= limit).cloned().collect()
                }
            };
            if kept.is_empty() {
                return None;
            }
            let mut enriched = engineer(kept, pop.get(&k.video_id).copied().unwrap_or(0));
            enriched.engagement = Some(*labels.get(k)?);
            compress(&enriched)
        })
        .collect();
    let dropped = out.iter().filter(|r| r.is_none()).count();
    HorizonDataset { horizon, records: out.into_iter().flatten().collect(), dropped }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonEval {
    pub horizon: Horizon,
    pub dropped: usize,
    pub augmented: VariantEval,
    pub benchmark: VariantEval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub seed: u64,
    pub features: Vec<String>,
    pub sensitivity_features: Vec<String>,
    pub horizons: Vec<HorizonEval>,
}

/// Trains and scores both variants on one train/test pair.
pub fn compare_variants(
    train: &[SessionRecord],
    test: &[SessionRecord],
    features: &[String],
    db: &SensitivityDb,
    tuning: &TuningConfig<f64>,
    seed: u64,
) -> Result<(VariantEval, VariantEval)> {
    let tr = concatenate(train, features, db)?;
    let te = concatenate(test, features, db)?;
    let aug = train_unified(&tr, db, tuning, seed)?;
    let bench = train_benchmark(&tr, tuning, seed)?;
    Ok((evaluate(&aug, tr.len(), &te)?, evaluate(&bench, tr.len(), &te)?))
}

/// Scores both variants at every horizon. Train and test membership comes
/// from `splits`; sensitivities stay those of the full-session twins.
pub fn evaluate_horizons(
    sessions: &Sessions,
    splits: &[UserSplit],
    features: &[String],
    db: &SensitivityDb,
    horizons: &[Horizon],
    tuning: &TuningConfig<f64>,
    seed: u64,
) -> Result<EvalReport> {
    let labels: HashMap<SessionKey, f64> =
        splits.iter().flat_map(|s| s.train.iter().chain(&s.test)).map(|r| (r.key(), r.engagement)).collect();
    let train_keys: Vec<SessionKey> = splits.iter().flat_map(|s| s.train.iter().map(SessionRecord::key)).collect();
    let test_keys: Vec<SessionKey> = splits.iter().flat_map(|s| s.test.iter().map(SessionRecord::key)).collect();
    let mut out = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let train = truncate_horizon(sessions, &train_keys, &labels, h);
        let test = truncate_horizon(sessions, &test_keys, &labels, h);
        let (augmented, benchmark) = compare_variants(&train.records, &test.records, features, db, tuning, seed)?;
        out.push(HorizonEval { horizon: h, dropped: train.dropped + test.dropped, augmented, benchmark });
    }
    Ok(EvalReport {
        schema: EVAL_SCHEMA.into(),
        seed,
        features: features.to_vec(),
        sensitivity_features: db.features.clone(),
        horizons: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub threshold: f64,
    pub n_features: usize,
    pub features: Vec<String>,
    pub train_seconds: f64,
    pub test_mae: Option<f64>,
    /// Why this threshold produced no model.
    pub error: Option<String>,
}

/// Reruns twins and the unified model for each threshold on a fitted catalog.
/// Results are in ascending threshold order.
pub fn threshold_sweep(
    catalog: &FeatureCatalog,
    splits: &[UserSplit],
    thresholds: &[f64],
    tuning: &TuningConfig<f64>,
    seed: u64,
) -> Vec<SweepEntry> {
    let mut ts = thresholds.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let train: Vec<SessionRecord> = splits.iter().flat_map(|s| s.train.iter().cloned()).collect();
    let test: Vec<SessionRecord> = splits.iter().flat_map(|s| s.test.iter().cloned()).collect();
    ts.into_iter()
        .map(|threshold| {
            let features = catalog.with_threshold(threshold).selected();
            let started = Instant::now();
            let run = || -> Result<f64> {
                if features.is_empty() {
                    return Err(Error::config(format!("no feature reaches threshold {threshold}")));
                }
                let twins = train_twins::<f64>(splits, &features, tuning, seed)?;
                let db = SensitivityDb::from_twins(&features, &twins);
                let tr = concatenate(&train, &features, &db)?;
                let te = concatenate(&test, &features, &db)?;
                let model = train_unified(&tr, &db, tuning, seed)?;
                Ok(evaluate(&model, tr.len(), &te)?.metrics.mae)
            };
            let result = run();
            SweepEntry {
                threshold,
                n_features: features.len(),
                features,
                train_seconds: started.elapsed().as_secs_f64(),
                test_mae: result.as_ref().ok().copied(),
                error: result.err().map(|e| e.to_string()),
            }
        })
        .collect()
}

/// CSVs for external plotting: MAE against horizon and against threshold.
pub fn write_plot_data(dir: &Path, report: &EvalReport, sweep: Option<&[SweepEntry]>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("mae_vs_horizon.csv"))?;
    w.write_record(["horizon", "seconds", "augmented_mae", "benchmark_mae"])?;
    for h in &report.horizons {
        w.write_record([
            h.horizon.to_string(),
            h.horizon.seconds().map(|s| s.to_string()).unwrap_or_default(),
            h.augmented.metrics.mae.to_string(),
            h.benchmark.metrics.mae.to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(sweep) = sweep {
        let mut w = csv::Writer::from_path(dir.join("mae_vs_threshold.csv"))?;
        w.write_record(["threshold", "n_features", "test_mae", "train_seconds"])?;
        for s in sweep {
            w.write_record([
                s.threshold.to_string(),
                s.n_features.to_string(),
                s.test_mae.map(|m| m.to_string()).unwrap_or_default(),
                s.train_seconds.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Session ids seen in training by any model in `tables`, for leakage audits.
pub fn session_ids(tables: &[&AugmentedTable]) -> HashSet<String> {
    tables.iter().flat_map(|t| t.session_ids.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twin_registry::SensitivityVector;

    fn record(user: &str, session: &str, stalls: u32, e: f64) -> SessionRecord {
        SessionRecord {
            user_id: user.into(),
            video_id: "v".into(),
            session_id: session.into(),
            hour_of_day: 0,
            popularity: 0.0,
            screen_size: None,
            video_duration: 600.0,
            startup_delay: 1.0,
            play_time: 60.0,
            stall_count: stalls,
            stall_duration_mean: None,
            stall_duration_std: None,
            stall_duration_skew: None,
            bitrate_mean: Some(1000.0),
            bitrate_std: None,
            switch_count: 0,
            switch_magnitude_mean: None,
            switch_skew: None,
            seek_count: 0,
            pause_count: 0,
            latency_mean: None,
            engagement: e,
        }
    }

    fn db3() -> SensitivityDb {
        let feats: Vec<String> = ["stall_count", "bitrate_mean", "video_duration"].map(String::from).to_vec();
        let mut db = SensitivityDb::new(feats.clone());
        for (u, w) in [("a", [0.5, 0.3, 0.2]), ("b", [0.1, 0.1, 0.8]), ("c", [1.0, 0.0, 0.0])] {
            db.insert(SensitivityVector {
                user_id: u.into(),
                weights: feats.iter().cloned().zip(w).collect(),
                degenerate: false,
            })
            .unwrap();
        }
        db
    }

    #[test]
    fn concatenate_joins_on_user() {
        let feats = vec!["stall_count".to_string()];
        let recs = vec![record("a", "s1", 2, 0.5), record("c", "s2", 0, 0.9), record("a", "s3", 1, 0.1)];
        let t = concatenate(&recs, &feats, &db3()).unwrap();
        assert_eq!(t.x.names(), ["stall_count", "sens_stall_count", "sens_bitrate_mean", "sens_video_duration"]);
        assert_eq!(t.x.row(0), [2.0, 0.5, 0.3, 0.2]);
        assert_eq!(t.x.row(1), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(t.x.row(0)[1..], t.x.row(2)[1..]);
        assert_eq!(t.y, vec![0.5, 0.9, 0.1]);
        assert_eq!(t.benchmark_matrix().names(), ["stall_count"]);
    }

    #[test]
    fn concatenate_lists_unknown_users() {
        let recs = vec![record("zed", "s1", 0, 0.5), record("a", "s2", 0, 0.5), record("yan", "s3", 0, 0.5)];
        match concatenate(&recs, &["stall_count".to_string()], &db3()) {
            Err(Error::UnknownUsers(u)) => assert_eq!(u, vec!["yan", "zed"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bin10_examples() {
        let t = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 1.0];
        assert_eq!(bin10_accuracy(&t, &t), 1.0);
        assert_eq!(bin10_accuracy(&[0.51], &[0.49]), 0.0);
        // three predictions pushed into a neighbouring bin
        let mut p = t;
        p[0] = 0.11;
        p[4] = 0.39;
        p[9] = 0.89;
        assert_eq!(bin10_accuracy(&t, &p), 0.7);
        // out-of-range predictions are clamped into the end bins
        assert_eq!(bin10_accuracy(&[0.0, 1.0], &[-0.2, 1.3]), 1.0);
    }

    #[test]
    fn binary_examples() {
        assert_eq!(binary_at_threshold(&[0.75], &[0.65], 0.7), 0.0);
        assert_eq!(binary_at_threshold(&[0.7, 0.1], &[0.99, 0.69], 0.7), 1.0);
        let t = [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9];
        let p = [0.6, 0.2, 0.3, 0.5, 0.4, 0.7, 0.8, 0.9];
        // misses at 0, 3 and 4
        assert_eq!(binary_at_threshold(&t, &p, 0.5), 5.0 / 8.0);
    }

    #[test]
    fn quit50_examples() {
        let mut vids = Vec::new();
        let (mut t, mut p) = (Vec::new(), Vec::new());
        // true low-share 0.2, 0.5, 0.8 per video; predictions mirror them
        for (v, low) in [("x", 2), ("y", 5), ("z", 8)] {
            for i in 0..10 {
                vids.push(v.to_string());
                t.push(if i < low { 0.2 } else { 0.8 });
                p.push(if i < 10 - low { 0.2 } else { 0.8 });
            }
        }
        assert_eq!(quit50_pcc(&vids, &t, &t, 10), Some(1.0));
        assert!((quit50_pcc(&vids, &t, &p, 10).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(quit50_pcc(&vids[..10], &t[..10], &p[..10], 10), None);
        assert_eq!(quit50_pcc(&vids, &t, &p, 11), None);
    }

    #[test]
    fn horizon_parsing() {
        let hs = parse_horizons(DEFAULT_HORIZONS).unwrap();
        assert_eq!(hs.len(), 9);
        assert_eq!(hs[0], Horizon::Seconds(10.0));
        assert_eq!(hs[2], Horizon::Seconds(60.0));
        assert_eq!(hs[8], Horizon::Full);
        assert_eq!(hs.iter().map(ToString::to_string).collect::<Vec<_>>().join(","), DEFAULT_HORIZONS);
        assert!("ten".parse::<Horizon>().is_err());
        assert!("-5s".parse::<Horizon>().is_err());
    }

    #[test]
    fn unified_needs_enough_rows() {
        let recs: Vec<_> = (0..50).map(|i| record("a", &i.to_string(), i % 3, 0.1 * (i % 10) as f64)).collect();
        let t = concatenate(&recs, &["stall_count".to_string()], &db3()).unwrap();
        assert!(matches!(train_unified(&t, &db3(), &TuningConfig::default(), 0), Err(Error::Config(_))));
    }
}
