//! Per-user twins and the sensitivity database.
//!
//! A twin is a boosted ensemble trained only on one user's training sessions;
//! its normalized gain importances form the user's sensitivity vector.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::metrics::mae;
use crate::learner::{
    ensemble_from_json, ensemble_to_json, fit_gbdt, gain_importance, halving_search, GbdtConfig, HalvingConfig,
    SearchSpace, TreeEnsemble,
};
use crate::pipeline::{records_matrix, SessionRecord, UserSplit};
use crate::rng;
use crate::scalar::Scalar;

/// Smallest per-user training set a twin is fitted on.
pub const MIN_TWIN_TRAIN: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig<T> {
    pub space: SearchSpace<T>,
    pub halving: HalvingConfig<T>,
}

impl<T: Scalar> Default for TuningConfig<T> {
    fn default() -> Self {
        Self { space: SearchSpace::default(), halving: HalvingConfig::default() }
    }
}

/// Halving search followed by a refit of the winner on all rows. The first
/// rung is widened when the data is too small for `min_fraction` to leave
/// five rows per fold.
pub fn tune_and_fit<T: Scalar>(
    x: &crate::learner::FeatureMatrix<T>,
    y: &[T],
    tuning: &TuningConfig<T>,
    seed: u64,
) -> Result<(TreeEnsemble<T>, GbdtConfig<T>)> {
    let n = y.len();
    let mut halving = tuning.halving.clone();
    let floor = T::of_usize(halving.folds * 5) / T::of_usize(n.max(1));
    if halving.min_fraction < floor {
        halving.min_fraction = floor.min(T::one());
    }
    let outcome = halving_search(&tuning.space, x, y, &halving, rng::derive_seed(seed, &[0x7365_6172]))?;
    let model = fit_gbdt(x, y, &outcome.best, rng::derive_seed(seed, &[0x7265_6669]))?;
    Ok((model, outcome.best))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinEntry<T> {
    pub user_id: String,
    pub model: TreeEnsemble<T>,
    pub train_mae: T,
    pub test_mae: T,
    pub config: Option<GbdtConfig<T>>,
    pub degenerate: bool,
    /// Session ids the twin was fitted on, for leakage audits.
    pub train_sessions: Vec<String>,
}

fn xy<T: Scalar>(records: &[SessionRecord], features: &[String]) -> Result<(crate::learner::FeatureMatrix<T>, Vec<T>)> {
    let m = records_matrix(records, features)?;
    let data = m.rows().flatten().map(|&v| T::of(v)).collect();
    let x = crate::learner::FeatureMatrix::new(features.to_vec(), data)?;
    Ok((x, records.iter().map(|r| T::of(r.engagement)).collect()))
}

/// Trains one user's twin. The seed does not depend on the user id, so two
/// users with identical data get identical twins.
pub fn train_twin<T: Scalar>(split: &UserSplit, features: &[String], tuning: &TuningConfig<T>, seed: u64) -> Result<TwinEntry<T>> {
    if split.train.len() < MIN_TWIN_TRAIN {
        return Err(Error::config(format!(
            "user `{}` has {} training sessions; twins need at least {MIN_TWIN_TRAIN}",
            split.user_id,
            split.train.len()
        )));
    }
    let (x, y) = xy::<T>(&split.train, features)?;
    let constant = y.iter().all(|&v| v == y[0]);
    let (model, config) = if constant {
        (TreeEnsemble::constant(y[0], features.to_vec()), None)
    } else {
        let (m, c) = tune_and_fit(&x, &y, tuning, seed)?;
        (m, Some(c))
    };
    let train_pred = model.predict_matrix(&x)?;
    let test_mae = if split.test.is_empty() {
        T::zero()
    } else {
        let (xt, yt) = xy::<T>(&split.test, features)?;
        mae(&yt, &model.predict_matrix(&xt)?)
    };
    Ok(TwinEntry {
        user_id: split.user_id.clone(),
        train_mae: mae(&y, &train_pred),
        test_mae,
        config,
        degenerate: model.n_splits() == 0,
        model,
        train_sessions: split.train.iter().map(|r| r.session_id.clone()).collect(),
    })
}

pub fn train_twins<T: Scalar>(splits: &[UserSplit], features: &[String], tuning: &TuningConfig<T>, seed: u64) -> Result<Vec<TwinEntry<T>>> {
    splits.par_iter().map(|s| train_twin(s, features, tuning, seed)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityVector {
    pub user_id: String,
    pub weights: IndexMap<String, f64>,
    /// The twin made no split; weights are uniform.
    pub degenerate: bool,
}

pub fn extract_sensitivities<T: Scalar>(entry: &TwinEntry<T>) -> SensitivityVector {
    let names = &entry.model.feature_names;
    let weights = if entry.model.n_splits() == 0 {
        let u = 1.0 / names.len().max(1) as f64;
        names.iter().map(|n| (n.clone(), u)).collect()
    } else {
        gain_importance(&entry.model).into_iter().map(|(k, v)| (k, v.as_f64())).collect()
    };
    SensitivityVector { user_id: entry.user_id.clone(), weights, degenerate: entry.model.n_splits() == 0 }
}

/// Sensitivity vectors keyed by user, all over the same feature list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SensitivityDb {
    pub features: Vec<String>,
    pub vectors: BTreeMap<String, SensitivityVector>,
}

impl SensitivityDb {
    pub fn new(features: Vec<String>) -> Self {
        Self { features, vectors: BTreeMap::new() }
    }

    pub fn from_twins<T: Scalar>(features: &[String], twins: &[TwinEntry<T>]) -> Self {
        let mut db = Self::new(features.to_vec());
        for t in twins {
            db.insert(extract_sensitivities(t)).expect("twin features match the catalog");
        }
        db
    }

    pub fn insert(&mut self, v: SensitivityVector) -> Result<()> {
        if v.weights.keys().ne(self.features.iter()) {
            return Err(Error::schema(format!("sensitivities of `{}` do not match the feature list", v.user_id)));
        }
        self.vectors.insert(v.user_id.clone(), v);
        Ok(())
    }

    pub fn get(&self, user: &str) -> Option<&SensitivityVector> {
        self.vectors.get(user)
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// CSV: `user_id`, one column per feature, then `degenerate`.
    pub fn store(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["user_id".to_string()];
        header.extend(self.features.iter().cloned());
        header.push("degenerate".into());
        w.write_record(&header)?;
        for v in self.vectors.values() {
            let mut row = vec![v.user_id.clone()];
            row.extend(v.weights.values().map(|x| x.to_string()));
            row.push(v.degenerate.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a database; with `expected` set, the feature columns must match it
    /// exactly.
    pub fn load(path: &Path, expected: Option<&[String]>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        if header.first().map(String::as_str) != Some("user_id") || header.last().map(String::as_str) != Some("degenerate") {
            return Err(Error::schema("sensitivity db header must start with user_id and end with degenerate"));
        }
        let features = header[1..header.len() - 1].to_vec();
        if let Some(exp) = expected {
            if let Some(missing) = exp.iter().find(|f| !features.contains(f)) {
                return Err(Error::schema(format!("sensitivity db lacks column `{missing}`")));
            }
            if let Some(extra) = features.iter().find(|f| !exp.contains(f)) {
                return Err(Error::schema(format!("sensitivity db has unexpected column `{extra}`")));
            }
            if features != exp {
                return Err(Error::schema("sensitivity db columns are out of catalog order"));
            }
        }
        let mut db = Self::new(features.clone());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::schema(format!("row {}: bad value in column `{}`", i + 1, header[j])))
            };
            let weights = features.iter().enumerate().map(|(j, f)| Ok((f.clone(), parse(j + 1)?))).collect::<Result<_>>()?;
            let degenerate = match rec.get(header.len() - 1) {
                Some("true") => true,
                Some("false") => false,
                other => return Err(Error::schema(format!("row {}: degenerate must be true/false, got {other:?}", i + 1))),
            };
            db.insert(SensitivityVector { user_id: rec[0].to_string(), weights, degenerate })?;
        }
        Ok(db)
    }
}

fn model_file_name(user: &str) -> String {
    if !user.is_empty() && user.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        format!("{user}.json")
    } else {
        format!("user-{:016x}.json", rng::hash_str(user))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TwinSummary<T> {
    user_id: String,
    file: String,
    train_mae: T,
    test_mae: T,
    config: Option<GbdtConfig<T>>,
    degenerate: bool,
}

/// Writes one model file per twin plus `index.json` with scores and configs.
pub fn store_twin_models<T: Scalar + Serialize>(dir: &Path, twins: &[TwinEntry<T>]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = Vec::new();
    for t in twins {
        let file = model_file_name(&t.user_id);
        fs::write(dir.join(&file), ensemble_to_json(&t.model)?)?;
        index.push(TwinSummary {
            user_id: t.user_id.clone(),
            file,
            train_mae: t.train_mae,
            test_mae: t.test_mae,
            config: t.config.clone(),
            degenerate: t.degenerate,
        });
    }
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)?)?;
    Ok(())
}

pub fn load_twin_model<T: Scalar + DeserializeOwned>(dir: &Path, user: &str) -> Result<TreeEnsemble<T>> {
    ensemble_from_json(&fs::read_to_string(dir.join(model_file_name(user)))?)
}
