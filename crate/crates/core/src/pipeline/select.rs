//! Penalized random-forest feature selection.
//!
//! Impurity importance from a forest is divided by each feature's summed
//! absolute Spearman correlation with every candidate (itself included), then
//! renormalized. Redundant features share credit instead of each keeping it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::SessionRecord;
use crate::error::{Error, Result};
use crate::learner::stats::spearman_pairwise;
use crate::learner::{fit_random_forest, FeatureMatrix, ForestConfig};
use crate::scalar::from_option;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub raw_importance: f64,
    pub correlation_penalty: f64,
    pub penalized_importance: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub threshold: f64,
    pub features: Vec<FeatureEntry>,
}

impl FeatureCatalog {
    pub fn selected(&self) -> Vec<String> {
        self.features.iter().filter(|f| f.selected).map(|f| f.name.clone()).collect()
    }

    /// Re-applies a different threshold without refitting.
    pub fn with_threshold(&self, threshold: f64) -> FeatureCatalog {
        let mut c = self.clone();
        c.threshold = threshold;
        for f in &mut c.features {
            f.selected = f.penalized_importance >= threshold;
        }
        c
    }

    pub fn max_penalized_importance(&self) -> f64 {
        self.features.iter().map(|f| f.penalized_importance).fold(0.0, f64::max)
    }
}

/// Feature matrix over `names` with nulls as NaN.
pub fn records_matrix(records: &[SessionRecord], names: &[String]) -> Result<FeatureMatrix<f64>> {
    if let Some(bad) = names.iter().find(|n| !SessionRecord::is_feature(n)) {
        return Err(Error::schema(format!("unknown feature `{bad}`")));
    }
    let mut data = Vec::with_capacity(records.len() * names.len());
    for r in records {
        data.extend(names.iter().map(|n| from_option::<f64>(r.feature(n))));
    }
    FeatureMatrix::new(names.to_vec(), data)
}

pub fn select_features(
    records: &[SessionRecord],
    candidates: &[String],
    threshold: f64,
    forest: &ForestConfig,
    seed: u64,
) -> Result<FeatureCatalog> {
    if candidates.len() < 2 {
        return Err(Error::config("feature selection needs at least two candidates"));
    }
    if records.len() < 50 {
        return Err(Error::config(format!("feature selection needs at least 50 records, got {}", records.len())));
    }
    let x = records_matrix(records, candidates)?;
    let y: Vec<f64> = records.iter().map(|r| r.engagement).collect();
    let rf = fit_random_forest(&x, &y, forest, seed)?;
    let raw = rf.impurity_importance();

    let cols: Vec<Vec<f64>> = (0..candidates.len()).map(|j| x.column(j)).collect();
    let d = cols.len();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let rho: Vec<f64> =
        pairs.par_iter().map(|&(i, j)| spearman_pairwise(&cols[i], &cols[j]).map_or(0.0, f64::abs)).collect();
    let mut penalty = vec![1.0; d];
    for (&(i, j), r) in pairs.iter().zip(&rho) {
        penalty[i] += r;
        penalty[j] += r;
    }

    let ratio: Vec<f64> = raw.iter().zip(&penalty).map(|(r, p)| r / p).collect();
    let total: f64 = ratio.iter().sum();
    let penalized: Vec<f64> = if total > 0.0 { ratio.iter().map(|r| r / total).collect() } else { vec![1.0 / d as f64; d] };
    let features = candidates
        .iter()
        .enumerate()
        .map(|(i, name)| FeatureEntry {
            name: name.clone(),
            raw_importance: raw[i],
            correlation_penalty: penalty[i],
            penalized_importance: penalized[i],
            selected: penalized[i] >= threshold,
        })
        .collect();
    Ok(FeatureCatalog { threshold, features })
}
