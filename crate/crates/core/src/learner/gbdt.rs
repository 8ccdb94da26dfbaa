//! Squared-error gradient boosting.

use std::collections::HashMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::tree::{Presorted, TreeConfig, TreeGrower, TreeNode};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig<T> {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: T,
    pub min_samples_leaf: usize,
    /// Fraction of features each tree may use.
    pub colsample: T,
    pub l2_leaf_penalty: T,
}

impl<T: Scalar> Default for GbdtConfig<T> {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 4,
            learning_rate: T::of(0.1),
            min_samples_leaf: 5,
            colsample: T::one(),
            l2_leaf_penalty: T::one(),
        }
    }
}

impl<T: Scalar> GbdtConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let lr = self.learning_rate;
        if !(lr > T::zero() && lr <= T::one()) {
            return Err(Error::config(format!("learning_rate {lr} outside (0, 1]")));
        }
        let cs = self.colsample;
        if !(cs > T::zero() && cs <= T::one()) {
            return Err(Error::config(format!("colsample {cs} outside (0, 1]")));
        }
        self.tree_config().validate()
    }

    fn tree_config(&self) -> TreeConfig<T> {
        TreeConfig {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            l2: self.l2_leaf_penalty,
            features_per_split: None,
        }
    }
}

/// Fitted boosted ensemble. Prediction is `base_score + learning_rate · Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble<T> {
    pub base_score: T,
    pub learning_rate: T,
    pub feature_names: Vec<String>,
    pub trees: Vec<TreeNode<T>>,
}

impl<T: Scalar> TreeEnsemble<T> {
    /// A tree-less model predicting `base_score` everywhere.
    pub fn constant(base_score: T, feature_names: Vec<String>) -> Self {
        Self { base_score, learning_rate: T::one(), feature_names, trees: Vec::new() }
    }

    /// Positional prediction; `row` is aligned with `feature_names`.
    pub fn predict_row(&self, row: &[T]) -> T {
        self.predict_staged(row, self.trees.len())
    }

    /// Prediction using only the first `rounds` trees.
    pub fn predict_staged(&self, row: &[T], rounds: usize) -> T {
        let sum: T = self.trees.iter().take(rounds).map(|t| t.predict(row)).sum();
        self.base_score + self.learning_rate * sum
    }

    /// Predicts every row, matching columns by name.
    pub fn predict_matrix(&self, x: &FeatureMatrix<T>) -> Result<Vec<T>> {
        let aligned;
        let x = if x.names() == self.feature_names.as_slice() {
            x
        } else {
            aligned = x.project(&self.feature_names)?;
            &aligned
        };
        Ok(x.rows().map(|r| self.predict_row(r)).collect())
    }

    /// Named-record prediction. Extra fields are ignored; `None` is missing.
    pub fn predict(&self, record: &HashMap<String, Option<T>>) -> Result<T> {
        let row = self
            .feature_names
            .iter()
            .map(|n| match record.get(n) {
                Some(v) => Ok(v.unwrap_or_else(T::missing)),
                None => Err(Error::schema(format!("record lacks feature `{n}`"))),
            })
            .collect::<Result<Vec<T>>>()?;
        Ok(self.predict_row(&row))
    }

    pub fn n_splits(&self) -> usize {
        self.trees.iter().map(|t| t.n_leaves() - 1).sum()
    }
}

/// Fits a boosted ensemble. Each tree sees a seeded random subset of
/// `ceil(colsample · d)` features; identical inputs and seed give a
/// bit-identical ensemble.
pub fn fit_gbdt<T: Scalar>(x: &FeatureMatrix<T>, y: &[T], config: &GbdtConfig<T>, seed: u64) -> Result<TreeEnsemble<T>> {
    config.validate()?;
    check_targets(x, y)?;
    let n = y.len();
    let base = y.iter().copied().sum::<T>() / T::of_usize(n);
    let mut ensemble = TreeEnsemble {
        base_score: base,
        learning_rate: config.learning_rate,
        feature_names: x.names().to_vec(),
        trees: Vec::with_capacity(config.n_trees),
    };
    if config.n_trees == 0 {
        return Ok(ensemble);
    }

    let d = x.n_cols();
    let per_tree = ((config.colsample * T::of_usize(d)).ceil().to_usize().unwrap_or(d)).clamp(1, d.max(1));
    let presorted = Presorted::new(x);
    let tree_cfg = config.tree_config();
    let mut pred = vec![base; n];
    let mut grad = vec![T::zero(); n];
    let hess = vec![T::one(); n];

    for t in 0..config.n_trees {
        for i in 0..n {
            grad[i] = pred[i] - y[i];
        }
        let mut rng = rng::stream(seed, &[0x6762_6474, t as u64]);
        let features = if per_tree < d { index::sample(&mut rng, d, per_tree).into_vec() } else { (0..d).collect() };
        let tree = TreeGrower::new(x, &grad, &hess, None, features, &tree_cfg).grow(&presorted, &mut rng);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += config.learning_rate * tree.predict(x.row(i));
        }
        ensemble.trees.push(tree);
    }
    Ok(ensemble)
}

pub(crate) fn check_targets<T: Scalar>(x: &FeatureMatrix<T>, y: &[T]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Invalid("cannot fit on zero rows".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::Invalid(format!("{} rows but {} targets", x.n_rows(), y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("targets must be finite".into()));
    }
    Ok(())
}
