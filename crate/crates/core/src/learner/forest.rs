//! Bagged variance-reduction regression forest.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbdt::check_targets;
use super::matrix::FeatureMatrix;
use super::tree::{Presorted, TreeConfig, TreeGrower, TreeNode};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features drawn at each split.
    pub max_features: f64,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 10, min_samples_leaf: 5, max_features: 1.0 / 3.0, bootstrap: true }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("a forest needs at least one tree"));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::config(format!("max_features {} outside (0, 1]", self.max_features)));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest<T> {
    pub feature_names: Vec<String>,
    pub trees: Vec<TreeNode<T>>,
}

impl<T: Scalar> RandomForest<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        self.trees.iter().map(|t| t.predict(row)).sum::<T>() / T::of_usize(self.trees.len())
    }

    /// Mean decrease in impurity: each tree's split gains normalized to one,
    /// averaged over trees, renormalized. All zeros when no tree splits.
    pub fn impurity_importance(&self) -> Vec<T> {
        let d = self.feature_names.len();
        let mut acc = vec![T::zero(); d];
        for tree in &self.trees {
            let mut per = vec![T::zero(); d];
            tree.for_each_split(&mut |f, g| per[f] += g);
            let total: T = per.iter().copied().sum();
            if total > T::zero() {
                for (a, p) in acc.iter_mut().zip(per) {
                    *a += p / total;
                }
            }
        }
        let total: T = acc.iter().copied().sum();
        if total > T::zero() {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }
}

pub fn fit_random_forest<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &[T],
    config: &ForestConfig,
    seed: u64,
) -> Result<RandomForest<T>> {
    config.validate()?;
    check_targets(x, y)?;
    let n = y.len();
    let d = x.n_cols();
    let per_split = ((config.max_features * d as f64).ceil() as usize).clamp(1, d.max(1));
    let tree_cfg = TreeConfig {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
        l2: T::zero(),
        features_per_split: (per_split < d).then_some(per_split),
    };
    let presorted = Presorted::new(x);
    let grad: Vec<T> = y.iter().map(|&v| -v).collect();
    let hess = vec![T::one(); n];

    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, &[0x666f_7265, t as u64]);
            let counts = config.bootstrap.then(|| {
                let mut c = vec![0u32; n];
                for _ in 0..n {
                    c[rng.random_range(0..n)] += 1;
                }
                c
            });
            TreeGrower::new(x, &grad, &hess, counts.as_deref(), (0..d).collect(), &tree_cfg).grow(&presorted, &mut rng)
        })
        .collect();
    Ok(RandomForest { feature_names: x.names().to_vec(), trees })
}
