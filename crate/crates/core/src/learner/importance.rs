use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::forest::RandomForest;
use super::gbdt::TreeEnsemble;
use super::matrix::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Anything that maps a positional feature row to a prediction.
pub trait Regressor<T: Scalar>: Sync {
    fn feature_names(&self) -> &[String];
    fn predict_row(&self, row: &[T]) -> T;
}

impl<T: Scalar> Regressor<T> for TreeEnsemble<T> {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
    fn predict_row(&self, row: &[T]) -> T {
        TreeEnsemble::predict_row(self, row)
    }
}

impl<T: Scalar> Regressor<T> for RandomForest<T> {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
    fn predict_row(&self, row: &[T]) -> T {
        RandomForest::predict_row(self, row)
    }
}

/// Total split gain per feature across the ensemble, normalized to sum to one.
/// Every feature is present in the map; all zeros when nothing was split.
pub fn gain_importance<T: Scalar>(ensemble: &TreeEnsemble<T>) -> IndexMap<String, T> {
    let mut totals = vec![T::zero(); ensemble.feature_names.len()];
    for tree in &ensemble.trees {
        tree.for_each_split(&mut |f, g| totals[f] += g);
    }
    let sum: T = totals.iter().copied().sum();
    ensemble
        .feature_names
        .iter()
        .zip(totals)
        .map(|(n, v)| (n.clone(), if sum > T::zero() { v / sum } else { T::zero() }))
        .collect()
}

fn mae_of<T: Scalar, M: Regressor<T> + ?Sized>(model: &M, x: &FeatureMatrix<T>, y: &[T]) -> T {
    x.rows().zip(y).map(|(r, &t)| (model.predict_row(r) - t).abs()).sum::<T>() / T::of_usize(y.len())
}

/// Mean increase in MAE when one column is shuffled, per feature. Shuffles are
/// seeded per (feature, repeat). Useless features can score below zero.
pub fn permutation_importance<T: Scalar, M: Regressor<T>>(
    model: &M,
    x: &FeatureMatrix<T>,
    y: &[T],
    repeats: usize,
    seed: u64,
) -> Result<IndexMap<String, T>> {
    if x.n_rows() != y.len() || y.is_empty() {
        return Err(Error::Invalid("permutation importance needs matching, non-empty rows and targets".into()));
    }
    if repeats == 0 {
        return Err(Error::config("repeats must be at least 1"));
    }
    let x = x.project(model.feature_names())?;
    let baseline = mae_of(model, &x, y);
    let scores: Vec<T> = (0..x.n_cols())
        .into_par_iter()
        .map(|c| {
            let mut total = T::zero();
            for r in 0..repeats {
                let mut rng = rng::stream(seed, &[c as u64, r as u64]);
                let mut col = x.column(c);
                col.shuffle(&mut rng);
                let mut shuffled = x.clone();
                for (i, v) in col.into_iter().enumerate() {
                    shuffled.set(i, c, v);
                }
                total += mae_of(model, &shuffled, y) - baseline;
            }
            total / T::of_usize(repeats)
        })
        .collect();
    Ok(x.names().iter().cloned().zip(scores).collect())
}
