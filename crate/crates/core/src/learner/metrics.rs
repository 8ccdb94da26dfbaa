use serde::{Deserialize, Serialize};

use super::stats;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub mae: T,
    pub rmse: T,
    /// `None` when either side has zero variance.
    pub pearson: Option<T>,
    pub spearman: Option<T>,
}

pub fn metrics<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<Metrics<T>> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::Invalid(format!(
            "metrics need equal, non-empty inputs (got {} and {})",
            y_true.len(),
            y_pred.len()
        )));
    }
    let n = T::of_usize(y_true.len());
    let mae = y_true.iter().zip(y_pred).map(|(&a, &b)| (a - b).abs()).sum::<T>() / n;
    let mse = y_true.iter().zip(y_pred).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() / n;
    Ok(Metrics {
        mae,
        rmse: mse.sqrt().max(mae),
        pearson: stats::pearson(y_true, y_pred),
        spearman: stats::spearman(y_true, y_pred),
    })
}

pub fn mae<T: Scalar>(y_true: &[T], y_pred: &[T]) -> T {
    y_true.iter().zip(y_pred).map(|(&a, &b)| (a - b).abs()).sum::<T>() / T::of_usize(y_true.len().max(1))
}

pub fn rmse<T: Scalar>(y_true: &[T], y_pred: &[T]) -> T {
    (y_true.iter().zip(y_pred).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() / T::of_usize(y_true.len().max(1))).sqrt()
}
