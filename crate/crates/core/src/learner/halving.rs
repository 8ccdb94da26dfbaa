//! Successive-halving grid search with k-fold cross-validation.
//!
//! Row count is the resource: rung 0 scores every candidate on a
//! `min_fraction` slice of the (seeded, shuffled) rows, each later rung keeps
//! the best `ceil(n / factor)` by mean fold MAE and multiplies the slice by
//! `factor`, until one candidate is left.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbdt::{fit_gbdt, GbdtConfig};
use super::matrix::FeatureMatrix;
use super::metrics::mae;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace<T> {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<T>,
    pub min_samples_leaf: Vec<usize>,
    pub colsample: Vec<T>,
    pub l2_leaf_penalty: Vec<T>,
}

impl<T: Scalar> Default for SearchSpace<T> {
    fn default() -> Self {
        Self {
            n_trees: vec![60, 120],
            max_depth: vec![3, 5],
            learning_rate: vec![T::of(0.1)],
            min_samples_leaf: vec![5],
            colsample: vec![T::of(0.7), T::one()],
            l2_leaf_penalty: vec![T::one()],
        }
    }
}

impl<T: Scalar> SearchSpace<T> {
    pub fn single(config: &GbdtConfig<T>) -> Self {
        Self {
            n_trees: vec![config.n_trees],
            max_depth: vec![config.max_depth],
            learning_rate: vec![config.learning_rate],
            min_samples_leaf: vec![config.min_samples_leaf],
            colsample: vec![config.colsample],
            l2_leaf_penalty: vec![config.l2_leaf_penalty],
        }
    }

    pub fn size(&self) -> usize {
        self.n_trees.len()
            * self.max_depth.len()
            * self.learning_rate.len()
            * self.min_samples_leaf.len()
            * self.colsample.len()
            * self.l2_leaf_penalty.len()
    }

    /// Cartesian product in lexicographic order (first field outermost).
    pub fn candidates(&self) -> Vec<GbdtConfig<T>> {
        let mut out = Vec::with_capacity(self.size());
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &learning_rate in &self.learning_rate {
                    for &min_samples_leaf in &self.min_samples_leaf {
                        for &colsample in &self.colsample {
                            for &l2_leaf_penalty in &self.l2_leaf_penalty {
                                out.push(GbdtConfig { n_trees, max_depth, learning_rate, min_samples_leaf, colsample, l2_leaf_penalty });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.size() == 0 {
            return Err(Error::config("search space has an empty hyperparameter list"));
        }
        self.candidates().iter().try_for_each(GbdtConfig::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingConfig<T> {
    pub folds: usize,
    pub factor: usize,
    pub min_fraction: T,
}

impl<T: Scalar> Default for HalvingConfig<T> {
    fn default() -> Self {
        Self { folds: 3, factor: 2, min_fraction: T::of(0.125) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry<T> {
    /// Position in [`SearchSpace::candidates`].
    pub candidate: usize,
    pub config: GbdtConfig<T>,
    /// Mean fold MAE; absent for the lone survivor, which is not re-scored.
    pub cv_mae: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung<T> {
    pub index: usize,
    pub n_rows: usize,
    pub entries: Vec<LeaderboardEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome<T> {
    pub best: GbdtConfig<T>,
    pub best_candidate: usize,
    pub rungs: Vec<Rung<T>>,
}

impl<T> SearchOutcome<T> {
    pub fn rung_sizes(&self) -> Vec<usize> {
        self.rungs.iter().map(|r| r.entries.len()).collect()
    }
}

pub fn halving_search<T: Scalar>(
    space: &SearchSpace<T>,
    x: &FeatureMatrix<T>,
    y: &[T],
    halving: &HalvingConfig<T>,
    seed: u64,
) -> Result<SearchOutcome<T>> {
    space.validate()?;
    let candidates = space.candidates();
    if candidates.len() == 1 {
        return Ok(SearchOutcome {
            best: candidates[0].clone(),
            best_candidate: 0,
            rungs: vec![Rung {
                index: 0,
                n_rows: y.len(),
                entries: vec![LeaderboardEntry { candidate: 0, config: candidates[0].clone(), cv_mae: None }],
            }],
        });
    }
    if halving.folds < 2 {
        return Err(Error::config("halving search needs at least 2 folds"));
    }
    if halving.factor < 2 {
        return Err(Error::config("halving factor must be at least 2"));
    }
    let frac = halving.min_fraction;
    if !(frac > T::zero() && frac <= T::one()) {
        return Err(Error::config(format!("min_fraction {frac} outside (0, 1]")));
    }
    let n = y.len();
    if x.n_rows() != n {
        return Err(Error::Invalid(format!("{} rows but {} targets", x.n_rows(), n)));
    }
    // relative slack so a fraction computed as `need / n` is not lost to rounding
    if frac * T::of_usize(n) < T::of_usize(halving.folds * 5) * T::of(1.0 - 1e-6) {
        return Err(Error::config(format!(
            "first rung would see {:.1} rows; need at least {} (5 per fold)",
            (frac * T::of_usize(n)).as_f64(),
            halving.folds * 5
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[0x6861_6c76]));

    let mut alive: Vec<usize> = (0..candidates.len()).collect();
    let mut fraction = frac;
    let mut rungs = Vec::new();
    loop {
        let rows = ((fraction * T::of_usize(n)).floor().to_usize().unwrap_or(n)).clamp(halving.folds * 5, n);
        if alive.len() == 1 {
            rungs.push(Rung {
                index: rungs.len(),
                n_rows: rows,
                entries: vec![LeaderboardEntry { candidate: alive[0], config: candidates[alive[0]].clone(), cv_mae: None }],
            });
            break;
        }
        let subset = &order[..rows];
        let scored: Vec<(usize, T)> = alive
            .par_iter()
            .map(|&c| cross_validated_mae(&candidates[c], x, y, subset, halving.folds, rng::derive_seed(seed, &[c as u64])).map(|s| (c, s)))
            .collect::<Result<_>>()?;
        let mut ranked = scored.clone();
        ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        rungs.push(Rung {
            index: rungs.len(),
            n_rows: rows,
            entries: ranked
                .iter()
                .map(|&(c, s)| LeaderboardEntry { candidate: c, config: candidates[c].clone(), cv_mae: Some(s) })
                .collect(),
        });
        let keep = alive.len().div_ceil(halving.factor);
        alive = ranked.into_iter().take(keep).map(|(c, _)| c).collect();
        fraction = (fraction * T::of_usize(halving.factor)).min(T::one());
    }
    let best_candidate = alive[0];
    Ok(SearchOutcome { best: candidates[best_candidate].clone(), best_candidate, rungs })
}

fn cross_validated_mae<T: Scalar>(
    config: &GbdtConfig<T>,
    x: &FeatureMatrix<T>,
    y: &[T],
    rows: &[usize],
    folds: usize,
    seed: u64,
) -> Result<T> {
    let m = rows.len();
    let mut total = T::zero();
    for f in 0..folds {
        let (lo, hi) = (f * m / folds, (f + 1) * m / folds);
        let train: Vec<usize> = rows[..lo].iter().chain(&rows[hi..]).copied().collect();
        let test = &rows[lo..hi];
        let xt = x.select_rows(&train);
        let yt: Vec<T> = train.iter().map(|&r| y[r]).collect();
        let model = fit_gbdt(&xt, &yt, config, rng::derive_seed(seed, &[f as u64]))?;
        let preds: Vec<T> = test.iter().map(|&r| model.predict_row(x.row(r))).collect();
        let truth: Vec<T> = test.iter().map(|&r| y[r]).collect();
        total += mae(&truth, &preds);
    }
    Ok(total / T::of_usize(folds))
}
