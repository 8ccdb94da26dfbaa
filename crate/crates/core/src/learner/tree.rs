//! Exact-greedy regression trees on gradient/hessian statistics.
//!
//! Split gain for a candidate partition is
//! `G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)` and leaves take weight
//! `−G/(H+λ)`. With `g = −y`, `h = 1`, `λ = 0` this reduces to plain
//! variance-reduction regression trees, which is how the random forest uses it.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode<T> {
    Split {
        feature: usize,
        threshold: T,
        missing: Direction,
        gain: T,
        left: Box<TreeNode<T>>,
        right: Box<TreeNode<T>>,
    },
    Leaf {
        weight: T,
    },
}

impl<T: Scalar> TreeNode<T> {
    /// Rows with `x < threshold` go left; missing values follow `missing`.
    pub fn predict(&self, row: &[T]) -> T {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split { feature, threshold, missing, left, right, .. } => {
                    node = match route(row[*feature], *threshold, *missing) {
                        Direction::Left => left,
                        Direction::Right => right,
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Visits every internal node as `(feature, gain)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, T)) {
        if let TreeNode::Split { feature, gain, left, right, .. } = self {
            f(*feature, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    pub(crate) fn max_feature_index(&self) -> Option<usize> {
        let mut m = None;
        self.for_each_split(&mut |f, _| m = Some(m.map_or(f, |x: usize| x.max(f))));
        m
    }
}

#[inline]
pub(crate) fn route<T: Scalar>(v: T, threshold: T, missing: Direction) -> Direction {
    if v.is_missing() {
        missing
    } else if v < threshold {
        Direction::Left
    } else {
        Direction::Right
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig<T> {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf weights (λ).
    pub l2: T,
    /// Features drawn at random for each split; `None` evaluates all.
    pub features_per_split: Option<usize>,
}

impl<T: Scalar> Default for TreeConfig<T> {
    fn default() -> Self {
        Self { max_depth: 6, min_samples_leaf: 1, l2: T::one(), features_per_split: None }
    }
}

impl<T: Scalar> TreeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf must be at least 1"));
        }
        if !(self.l2 >= T::zero()) {
            return Err(Error::config("l2 leaf penalty must be non-negative"));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::config("features_per_split must be at least 1"));
        }
        Ok(())
    }
}

/// Per-column row orders (ascending value, ties by row index) with missing
/// rows held apart. Computed once per training matrix and shared by every tree.
#[derive(Debug, Clone)]
pub(crate) struct Presorted {
    order: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new<T: Scalar>(x: &FeatureMatrix<T>) -> Self {
        let (order, missing) = (0..x.n_cols())
            .into_par_iter()
            .map(|c| {
                let (mut present, absent): (Vec<u32>, Vec<u32>) =
                    (0..x.n_rows() as u32).partition(|&r| !x.get(r as usize, c).is_missing());
                present.sort_by(|&a, &b| {
                    x.get(a as usize, c)
                        .partial_cmp(&x.get(b as usize, c))
                        .expect("non-missing values are ordered")
                        .then(a.cmp(&b))
                });
                (present, absent)
            })
            .unzip();
        Self { order, missing }
    }
}

struct NodeRows {
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
    all: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    slot: usize,
    threshold: T,
    missing: Option<Direction>,
    gain: T,
    left_hess: T,
    right_hess: T,
}

pub(crate) struct TreeGrower<'a, T> {
    x: &'a FeatureMatrix<T>,
    grad: &'a [T],
    hess: &'a [T],
    counts: Option<&'a [u32]>,
    features: Vec<usize>,
    config: &'a TreeConfig<T>,
    mark: Vec<bool>,
}

impl<'a, T: Scalar> TreeGrower<'a, T> {
    /// `features` restricts the columns this tree may split on; `counts` gives
    /// per-row multiplicities (bootstrap), `None` meaning one each.
    pub fn new(
        x: &'a FeatureMatrix<T>,
        grad: &'a [T],
        hess: &'a [T],
        counts: Option<&'a [u32]>,
        mut features: Vec<usize>,
        config: &'a TreeConfig<T>,
    ) -> Self {
        features.sort_unstable();
        features.dedup();
        Self { x, grad, hess, counts, features, config, mark: vec![false; x.n_rows()] }
    }

    #[inline]
    fn count(&self, r: u32) -> u32 {
        self.counts.map_or(1, |c| c[r as usize])
    }

    pub fn grow<R: Rng>(mut self, presorted: &Presorted, rng: &mut R) -> TreeNode<T> {
        let keep = |r: &&u32| self.counts.is_none_or(|c| c[**r as usize] > 0);
        let root = NodeRows {
            sorted: self
                .features
                .iter()
                .map(|&f| presorted.order[f].iter().filter(keep).copied().collect())
                .collect(),
            missing: self
                .features
                .iter()
                .map(|&f| presorted.missing[f].iter().filter(keep).copied().collect())
                .collect(),
            all: (0..self.x.n_rows() as u32).filter(|r| keep(&r)).collect(),
        };
        self.grow_node(root, 0, rng)
    }

    fn grow_node<R: Rng>(&mut self, node: NodeRows, depth: usize, rng: &mut R) -> TreeNode<T> {
        let lambda = self.config.l2;
        let (mut g, mut h, mut n, mut ss) = (T::zero(), T::zero(), 0usize, T::zero());
        for &r in &node.all {
            let c = self.count(r);
            let cw = T::of(c as f64);
            let gr = self.grad[r as usize];
            g += cw * gr;
            h += cw * self.hess[r as usize];
            ss += cw * gr * gr;
            n += c as usize;
        }
        let leaf = TreeNode::Leaf { weight: leaf_weight(g, h, lambda) };
        let min_leaf = self.config.min_samples_leaf;
        if depth >= self.config.max_depth || n < 2 * min_leaf || self.features.is_empty() {
            return leaf;
        }

        let slots: Vec<usize> = match self.config.features_per_split {
            Some(k) if k < self.features.len() => {
                let mut s = index::sample(rng, self.features.len(), k).into_vec();
                s.sort_unstable();
                s
            }
            _ => (0..self.features.len()).collect(),
        };

        let mut best: Option<Candidate<T>> = None;
        for slot in slots {
            self.scan(&node, slot, (g, h, n), &mut best);
        }
        let min_gain = T::tie_tolerance() * T::of_usize(n.max(1)) * ss;
        let best = match best {
            Some(b) if b.gain > min_gain && b.gain > T::zero() => b,
            _ => return leaf,
        };

        let col = self.features[best.slot];
        let missing = best.missing.unwrap_or(if best.right_hess > best.left_hess {
            Direction::Right
        } else {
            Direction::Left
        });
        for &r in &node.all {
            self.mark[r as usize] = route(self.x.get(r as usize, col), best.threshold, missing) == Direction::Left;
        }
        let split = |v: Vec<u32>, mark: &[bool]| -> (Vec<u32>, Vec<u32>) {
            v.into_iter().partition(|&r| mark[r as usize])
        };
        let NodeRows { sorted, missing: miss, all } = node;
        let (mut ls, mut rs) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
        for v in sorted {
            let (l, r) = split(v, &self.mark);
            ls.push(l);
            rs.push(r);
        }
        let (mut lm, mut rm) = (Vec::with_capacity(miss.len()), Vec::with_capacity(miss.len()));
        for v in miss {
            let (l, r) = split(v, &self.mark);
            lm.push(l);
            rm.push(r);
        }
        let (la, ra) = split(all, &self.mark);
        for &r in &la {
            self.mark[r as usize] = false;
        }

        let left = self.grow_node(NodeRows { sorted: ls, missing: lm, all: la }, depth + 1, rng);
        let right = self.grow_node(NodeRows { sorted: rs, missing: rm, all: ra }, depth + 1, rng);
        TreeNode::Split {
            feature: col,
            threshold: best.threshold,
            missing,
            gain: best.gain,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn scan(&self, node: &NodeRows, slot: usize, (g, h, n): (T, T, usize), best: &mut Option<Candidate<T>>) {
        let col = self.features[slot];
        let lambda = self.config.l2;
        let min_leaf = self.config.min_samples_leaf;
        let (mut gm, mut hm, mut nm) = (T::zero(), T::zero(), 0usize);
        for &r in &node.missing[slot] {
            let c = self.count(r);
            let cw = T::of(c as f64);
            gm += cw * self.grad[r as usize];
            hm += cw * self.hess[r as usize];
            nm += c as usize;
        }
        let parent = g * g / (h + lambda);
        let sorted = &node.sorted[slot];
        let (mut gl, mut hl, mut nl) = (T::zero(), T::zero(), 0usize);
        let directions: &[Option<Direction>] =
            if nm > 0 { &[Some(Direction::Left), Some(Direction::Right)] } else { &[None] };

        for k in 0..sorted.len().saturating_sub(1) {
            let r = sorted[k];
            let c = self.count(r);
            let cw = T::of(c as f64);
            gl += cw * self.grad[r as usize];
            hl += cw * self.hess[r as usize];
            nl += c as usize;
            let v = self.x.get(r as usize, col);
            let next = self.x.get(sorted[k + 1] as usize, col);
            if !(v < next) {
                continue;
            }
            let threshold = midpoint(v, next);
            for &dir in directions {
                let (gl_, hl_, nl_) = match dir {
                    Some(Direction::Left) => (gl + gm, hl + hm, nl + nm),
                    _ => (gl, hl, nl),
                };
                let nr_ = n - nl_;
                if nl_ < min_leaf || nr_ < min_leaf {
                    continue;
                }
                let (gr_, hr_) = (g - gl_, h - hl_);
                let gain = gl_ * gl_ / (hl_ + lambda) + gr_ * gr_ / (hr_ + lambda) - parent;
                if best.is_none_or(|b| improves(gain, b.gain)) {
                    *best = Some(Candidate { slot, threshold, missing: dir, gain, left_hess: hl_, right_hess: hr_ });
                }
            }
        }
    }
}

/// Strict improvement beyond floating-point noise; ties keep the earlier
/// (lower feature index, lower threshold) candidate.
#[inline]
pub(crate) fn improves<T: Scalar>(gain: T, incumbent: T) -> bool {
    gain > incumbent + T::tie_tolerance() * incumbent.abs().max(T::one())
}

#[inline]
pub(crate) fn leaf_weight<T: Scalar>(g: T, h: T, lambda: T) -> T {
    let denom = h + lambda;
    if denom > T::zero() {
        -g / denom
    } else {
        T::zero()
    }
}

/// Midpoint of two consecutive distinct values, guaranteed to separate them
/// under the `x < threshold` rule.
#[inline]
pub(crate) fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let m = lo + (hi - lo) / T::of(2.0);
    if lo < m && m <= hi {
        m
    } else {
        hi
    }
}

/// Fits a single tree on gradient/hessian statistics over every row and column.
pub fn fit_tree<T: Scalar>(
    x: &FeatureMatrix<T>,
    gradients: &[T],
    hessians: &[T],
    config: &TreeConfig<T>,
    seed: u64,
) -> Result<TreeNode<T>> {
    config.validate()?;
    if gradients.len() != x.n_rows() || hessians.len() != x.n_rows() {
        return Err(Error::Invalid(format!(
            "{} rows but {} gradients and {} hessians",
            x.n_rows(),
            gradients.len(),
            hessians.len()
        )));
    }
    let presorted = Presorted::new(x);
    let mut rng = rng::stream(seed, &[0x7472_6565]);
    Ok(TreeGrower::new(x, gradients, hessians, None, (0..x.n_cols()).collect(), config).grow(&presorted, &mut rng))
}
