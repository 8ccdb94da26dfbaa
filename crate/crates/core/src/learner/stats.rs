//! Moment and rank statistics.

use crate::scalar::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::of_usize(xs.len()))
}

/// Population standard deviation.
pub fn std_dev<T: Scalar>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    let var = xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::of_usize(xs.len());
    Some(var.sqrt())
}

/// Sample standard deviation (n - 1 denominator); `None` below two samples.
pub fn sample_std_dev<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>();
    Some((ss / T::of_usize(xs.len() - 1)).sqrt())
}

/// Median of a non-empty slice (average of the two middle values when even).
pub fn median<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / T::of(2.0) })
}

/// Fisher–Pearson moment coefficient of skewness `g1 = m3 / m2^(3/2)` using
/// biased central moments. `None` for fewer than three samples or zero
/// variance.
pub fn skewness<T: Scalar>(xs: &[T]) -> Option<T> {
    let w = vec![T::one(); xs.len()];
    weighted_skewness(xs, &w)
}

/// Weighted g1: moments are taken under the normalized weights. Requires at
/// least three samples with positive weight.
pub fn weighted_skewness<T: Scalar>(xs: &[T], weights: &[T]) -> Option<T> {
    assert_eq!(xs.len(), weights.len(), "samples and weights differ in length");
    let support = weights.iter().filter(|w| **w > T::zero()).count();
    if support < 3 {
        return None;
    }
    let total: T = weights.iter().copied().sum();
    let mu = xs.iter().zip(weights).map(|(&x, &w)| w * x).sum::<T>() / total;
    let (mut m2, mut m3) = (T::zero(), T::zero());
    for (&x, &w) in xs.iter().zip(weights) {
        let d = x - mu;
        m2 += w * d * d;
        m3 += w * d * d * d;
    }
    m2 /= total;
    m3 /= total;
    let scale = xs.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    // m2 at rounding level relative to the data scale counts as zero variance.
    if m2 <= T::epsilon() * T::of(16.0) * scale * scale {
        return None;
    }
    Some(m3 / (m2 * m2.sqrt()))
}

/// Average (mid) ranks, 1-based; ties share the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && xs[idx[j]] == xs[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j averaged
        let r = T::of_usize(i + j + 1) / T::of(2.0);
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Pearson product-moment correlation. `None` for mismatched lengths, fewer
/// than two points, or zero variance in either input.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = mean(a)?;
    let mb = mean(b)?;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return None;
    }
    let r = sab / (saa * sbb).sqrt();
    Some(r.max(-T::one()).min(T::one()))
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Spearman over the rows where both inputs are present (non-NaN).
pub fn spearman_pairwise<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let (x, y): (Vec<T>, Vec<T>) = a
        .iter()
        .zip(b)
        .filter(|(x, y)| !x.is_missing() && !y.is_missing())
        .map(|(&x, &y)| (x, y))
        .unzip();
    if x.len() < 3 {
        return None;
    }
    spearman(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn skewness_examples() {
        assert_eq!(skewness(&[1.0, 2.0, 3.0]), Some(0.0));
        // m2 = 12, m3 = 48 → 48 / 12^1.5
        let g = skewness(&[1.0, 1.0, 1.0, 9.0]).unwrap();
        assert!((g - 48.0 / 12f64.powf(1.5)).abs() < 1e-12);
        assert!((g - 1.1547005383792515).abs() < 1e-12);
        let r = skewness(&[-9.0, -1.0, -1.0, -1.0]).unwrap();
        assert!((r + g).abs() < 1e-12);
        assert_eq!(skewness(&[1.0, 2.0]), None);
        assert_eq!(skewness(&[4.0, 4.0, 4.0]), None);
    }

    #[test]
    fn spearman_examples() {
        let a: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&a, &a), Some(1.0));
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&a, &rev).unwrap() + 1.0).abs() < 1e-15);
        // mid-ranks {1, 2.5, 2.5, 4} on both sides
        let r: f64 = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 3.0, 5.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn works_in_single_precision() {
        let g = skewness(&[1.0f32, 1.0, 1.0, 9.0]).unwrap();
        assert!((g - 1.1547).abs() < 1e-4);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    proptest! {
        #[test]
        fn correlations_bounded(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40)) {
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            if let Some(r) = pearson(&a, &b) { prop_assert!(r.abs() <= 1.0); }
            if let Some(r) = spearman(&a, &b) { prop_assert!(r.abs() <= 1.0); }
        }

        #[test]
        fn skewness_reflection(v in prop::collection::vec(-1e3f64..1e3, 3..30)) {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            match (skewness(&v), skewness(&neg)) {
                (Some(a), Some(b)) => prop_assert!((a + b).abs() < 1e-6 * (1.0 + a.abs())),
                (None, None) => {}
                _ => prop_assert!(false, "reflection changed definedness"),
            }
        }
    }
}
