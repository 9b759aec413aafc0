//! Summary statistics over inaccuracy samples, band shares, the
//! shortfall/overestimate conversion, a two-sample separation test and
//! percentile bootstrap intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::quantile_sorted;
use crate::error::{Error, Result};
use crate::scalar::{count, Scalar};

/// Combined sample sizes up to this use exhaustive permutation in
/// [`separation_test`]; C(12, 6) = 924 assignments at most.
pub const EXACT_TEST_MAX_N: usize = 12;

pub const METHOD_EXACT: &str = "mann_whitney_u_exact_permutation";
pub const METHOD_NORMAL: &str = "mann_whitney_u_normal_tie_corrected";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats<T> {
    pub n: usize,
    pub mean: T,
    /// Sample standard deviation (n - 1 denominator); absent when n = 1.
    pub sd: Option<T>,
}

fn sorted_copy<T: Scalar>(sample: &[T]) -> Result<Vec<T>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("sample contains NaN"));
    }
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(v)
}

/// Count, mean and sample standard deviation.
///
/// Sums run over a sorted copy, so the result does not depend on the order
/// of the input.
pub fn summarize<T: Scalar>(sample: &[T]) -> Result<SummaryStats<T>> {
    let v = sorted_copy(sample)?;
    let n = v.len();
    let mean = v.iter().copied().sum::<T>() / count(n);
    let sd = (n >= 2).then(|| {
        let ss: T = v.iter().map(|&x| (x - mean) * (x - mean)).sum();
        (ss / count(n - 1)).sqrt()
    });
    Ok(SummaryStats { n, mean, sd })
}

fn share<T: Scalar>(sample: &[T], pred: impl Fn(T) -> bool) -> Result<T> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let hits = sample.iter().filter(|&&x| pred(x)).count();
    Ok(count::<T>(hits) / count(sample.len()))
}

/// Fraction of values strictly above zero.
pub fn share_overrun<T: Scalar>(sample: &[T]) -> Result<T> {
    share(sample, |x| x > T::zero())
}

/// Fraction of values at or below zero; complements [`share_overrun`].
pub fn share_non_positive<T: Scalar>(sample: &[T]) -> Result<T> {
    share(sample, |x| x <= T::zero())
}

/// Fraction of values with `|x| > band` (strict).
pub fn share_outside_band<T: Scalar>(sample: &[T], band: T) -> Result<T> {
    if !(band > T::zero()) {
        return Err(Error::invalid(format!("band {band} must be positive")));
    }
    share(sample, |x| x.abs() > band)
}

/// Converts an inaccuracy `i` (actual vs. estimate, in percent) into the
/// percentage by which the estimate exceeds the actual: `-100 i / (100 + i)`.
pub fn shortfall_to_overestimate<T: Scalar>(inaccuracy: T) -> Result<T> {
    if !(inaccuracy > -T::hundred()) {
        return Err(Error::invalid(format!("inaccuracy {inaccuracy} must be above -100%")));
    }
    Ok(-T::hundred() * inaccuracy / (T::hundred() + inaccuracy))
}

/// Inverse of [`shortfall_to_overestimate`]: `-100 o / (100 + o)`.
pub fn overestimate_to_shortfall<T: Scalar>(overestimate: T) -> Result<T> {
    if !(overestimate > -T::hundred()) {
        return Err(Error::invalid(format!("overestimate {overestimate} must be above -100%")));
    }
    Ok(-T::hundred() * overestimate / (T::hundred() + overestimate))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: String,
}

fn check_test_samples<T: Scalar>(a: &[T], b: &[T]) -> Result<()> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: s.len() });
        }
        if s.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("sample contains NaN"));
        }
    }
    Ok(())
}

/// Two-sided Mann-Whitney U test of whether `a` and `b` come from the same
/// distribution. The statistic is U for `a`.
///
/// Exhaustive permutation when the combined size is at most
/// [`EXACT_TEST_MAX_N`], otherwise the normal approximation with tie and
/// continuity correction.
pub fn separation_test<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult> {
    check_test_samples(a, b)?;
    if a.len() + b.len() <= EXACT_TEST_MAX_N {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Exact permutation p-value. Enumerates every assignment of the pooled
/// values to a group of size `a.len()` and counts those at least as far from
/// the null centre as the observed split. Works in doubled U so ties stay
/// integral.
pub fn mann_whitney_exact<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult> {
    check_test_samples(a, b)?;
    let pooled: Vec<T> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    if n > 20 {
        return Err(Error::invalid(format!("exact test limited to 20 values, got {n}")));
    }
    let k = a.len();
    // score[i][j] = 2 if x_i > x_j, 1 if tied, 0 otherwise
    let score: Vec<Vec<i64>> = pooled
        .iter()
        .map(|&x| {
            pooled
                .iter()
                .map(|&y| {
                    if x > y {
                        2
                    } else if x == y {
                        1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let doubled_u = |in_a: &[bool]| -> i64 {
        let mut s = 0;
        for i in (0..n).filter(|&i| in_a[i]) {
            for j in (0..n).filter(|&j| !in_a[j]) {
                s += score[i][j];
            }
        }
        s
    };
    let centre = (k * (n - k)) as i64;

    let mut membership = vec![false; n];
    membership[..k].iter_mut().for_each(|m| *m = true);
    let observed = doubled_u(&membership);
    let threshold = (observed - centre).abs();

    let mut idx: Vec<usize> = (0..k).collect();
    let (mut extreme, mut total) = (0u64, 0u64);
    loop {
        membership.iter_mut().for_each(|m| *m = false);
        for &i in &idx {
            membership[i] = true;
        }
        total += 1;
        if (doubled_u(&membership) - centre).abs() >= threshold {
            extreme += 1;
        }
        // next k-combination in lexicographic order
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else { break };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
    Ok(TestResult {
        statistic: observed as f64 / 2.0,
        p_value: extreme as f64 / total as f64,
        method: METHOD_EXACT.to_string(),
    })
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn mann_whitney_normal<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult> {
    check_test_samples(a, b)?;
    let mut pooled: Vec<(f64, bool)> =
        a.iter().map(|v| (v.to_f64_lossy(), true)).chain(b.iter().map(|v| (v.to_f64_lossy(), false))).collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("no NaN"));

    let n = pooled.len();
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += mid_rank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nf = n as f64;
    let var = n1 * n2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * Normal::standard().sf(z)).min(1.0)
    };
    Ok(TestResult { statistic: u, p_value, method: METHOD_NORMAL.to_string() })
}

/// Statistic whose sampling distribution a bootstrap estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic<T> {
    Mean,
    Quantile(T),
}

impl<T: Scalar> Statistic<T> {
    pub fn evaluate(&self, sample: &[T]) -> Result<T> {
        match *self {
            Statistic::Mean => {
                if sample.is_empty() {
                    return Err(Error::EmptySample);
                }
                Ok(sample.iter().copied().sum::<T>() / count(sample.len()))
            }
            Statistic::Quantile(q) => quantile_sorted(&sorted_copy(sample)?, q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
    pub level: T,
}

fn check_level<T: Scalar>(level: T) -> Result<()> {
    if level > T::zero() && level < T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!("confidence level {level} outside (0, 1)")))
    }
}

/// Percentile interval from replicate statistics: drops
/// `floor(B (1 - level) / 2)` replicates from each tail.
pub fn percentile_interval<T: Scalar>(replicates: &[T], level: T) -> Result<Interval<T>> {
    check_level(level)?;
    let sorted = sorted_copy(replicates)?;
    let b = sorted.len();
    let tail = (count::<T>(b) * (T::one() - level) / T::lit(2.0) + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min((b - 1) / 2);
    Ok(Interval { lower: sorted[tail], upper: sorted[b - 1 - tail], level })
}

/// Percentile bootstrap interval for `statistic`. Resampling is sequential
/// from a ChaCha8 stream seeded with `seed`, so equal inputs give equal
/// intervals.
pub fn bootstrap_ci<T: Scalar>(
    sample: &[T],
    statistic: Statistic<T>,
    level: T,
    reps: usize,
    seed: u64,
) -> Result<Interval<T>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    check_level(level)?;
    if reps == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sample.len();
    let mut resample = vec![T::zero(); n];
    let mut replicates = Vec::with_capacity(reps);
    for _ in 0..reps {
        for slot in resample.iter_mut() {
            *slot = sample[rng.random_range(0..n)];
        }
        replicates.push(statistic.evaluate(&resample)?);
    }
    percentile_interval(&replicates, level)
}
