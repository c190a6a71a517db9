//! Plug-in entropy and mutual information over discrete samples.
//!
//! Every estimate here substitutes empirical frequencies `n_x / N` into the
//! information-theoretic definitions. All results are in bits. Summation
//! order is fixed by sorting the terms, so results do not depend on hash
//! iteration order or on the order of the samples.

mod bernoulli;
mod regime;

pub use bernoulli::{benchmark_csv, bernoulli_benchmark, BenchmarkConfig, BenchmarkRow, BENCHMARK_CSV_HEADER};
pub use regime::{check_regime, max_reliable_width, min_samples_for_width, RegimeVerdict, REGIME_CONSTANT};

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::pattern::{BinaryPattern, PatternBatch};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("empty sample")]
    EmptySample,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("{labels} labels for {patterns} patterns")]
    LengthMismatch { patterns: usize, labels: usize },
    #[error("zero count for a stored symbol")]
    ZeroCount,
    #[error("invalid benchmark parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// Occurrence counts of the observed symbols of a sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDistribution<S: Hash + Eq = BinaryPattern> {
    total: u64,
    counts: HashMap<S, u64>,
}

impl<S: Hash + Eq> EmpiricalDistribution<S> {
    pub fn from_symbols<I: IntoIterator<Item = S>>(symbols: I) -> Result<Self> {
        let mut counts = HashMap::new();
        let mut total = 0u64;
        for s in symbols {
            *counts.entry(s).or_insert(0) += 1;
            total += 1;
        }
        if total == 0 {
            return Err(EstimatorError::EmptySample);
        }
        Ok(Self { total, counts })
    }

    /// Builds a distribution from explicit `(symbol, count)` pairs. Repeated
    /// symbols accumulate.
    pub fn from_counts<I: IntoIterator<Item = (S, u64)>>(pairs: I) -> Result<Self> {
        let mut counts = HashMap::new();
        let mut total = 0u64;
        for (s, n) in pairs {
            if n == 0 {
                return Err(EstimatorError::ZeroCount);
            }
            *counts.entry(s).or_insert(0) += n;
            total += n;
        }
        if total == 0 {
            return Err(EstimatorError::EmptySample);
        }
        Ok(Self { total, counts })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct observed symbols.
    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, symbol: &S) -> u64 {
        self.counts.get(symbol).copied().unwrap_or(0)
    }

    pub fn probability(&self, symbol: &S) -> f64 {
        self.count(symbol) as f64 / self.total as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, u64)> {
        self.counts.iter().map(|(s, &n)| (s, n))
    }

    pub fn entropy(&self) -> f64 {
        entropy_from_counts(self.counts.values().copied(), self.total)
    }
}

/// `-Σ (n/N) log2 (n/N)` over the given counts, with `0 log 0 = 0`.
///
/// Clamped into `[0, log2 k]` for `k` non-zero counts, so rounding never
/// lifts a uniform distribution above its ceiling.
pub fn entropy_from_counts<I: IntoIterator<Item = u64>>(counts: I, total: u64) -> f64 {
    let mut counts: Vec<u64> = counts.into_iter().filter(|&n| n > 0).collect();
    counts.sort_unstable();
    let ceiling = (counts.len().max(1) as f64).log2();
    let n_total = total as f64;
    let mut acc = CompensatedSum::new();
    for n in counts {
        if n == total {
            continue;
        }
        let p = n as f64 / n_total;
        acc.add(-p * p.log2());
    }
    acc.value().clamp(0.0, ceiling)
}

pub fn count_patterns(batch: &PatternBatch) -> Result<EmpiricalDistribution<BinaryPattern>> {
    if batch.is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    EmpiricalDistribution::from_symbols(batch.iter())
}

pub fn plugin_entropy<S: Hash + Eq>(dist: &EmpiricalDistribution<S>) -> f64 {
    dist.entropy()
}

/// Entropy of the binary representation. For a deterministic network
/// `I(X;T) = H(T)`, so this is the input-side information estimate.
pub fn mi_input_representation(batch: &PatternBatch) -> Result<f64> {
    Ok(count_patterns(batch)?.entropy())
}

/// Co-occurrence counts of two discrete variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointCounts<A: Hash + Eq = BinaryPattern, B: Hash + Eq = u32> {
    total: u64,
    counts: HashMap<(A, B), u64>,
}

impl<A: Hash + Eq + Clone, B: Hash + Eq + Clone> JointCounts<A, B> {
    pub fn from_pairs<I: IntoIterator<Item = (A, B)>>(pairs: I) -> Result<Self> {
        let mut counts = HashMap::new();
        let mut total = 0u64;
        for pair in pairs {
            *counts.entry(pair).or_insert(0) += 1;
            total += 1;
        }
        if total == 0 {
            return Err(EstimatorError::EmptySample);
        }
        Ok(Self { total, counts })
    }

    pub fn from_counts<I: IntoIterator<Item = ((A, B), u64)>>(cells: I) -> Result<Self> {
        let mut counts = HashMap::new();
        let mut total = 0u64;
        for (pair, n) in cells {
            if n == 0 {
                return Err(EstimatorError::ZeroCount);
            }
            *counts.entry(pair).or_insert(0) += n;
            total += n;
        }
        if total == 0 {
            return Err(EstimatorError::EmptySample);
        }
        Ok(Self { total, counts })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, a: &A, b: &B) -> u64 {
        // Borrowed tuple keys are not expressible; clone for the lookup.
        self.counts.get(&(a.clone(), b.clone())).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, &B, u64)> {
        self.counts.iter().map(|((a, b), &n)| (a, b, n))
    }

    pub fn first_marginal(&self) -> EmpiricalDistribution<A> {
        let mut counts: HashMap<A, u64> = HashMap::new();
        for ((a, _), &n) in &self.counts {
            *counts.entry(a.clone()).or_insert(0) += n;
        }
        EmpiricalDistribution {
            total: self.total,
            counts,
        }
    }

    pub fn second_marginal(&self) -> EmpiricalDistribution<B> {
        let mut counts: HashMap<B, u64> = HashMap::new();
        for ((_, b), &n) in &self.counts {
            *counts.entry(b.clone()).or_insert(0) += n;
        }
        EmpiricalDistribution {
            total: self.total,
            counts,
        }
    }

    /// Same counts with the coordinates exchanged.
    pub fn swapped(&self) -> JointCounts<B, A> {
        JointCounts {
            total: self.total,
            counts: self
                .counts
                .iter()
                .map(|((a, b), &n)| ((b.clone(), a.clone()), n))
                .collect(),
        }
    }

    /// Joint entropy `H(A, B)` of the empirical joint distribution.
    pub fn joint_entropy(&self) -> f64 {
        entropy_from_counts(self.counts.values().copied(), self.total)
    }
}

impl JointCounts<BinaryPattern, u32> {
    /// Pairs pattern `i` of the batch with `labels[i]`.
    pub fn from_batch(batch: &PatternBatch, labels: &[u32]) -> Result<Self> {
        if batch.len() != labels.len() {
            return Err(EstimatorError::LengthMismatch {
                patterns: batch.len(),
                labels: labels.len(),
            });
        }
        Self::from_pairs(batch.iter().zip(labels.iter().copied()))
    }
}

/// Plug-in mutual information `Σ p̂(a,b) log2 (p̂(a,b) / (p̂(a) p̂(b)))`.
///
/// The result is clamped into `[0, min(H(A), H(B))]`; the clamp only absorbs
/// rounding of the order of a few ulps.
pub fn plugin_joint_mi<A, B>(joint: &JointCounts<A, B>) -> f64
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    let first = joint.first_marginal();
    let second = joint.second_marginal();
    let total = joint.total as u128;

    // (n_ab, n_a·n_b) keys the summation order and is symmetric in A and B
    let mut cells: Vec<(u64, u128)> = joint
        .counts
        .iter()
        .map(|((a, b), &n)| (n, first.counts[a] as u128 * second.counts[b] as u128))
        .collect();
    cells.sort_unstable();

    let n_total = joint.total as f64;
    let mut acc = CompensatedSum::new();
    for (n_ab, den) in cells {
        let num = n_ab as u128 * total;
        if num == den {
            continue;
        }
        let ratio = num as f64 / den as f64;
        acc.add(n_ab as f64 / n_total * ratio.log2());
    }
    let upper = first.entropy().min(second.entropy());
    acc.value().clamp(0.0, upper)
}

/// `Î(T;Y)` for a batch of representations and their class labels.
pub fn mi_representation_label(batch: &PatternBatch, labels: &[u32]) -> Result<f64> {
    Ok(plugin_joint_mi(&JointCounts::from_batch(batch, labels)?))
}

/// Binary entropy function `h2(p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EstimatorError::InvalidProbability(p));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    let q = 1.0 - p;
    Ok(-(p * p.log2() + q * q.log2()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_single_symbol() {
        let b = PatternBatch::from_u64s(1, &[1; 10]);
        let d = count_patterns(&b).unwrap();
        assert_eq!(d.total(), 10);
        assert_eq!(d.support_size(), 1);
        assert_eq!(d.count(&BinaryPattern::from_u64(1, 1)), 10);
        assert_eq!(plugin_entropy(&d), 0.0);
    }

    #[test]
    fn counts_two_symbols() {
        let b = PatternBatch::from_u64s(1, &[0, 1, 1, 0]);
        let d = count_patterns(&b).unwrap();
        assert_eq!(d.count(&BinaryPattern::from_u64(1, 0)), 2);
        assert_eq!(d.count(&BinaryPattern::from_u64(1, 1)), 2);
        assert_eq!(plugin_entropy(&d), 1.0);
    }

    #[test]
    fn all_twelve_bit_patterns() {
        let values: Vec<u64> = (0..4096).collect();
        let d = count_patterns(&PatternBatch::from_u64s(12, &values)).unwrap();
        assert_eq!(d.support_size(), 4096);
        assert!(d.iter().all(|(_, n)| n == 1));
        assert!((d.entropy() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert_eq!(
            count_patterns(&PatternBatch::new(4)).unwrap_err(),
            EstimatorError::EmptySample
        );
        assert_eq!(EstimatorError::EmptySample.to_string(), "empty sample");
        assert!(EmpiricalDistribution::<u8>::from_symbols([]).is_err());
    }

    #[test]
    fn entropy_examples() {
        let d = EmpiricalDistribution::from_counts([('a', 5), ('b', 5)]).unwrap();
        assert_eq!(d.entropy(), 1.0);
        let d = EmpiricalDistribution::from_counts([('a', 10)]).unwrap();
        assert_eq!(d.entropy(), 0.0);
        // -0.75 log2 0.75 - 0.25 log2 0.25, evaluated at 50 digits
        let d = EmpiricalDistribution::from_counts([('a', 3), ('b', 1)]).unwrap();
        assert!((d.entropy() - 0.811_278_124_459_132_8).abs() < 1e-15);
    }

    #[test]
    fn zero_count_rejected() {
        assert_eq!(
            EmpiricalDistribution::from_counts([('a', 0)]).unwrap_err(),
            EstimatorError::ZeroCount
        );
    }

    #[test]
    fn input_information_examples() {
        let same = PatternBatch::from_u64s(5, &[7; 100]);
        assert_eq!(mi_input_representation(&same).unwrap(), 0.0);

        let distinct: Vec<u64> = (0..10_000).collect();
        let h = mi_input_representation(&PatternBatch::from_u64s(20, &distinct)).unwrap();
        assert!((h - 10_000f64.log2()).abs() < 1e-10);
        assert!((h - 13.2877).abs() < 1e-4);

        let half = PatternBatch::from_u64s(1, &[0, 1, 0, 1, 1, 0]);
        assert_eq!(mi_input_representation(&half).unwrap(), 1.0);
    }

    #[test]
    fn mi_identity_and_constant() {
        let labels: Vec<u32> = (0..10).map(|i| i % 2).collect();
        let t = PatternBatch::from_u64s(1, &labels.iter().map(|&l| l as u64).collect::<Vec<_>>());
        assert_eq!(mi_representation_label(&t, &labels).unwrap(), 1.0);

        let constant = PatternBatch::from_u64s(3, &[5; 10]);
        let labels: Vec<u32> = (0..10).map(|i| (i * 7 % 3) as u32).collect();
        assert_eq!(mi_representation_label(&constant, &labels).unwrap(), 0.0);
    }

    #[test]
    fn mi_small_table() {
        let j = JointCounts::from_counts([((0u8, 0u8), 2), ((0, 1), 1), ((1, 0), 1), ((1, 1), 2)]).unwrap();
        // 2·(2/6)·log2(4/3) + 2·(1/6)·log2(2/3), evaluated at 50 digits
        let expected = 0.081_704_165_945_510_49;
        assert!((plugin_joint_mi(&j) - expected).abs() < 1e-15);
        assert_eq!(plugin_joint_mi(&j), plugin_joint_mi(&j.swapped()));
    }

    #[test]
    fn mi_factorised_is_exact_zero() {
        let j = JointCounts::from_counts([((0u8, 0u8), 2), ((0, 1), 4), ((1, 0), 3), ((1, 1), 6)]).unwrap();
        assert_eq!(plugin_joint_mi(&j), 0.0);
    }

    #[test]
    fn label_length_mismatch() {
        let b = PatternBatch::from_u64s(2, &[0, 1, 2]);
        assert!(matches!(
            mi_representation_label(&b, &[0, 1]),
            Err(EstimatorError::LengthMismatch { patterns: 3, labels: 2 })
        ));
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // 50-digit evaluation of h2(0.7)
        assert!((binary_entropy(0.7).unwrap() - 0.881_290_899_230_692_6).abs() < 1e-15);
        assert!(binary_entropy(1.2).is_err());
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }
}
