use std::collections::HashSet;

use ndarray::Array2;
use proptest::prelude::*;

use ipbnn::bnn::{evaluate_accuracy, extract_binary_activations, ArchitectureSpec, BnnModel};
use ipbnn::data::LabeledDataset;
use ipbnn::estimator::{
    bernoulli_benchmark, check_regime, count_patterns, max_reliable_width, plugin_entropy, plugin_joint_mi,
    BenchmarkConfig, EmpiricalDistribution, JointCounts,
};
use ipbnn::pattern::{BinaryPattern, PatternBatch};

fn batch_strategy() -> impl Strategy<Value = (usize, Vec<u64>)> {
    (1usize..=12).prop_flat_map(|d| (Just(d), prop::collection::vec(0u64..(1 << d), 1..300)))
}

proptest! {
    #[test]
    fn entropy_bounded_by_samples_and_width((d, values) in batch_strategy()) {
        let batch = PatternBatch::from_u64s(d, &values);
        let h = plugin_entropy(&count_patterns(&batch).unwrap());
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (values.len() as f64).log2());
        prop_assert!(h <= d as f64);
    }

    #[test]
    fn counts_sum_to_total(symbols in prop::collection::vec(0u16..40, 1..300)) {
        let dist = EmpiricalDistribution::from_symbols(symbols.iter().copied()).unwrap();
        prop_assert_eq!(dist.total(), symbols.len() as u64);
        prop_assert_eq!(dist.iter().map(|(_, n)| n).sum::<u64>(), dist.total());
        prop_assert!(dist.iter().all(|(_, n)| n >= 1));
        prop_assert_eq!(dist.support_size(), symbols.iter().collect::<HashSet<_>>().len());
    }

    #[test]
    fn entropy_invariant_under_renaming(symbols in prop::collection::vec(0u32..50, 1..300), salt in any::<u32>()) {
        let h = plugin_entropy(&EmpiricalDistribution::from_symbols(symbols.iter().copied()).unwrap());
        // x ↦ (x · odd) ^ salt is a bijection on u32
        let renamed = symbols.iter().map(|&x| x.wrapping_mul(2_654_435_761) ^ salt);
        let h2 = plugin_entropy(&EmpiricalDistribution::from_symbols(renamed).unwrap());
        prop_assert_eq!(h, h2);
    }

    #[test]
    fn joint_mi_bounds_and_symmetry(pairs in prop::collection::vec((0u32..16, 0u32..5), 1..300)) {
        let joint = JointCounts::from_pairs(pairs.iter().copied()).unwrap();
        let mi = plugin_joint_mi(&joint);
        let ha = plugin_entropy(&joint.first_marginal());
        let hb = plugin_entropy(&joint.second_marginal());
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= ha.min(hb));
        prop_assert_eq!(mi, plugin_joint_mi(&joint.swapped()));

        let direct_a = EmpiricalDistribution::from_symbols(pairs.iter().map(|p| p.0)).unwrap();
        let direct_b = EmpiricalDistribution::from_symbols(pairs.iter().map(|p| p.1)).unwrap();
        prop_assert_eq!(joint.first_marginal(), direct_a);
        prop_assert_eq!(joint.second_marginal(), direct_b);
        prop_assert_eq!(joint.total(), pairs.len() as u64);
    }

    #[test]
    fn factorised_joint_has_zero_mi(
        a in prop::collection::vec(1u64..20, 1..8),
        b in prop::collection::vec(1u64..20, 1..6),
    ) {
        let cells = a.iter().enumerate().flat_map(|(i, &na)| {
            b.iter().enumerate().map(move |(j, &nb)| ((i as u32, j as u32), na * nb))
        });
        let joint = JointCounts::from_counts(cells).unwrap();
        prop_assert_eq!(plugin_joint_mi(&joint), 0.0);
    }

    #[test]
    fn pattern_words_are_canonical(width in 1usize..200, words in prop::collection::vec(any::<u64>(), 4)) {
        let n = width.div_ceil(64);
        let p = BinaryPattern::from_words(width, &words[..n]);
        prop_assert_eq!(p.words().len(), n);
        if width % 64 != 0 {
            prop_assert_eq!(p.words()[n - 1] >> (width % 64), 0);
        }
        for bit in 0..width {
            prop_assert_eq!(p.get(bit), words[bit / 64] >> (bit % 64) & 1 == 1);
        }
        let rebuilt = BinaryPattern::from_bits((0..width).map(|b| p.get(b)));
        prop_assert_eq!(rebuilt, p);
    }

    #[test]
    fn regime_verdict_matches_threshold(n in 1u64..10_000_000, width in 1u32..40) {
        let v = check_regime(n, width);
        prop_assert_eq!(v.reliable, width <= max_reliable_width(n));
        prop_assert_eq!(v.max_reliable_width, max_reliable_width(n));
    }

    #[test]
    fn evaluation_is_pure_and_batch_independent(seed in 0u64..1000, rows in 2usize..12) {
        let mut model = BnnModel::new(ArchitectureSpec::new(5, vec![6, 4], 3), seed).unwrap();
        model.eval();
        let x = Array2::from_shape_fn((rows, 5), |(i, j)| ((i * 7 + j * 3 + seed as usize) % 11) as f64 / 10.0);
        let a = extract_binary_activations(&model, x.view()).unwrap();
        prop_assert_eq!(&a, &extract_binary_activations(&model, x.view()).unwrap());
        prop_assert_eq!(model.forward(x.view()).unwrap(), model.forward(x.view()).unwrap());
        for i in 0..rows {
            let single = extract_binary_activations(&model, x.slice(ndarray::s![i..i + 1, ..])).unwrap();
            for (layer, batch) in a.iter().enumerate() {
                prop_assert_eq!(single[layer].get(0), batch.get(i));
            }
        }
        let labels: Vec<usize> = (0..rows).map(|i| i % 3).collect();
        let ds = LabeledDataset::new("p", x, labels, 3).unwrap();
        prop_assert_eq!(evaluate_accuracy(&model, &ds).unwrap(), evaluate_accuracy(&model, &ds).unwrap());
    }
}

#[test]
fn plugin_error_shrinks_as_samples_double() {
    for d in 1..=4 {
        let errors: Vec<f64> = [100, 200, 400, 800, 1600, 3200, 6400]
            .iter()
            .map(|&n| {
                let rows = bernoulli_benchmark(&BenchmarkConfig {
                    sample_count: n,
                    dims: d..=d,
                    ps: vec![0.5],
                    repetitions: 60,
                    seed: 17,
                })
                .unwrap();
                // the estimate never exceeds log2 of the alphabet, here the
                // true entropy, so |mean error| is the mean absolute error
                rows[0].true_entropy - rows[0].mean_estimate
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "D = {d}: {errors:?}");
        }
    }
}
