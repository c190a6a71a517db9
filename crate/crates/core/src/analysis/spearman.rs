use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{AnalysisError, Result};

/// Largest sample size for which the p-value is computed by enumerating
/// every permutation.
pub const EXACT_PERMUTATION_MAX_N: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spearman {
    pub n: usize,
    pub r_s: f64,
    pub p_value: f64,
    /// `true` when `p_value` comes from the exact permutation distribution.
    pub exact: bool,
}

/// Ranks starting at 1, tied values sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    Ok(doubled_ranks(values)?.into_iter().map(|r| r as f64 / 2.0).collect())
}

/// Twice the average ranks, which are always integers.
fn doubled_ranks(values: &[f64]) -> Result<Vec<i64>> {
    if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite(v));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0i64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1, whose mean doubled is i+j+2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as i64;
        }
        i = j + 1;
    }
    Ok(ranks)
}

struct RankMoments {
    a: Vec<i64>,
    b: Vec<i64>,
    var_a: i128,
    var_b: i128,
}

impl RankMoments {
    fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(AnalysisError::LengthMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        if xs.len() < 3 {
            return Err(AnalysisError::TooFewSamples {
                n: xs.len(),
                required: 3,
            });
        }
        let a = doubled_ranks(xs)?;
        let b = doubled_ranks(ys)?;
        let var_a = scaled_var(&a);
        let var_b = scaled_var(&b);
        if var_a == 0 || var_b == 0 {
            return Err(AnalysisError::ConstantInput);
        }
        Ok(Self { a, b, var_a, var_b })
    }

    fn cov(&self, b: &[i64]) -> i128 {
        let n = self.a.len() as i128;
        let sab: i128 = self.a.iter().zip(b).map(|(&x, &y)| (x * y) as i128).sum();
        let sa: i128 = self.a.iter().map(|&x| x as i128).sum();
        let sb: i128 = b.iter().map(|&y| y as i128).sum();
        n * sab - sa * sb
    }

    fn r(&self, cov: i128) -> f64 {
        let r = cov as f64 / ((self.var_a as f64) * (self.var_b as f64)).sqrt();
        r.clamp(-1.0, 1.0)
    }
}

/// `n·Σx² − (Σx)²`.
fn scaled_var(x: &[i64]) -> i128 {
    let n = x.len() as i128;
    let s: i128 = x.iter().map(|&v| v as i128).sum();
    let s2: i128 = x.iter().map(|&v| (v * v) as i128).sum();
    n * s2 - s * s
}

/// Spearman's rank correlation: the Pearson correlation of the average
/// ranks. The two-sided p-value is exact for `n ≤ 8` and otherwise uses
/// the Student-t approximation with `n − 2` degrees of freedom.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Spearman> {
    let m = RankMoments::new(xs, ys)?;
    let n = xs.len();
    let cov = m.cov(&m.b);
    let r_s = m.r(cov);
    if n <= EXACT_PERMUTATION_MAX_N {
        Ok(Spearman {
            n,
            r_s,
            p_value: exact_p_value(&m, cov),
            exact: true,
        })
    } else {
        Ok(Spearman {
            n,
            r_s,
            p_value: t_approx_p_value(r_s, n),
            exact: false,
        })
    }
}

/// Two-sided p-value of `r_s` under the t-approximation
/// `t = r·sqrt((n−2)/(1−r²))`. Perfect correlation gives 0.
pub fn t_approx_p_value(r_s: f64, n: usize) -> f64 {
    if r_s.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r_s * (df / (1.0 - r_s * r_s)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Fraction of the `n!` rank permutations whose correlation is at least as
/// extreme as the observed one.
fn exact_p_value(m: &RankMoments, observed_cov: i128) -> f64 {
    let target = observed_cov.abs();
    let mut perm = m.b.clone();
    let mut extreme = 0u64;
    let mut total = 0u64;
    for_each_permutation(&mut perm, |p| {
        total += 1;
        if m.cov(p).abs() >= target {
            extreme += 1;
        }
    });
    extreme as f64 / total as f64
}

/// Heap's algorithm, visiting all `n!` orderings of `items` in place.
fn for_each_permutation<T, F: FnMut(&[T])>(items: &mut [T], mut visit: F) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().r_s, 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().r_s, -1.0);
        let s = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((s.r_s - 0.8).abs() < 1e-15);
        // 16 of the 120 permutations reach |r| ≥ 0.8
        assert_eq!(s.p_value, 16.0 / 120.0);
        assert!(s.exact);
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]).unwrap(), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(average_ranks(&[7.0, 7.0, 7.0]).unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0]),
            Err(AnalysisError::TooFewSamples { n: 2, .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(AnalysisError::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(AnalysisError::ConstantInput)
        ));
        assert!(matches!(
            spearman(&[1.0, f64::NAN, 1.0], &[1.0, 2.0, 3.0]),
            Err(AnalysisError::NonFinite(_))
        ));
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut items = [0u8, 1, 2, 3, 4];
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(&mut items, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn t_approximation_known_values() {
        // r = 0.5, n = 12: t² = 10/3 on 10 degrees of freedom
        let p = t_approx_p_value(0.5, 12);
        assert!((p - 0.097_854_614_257_812_5).abs() < 1e-9, "{p}");
        assert_eq!(t_approx_p_value(-1.0, 20), 0.0);
        assert_eq!(t_approx_p_value(0.0, 20), 1.0);
    }

    #[test]
    fn approximation_tracks_permutation_distribution() {
        for n in 6..=EXACT_PERMUTATION_MAX_N {
            let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let m = RankMoments::new(&xs, &xs).unwrap();
            let mut covs = Vec::new();
            let mut perm = m.b.clone();
            for_each_permutation(&mut perm, |p| covs.push(m.cov(p).abs()));
            covs.sort_unstable();
            let total = covs.len() as f64;
            let mut distinct = covs.clone();
            distinct.dedup();
            for c in distinct {
                let r = m.r(c);
                if r >= 0.9 {
                    continue;
                }
                let exact = covs.iter().filter(|&&v| v >= c).count() as f64 / total;
                let approx = t_approx_p_value(r, n);
                assert!(
                    (approx - exact).abs() <= 0.05,
                    "n {n} r {r} exact {exact} approx {approx}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn bounded_and_symmetric(pairs in prop::collection::vec((-50i32..50, -50i32..50), 3..30)) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            match (spearman(&xs, &ys), spearman(&ys, &xs)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((-1.0..=1.0).contains(&a.r_s));
                    prop_assert!((0.0..=1.0).contains(&a.p_value));
                    prop_assert_eq!(a.r_s, b.r_s);
                    prop_assert_eq!(a.p_value, b.p_value);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }

        #[test]
        fn invariant_under_increasing_transform(pairs in prop::collection::vec((-50i32..50, -50i32..50), 3..30)) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let tx: Vec<f64> = xs.iter().map(|x| (x / 10.0).exp() * 3.0 + 1.0).collect();
            if let Ok(a) = spearman(&xs, &ys) {
                let b = spearman(&tx, &ys).unwrap();
                prop_assert_eq!(a.r_s, b.r_s);
                prop_assert_eq!(a.p_value, b.p_value);
            }
        }
    }
}
