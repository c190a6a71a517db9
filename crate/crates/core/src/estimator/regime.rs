//! Samples-to-dimensionality reliability check for plug-in estimates.
//!
//! A width-`d` binary representation has alphabet size `k = 2^d`. The
//! estimate is treated as reliable when
//!
//! ```text
//! N >= C · k² / (log2 k)²
//! ```
//!
//! with `C = REGIME_CONSTANT`. The comparison is done in the log domain so
//! widths far beyond 64 bits are handled without overflow.

use serde::{Deserialize, Serialize};

/// Constant of the concrete reliability threshold. Any value in
/// `(0.782, 0.953]` gives 7 bits for 800 samples and 10 bits for 10 000.
pub const REGIME_CONSTANT: f64 = 0.9;

// widths beyond this are never reliable for any u64 sample count
const WIDTH_SEARCH_LIMIT: u32 = 128;

fn required_log2_samples(width: u32) -> f64 {
    let d = width as f64;
    REGIME_CONSTANT.log2() + 2.0 * d - 2.0 * d.log2()
}

/// Smallest sample count for which a width-`width` layer counts as reliable
/// (as a real number; may be infinite for very wide layers).
pub fn min_samples_for_width(width: u32) -> f64 {
    assert!(width >= 1);
    required_log2_samples(width).exp2()
}

/// Largest width `d` with `N >= C · 4^d / d²`. Always at least 1.
pub fn max_reliable_width(sample_count: u64) -> u32 {
    assert!(sample_count >= 1, "sample count must be positive");
    let log_n = (sample_count as f64).log2();
    let mut best = 1;
    for d in 2..=WIDTH_SEARCH_LIMIT {
        if log_n >= required_log2_samples(d) {
            best = d;
        } else {
            break;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub sample_count: u64,
    pub width: u32,
    pub reliable: bool,
    pub max_reliable_width: u32,
}

impl RegimeVerdict {
    /// `2^width`, when it fits in a `u128`.
    pub fn alphabet_size(&self) -> Option<u128> {
        1u128.checked_shl(self.width)
    }

    pub fn log2_alphabet_size(&self) -> f64 {
        self.width as f64
    }
}

pub fn check_regime(sample_count: u64, width: u32) -> RegimeVerdict {
    assert!(width >= 1, "width must be positive");
    let max = max_reliable_width(sample_count);
    RegimeVerdict {
        sample_count,
        width,
        reliable: width <= max,
        max_reliable_width: max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct evaluation of the threshold in floating point, no log domain.
    fn brute_max_width(n: u64) -> u32 {
        (1..=40u32)
            .filter(|&d| n as f64 >= REGIME_CONSTANT * 4f64.powi(d as i32) / (d as f64).powi(2))
            .max()
            .unwrap_or(1)
    }

    #[test]
    fn worked_examples() {
        assert_eq!(max_reliable_width(800), 7);
        assert_eq!(max_reliable_width(819), 7);
        assert_eq!(max_reliable_width(10_000), 10);
        assert_eq!(max_reliable_width(1), 1);
    }

    #[test]
    fn verdicts() {
        assert!(!check_regime(800, 8).reliable);
        assert!(check_regime(10_000, 10).reliable);
        let v = check_regime(10_000, 11);
        assert!(!v.reliable);
        assert_eq!(v.max_reliable_width, 10);
        assert_eq!(v.alphabet_size(), Some(2048));
        assert_eq!(check_regime(5, 200).alphabet_size(), None);
    }

    #[test]
    fn width_eleven_threshold() {
        // 0.9 · 2^22 / 121 ≈ 31 197 samples are needed for 11 bits
        let need = min_samples_for_width(11);
        assert!((need - 0.9 * 4_194_304.0 / 121.0).abs() < 1e-6);
        assert_eq!(max_reliable_width(need.ceil() as u64), 11);
        assert_eq!(max_reliable_width(need.floor() as u64), 10);
    }

    #[test]
    fn matches_direct_threshold() {
        let mut n = 1u64;
        while n < 1 << 40 {
            assert_eq!(max_reliable_width(n), brute_max_width(n), "n = {n}");
            n = n * 3 / 2 + 1;
        }
    }

    #[test]
    fn monotone_in_samples() {
        let mut prev = 0;
        for n in 1..50_000u64 {
            let w = max_reliable_width(n);
            assert!(w >= prev);
            prev = w;
        }
    }
}
