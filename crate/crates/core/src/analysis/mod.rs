//! Information-plane trajectories and end-of-training statistics.

mod spearman;

pub use spearman::{average_ranks, spearman, t_approx_p_value, Spearman, EXACT_PERMUTATION_MAX_N};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::RegimeVerdict;
use crate::numeric::mean;

/// Number of trailing epochs aggregated at the end of training.
pub const DEFAULT_WINDOW: usize = 50;

/// Slack allowed above the layer width for `mi_xt`.
const WIDTH_TOLERANCE: f64 = 1e-9;

pub const SUMMARY_CSV_HEADER: &str = "dataset,group,run_id,seed,lambda,layer_offset,width,reliable,mi_xt_max,\
mi_xt_last50_mean,mi_ty_last50_mean,rho,acc_last50_mean,acc_last50_min,acc_last50_max";
pub const CORRELATION_CSV_HEADER: &str = "dataset,group,layer_offset,n,r_s,p_value";

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("empty series")]
    Empty,
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{n} samples, at least {required} required")]
    TooFewSamples { n: usize, required: usize },
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("epoch {epoch} does not follow epoch {previous}")]
    EpochOrder { previous: u32, epoch: u32 },
    #[error("invalid mutual information {value} for a width-{width} layer")]
    InvalidMi { value: f64, width: usize },
    #[error("no layer with offset {0}")]
    MissingLayer(i32),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpPoint {
    pub epoch: u32,
    pub mi_xt: f64,
    pub mi_ty: f64,
    /// Validation accuracy in percent at this epoch.
    pub accuracy: f64,
}

/// Per-epoch information-plane coordinates of one hidden layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpTrajectory {
    /// `-1` is the last hidden layer.
    pub layer_offset: i32,
    pub width: usize,
    points: Vec<IpPoint>,
}

impl IpTrajectory {
    pub fn new(layer_offset: i32, width: usize) -> Self {
        Self {
            layer_offset,
            width,
            points: Vec::new(),
        }
    }

    pub fn from_points(layer_offset: i32, width: usize, points: impl IntoIterator<Item = IpPoint>) -> Result<Self> {
        let mut t = Self::new(layer_offset, width);
        for p in points {
            t.push(p)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, point: IpPoint) -> Result<()> {
        if let Some(last) = self.points.last() {
            if point.epoch <= last.epoch {
                return Err(AnalysisError::EpochOrder {
                    previous: last.epoch,
                    epoch: point.epoch,
                });
            }
        }
        for v in [point.mi_xt, point.mi_ty, point.accuracy] {
            if !v.is_finite() {
                return Err(AnalysisError::NonFinite(v));
            }
        }
        for v in [point.mi_xt, point.mi_ty] {
            if v < 0.0 || v > self.width as f64 + WIDTH_TOLERANCE {
                return Err(AnalysisError::InvalidMi {
                    value: v,
                    width: self.width,
                });
            }
        }
        self.points.push(point);
        Ok(())
    }

    pub fn points(&self) -> &[IpPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn epochs(&self) -> Vec<u32> {
        self.points.iter().map(|p| p.epoch).collect()
    }

    pub fn mi_xt(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mi_xt).collect()
    }

    pub fn mi_ty(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mi_ty).collect()
    }

    pub fn accuracy(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.accuracy).collect()
    }
}

/// Records covering the last `window` epochs when every `stride`-th epoch is
/// recorded: `ceil(window / stride)`.
pub fn window_records(window: usize, stride: usize) -> usize {
    window.div_ceil(stride.max(1))
}

/// Mean of the final `min(k, len)` values.
pub fn last_k_mean(series: &[f64], k: usize) -> Result<f64> {
    Ok(mean(last_k(series, k)?))
}

fn last_k(series: &[f64], k: usize) -> Result<&[f64]> {
    if series.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if k == 0 {
        return Err(AnalysisError::ZeroWindow);
    }
    Ok(&series[series.len().saturating_sub(k)..])
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `ρ = (Î_max − Ī_window) / Î_max` over `mi_xt`, with `ρ = 0` when
/// `Î_max = 0`. `window` counts records.
pub fn compression_factor(trajectory: &IpTrajectory, window: usize) -> Result<f64> {
    compression_factor_of(&trajectory.mi_xt(), window)
}

pub fn compression_factor_of(mi_xt: &[f64], window: usize) -> Result<f64> {
    let tail = last_k(mi_xt, window)?;
    let max = max_of(mi_xt);
    if max <= 0.0 {
        return Ok(0.0);
    }
    // mean of the gaps, so a constant tail gives exactly zero
    let gaps: Vec<f64> = tail.iter().map(|&v| max - v).collect();
    Ok((mean(&gaps) / max).clamp(0.0, 1.0))
}

/// Identifies a run inside a collection of summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub config_hash: String,
    pub dataset: String,
    /// Architecture preset plus variant parameters; correlations pool
    /// every run of a group.
    pub group: String,
    pub seed: u64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer_offset: i32,
    pub width: usize,
    pub reliable: bool,
    pub regime: RegimeVerdict,
    pub mi_xt_max: f64,
    /// Epoch at which `mi_xt_max` is first reached.
    pub mi_xt_argmax_epoch: u32,
    pub mi_xt_last_mean: f64,
    pub mi_xt_last_min: f64,
    pub mi_xt_last_max: f64,
    pub mi_ty_last_mean: f64,
    pub rho: f64,
    pub acc_last_mean: f64,
    pub acc_last_min: f64,
    pub acc_last_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub meta: RunMeta,
    /// Records per window.
    pub window: usize,
    pub layers: Vec<LayerSummary>,
}

impl RunSummary {
    pub fn layer(&self, offset: i32) -> Option<&LayerSummary> {
        self.layers.iter().find(|l| l.layer_offset == offset)
    }
}

/// Summarises one run. `regimes[i]` belongs to `trajectories[i]`;
/// unreliable layers are flagged and kept.
pub fn build_run_summary(
    meta: RunMeta,
    trajectories: &[IpTrajectory],
    regimes: &[RegimeVerdict],
    window: usize,
) -> Result<RunSummary> {
    if trajectories.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if trajectories.len() != regimes.len() {
        return Err(AnalysisError::LengthMismatch {
            left: trajectories.len(),
            right: regimes.len(),
        });
    }
    let mut layers = Vec::with_capacity(trajectories.len());
    for (t, regime) in trajectories.iter().zip(regimes) {
        let mi_xt = t.mi_xt();
        let mi_ty = t.mi_ty();
        let acc = t.accuracy();
        let tail_xt = last_k(&mi_xt, window)?;
        let tail_acc = last_k(&acc, window)?;
        let mi_xt_max = max_of(&mi_xt);
        let argmax = mi_xt.iter().position(|&v| v == mi_xt_max).expect("non-empty");
        layers.push(LayerSummary {
            layer_offset: t.layer_offset,
            width: t.width,
            reliable: regime.reliable,
            regime: *regime,
            mi_xt_max,
            mi_xt_argmax_epoch: t.points[argmax].epoch,
            mi_xt_last_mean: mean(tail_xt),
            mi_xt_last_min: min_of(tail_xt),
            mi_xt_last_max: max_of(tail_xt),
            mi_ty_last_mean: last_k_mean(&mi_ty, window)?,
            rho: compression_factor_of(&mi_xt, window)?,
            acc_last_mean: mean(tail_acc),
            acc_last_min: min_of(tail_acc),
            acc_last_max: max_of(tail_acc),
        });
    }
    Ok(RunSummary { meta, window, layers })
}

/// One `(Ī(X;T), accuracy)` point per run containing the layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiAccuracyPoint {
    pub lambda: f64,
    pub seed: u64,
    pub mi_xt_mean: f64,
    pub mi_xt_min: f64,
    pub mi_xt_max: f64,
    pub acc_mean: f64,
    pub acc_min: f64,
    pub acc_max: f64,
}

pub fn per_run_points(summaries: &[RunSummary], layer_offset: i32) -> Vec<MiAccuracyPoint> {
    summaries
        .iter()
        .filter_map(|s| {
            s.layer(layer_offset).map(|l| MiAccuracyPoint {
                lambda: s.meta.lambda,
                seed: s.meta.seed,
                mi_xt_mean: l.mi_xt_last_mean,
                mi_xt_min: l.mi_xt_last_min,
                mi_xt_max: l.mi_xt_last_max,
                acc_mean: l.acc_last_mean,
                acc_min: l.acc_last_min,
                acc_max: l.acc_last_max,
            })
        })
        .collect()
}

/// Per-λ aggregates: window means averaged over runs, ranges pooled
/// (min of mins, max of maxes). Sorted by λ; `seed` is the run count.
pub fn pooled_by_lambda(summaries: &[RunSummary], layer_offset: i32) -> Vec<MiAccuracyPoint> {
    let mut groups: BTreeMap<u64, Vec<MiAccuracyPoint>> = BTreeMap::new();
    for p in per_run_points(summaries, layer_offset) {
        groups.entry(lambda_key(p.lambda)).or_default().push(p);
    }
    groups
        .into_values()
        .map(|ps| {
            let field = |f: fn(&MiAccuracyPoint) -> f64| ps.iter().map(f).collect::<Vec<f64>>();
            MiAccuracyPoint {
                lambda: ps[0].lambda,
                seed: ps.len() as u64,
                mi_xt_mean: mean(&field(|p| p.mi_xt_mean)),
                mi_xt_min: min_of(&field(|p| p.mi_xt_min)),
                mi_xt_max: max_of(&field(|p| p.mi_xt_max)),
                acc_mean: mean(&field(|p| p.acc_mean)),
                acc_min: min_of(&field(|p| p.acc_min)),
                acc_max: max_of(&field(|p| p.acc_max)),
            }
        })
        .collect()
}

/// Order-preserving key for non-negative λ.
fn lambda_key(lambda: f64) -> u64 {
    lambda.to_bits()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRow {
    pub dataset: String,
    pub group: String,
    pub layer_offset: i32,
    pub n: usize,
    pub r_s: f64,
    pub p_value: f64,
}

/// Spearman correlation between `Ī(X;T)` and mean accuracy over every
/// summary containing the layer. Negative `r_s` means more compressed
/// representations go with higher accuracy.
pub fn correlate_group(summaries: &[RunSummary], layer_offset: i32) -> Result<Spearman> {
    let points = per_run_points(summaries, layer_offset);
    if points.len() < 3 {
        if points.is_empty() && !summaries.is_empty() {
            return Err(AnalysisError::MissingLayer(layer_offset));
        }
        return Err(AnalysisError::TooFewSamples {
            n: points.len(),
            required: 3,
        });
    }
    let mi: Vec<f64> = points.iter().map(|p| p.mi_xt_mean).collect();
    let acc: Vec<f64> = points.iter().map(|p| p.acc_mean).collect();
    spearman(&mi, &acc)
}

/// Correlation rows for every `(dataset, group, layer_offset)`, plus one
/// diagnostic per combination that could not be correlated.
pub fn correlation_table(summaries: &[RunSummary]) -> (Vec<CorrelationRow>, Vec<String>) {
    let mut groups: BTreeMap<(String, String, i32), Vec<RunSummary>> = BTreeMap::new();
    for s in summaries {
        for l in &s.layers {
            groups
                .entry((s.meta.dataset.clone(), s.meta.group.clone(), l.layer_offset))
                .or_default()
                .push(s.clone());
        }
    }
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    // BTreeMap orders offsets ascending; emit from the last hidden layer down
    let mut keys: Vec<_> = groups.keys().cloned().collect();
    keys.sort_by(|a, b| (&a.0, &a.1, b.2).cmp(&(&b.0, &b.1, a.2)));
    for key in keys {
        let members = &groups[&key];
        match correlate_group(members, key.2) {
            Ok(s) => rows.push(CorrelationRow {
                dataset: key.0,
                group: key.1,
                layer_offset: key.2,
                n: s.n,
                r_s: s.r_s,
                p_value: s.p_value,
            }),
            Err(e) => diagnostics.push(format!("{}/{} layer {}: {e}", key.0, key.1, key.2)),
        }
    }
    (rows, diagnostics)
}

pub fn summary_csv(summaries: &[RunSummary]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in summaries {
        for l in &s.layers {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.meta.dataset,
                s.meta.group,
                s.meta.run_id,
                s.meta.seed,
                s.meta.lambda,
                l.layer_offset,
                l.width,
                l.reliable,
                l.mi_xt_max,
                l.mi_xt_last_mean,
                l.mi_ty_last_mean,
                l.rho,
                l.acc_last_mean,
                l.acc_last_min,
                l.acc_last_max
            );
        }
    }
    out
}

pub fn correlation_csv(rows: &[CorrelationRow]) -> String {
    let mut out = String::from(CORRELATION_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset, r.group, r.layer_offset, r.n, r.r_s, r.p_value
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::check_regime;
    use proptest::prelude::*;

    fn traj(offset: i32, width: usize, mi: &[f64], acc: &[f64]) -> IpTrajectory {
        IpTrajectory::from_points(
            offset,
            width,
            mi.iter().zip(acc).enumerate().map(|(e, (&m, &a))| IpPoint {
                epoch: e as u32,
                mi_xt: m,
                mi_ty: m.min(1.0),
                accuracy: a,
            }),
        )
        .unwrap()
    }

    fn meta(seed: u64, lambda: f64) -> RunMeta {
        RunMeta {
            run_id: format!("r{seed}-{lambda}"),
            config_hash: "h".into(),
            dataset: "d".into(),
            group: "g".into(),
            seed,
            lambda,
        }
    }

    #[test]
    fn rho_examples() {
        let mut mi = vec![10.0; 10];
        mi.extend(vec![7.5; 50]);
        assert_eq!(compression_factor_of(&mi, 50).unwrap(), 0.25);
        assert_eq!(compression_factor_of(&[3.0; 80], 50).unwrap(), 0.0);
        let rising: Vec<f64> = (1..=100).map(f64::from).collect();
        let rho = compression_factor_of(&rising, 50).unwrap();
        // tail mean 75.5 against a maximum of 100
        assert!((rho - 0.245).abs() < 1e-15);
        assert_eq!(compression_factor_of(&[0.0, 0.0], 50).unwrap(), 0.0);
        assert_eq!(compression_factor_of(&[], 50), Err(AnalysisError::Empty));
    }

    #[test]
    fn last_k_examples() {
        assert_eq!(last_k_mean(&[1.0, 2.0, 3.0], 2).unwrap(), 2.5);
        assert_eq!(last_k_mean(&[5.0], 50).unwrap(), 5.0);
        let long: Vec<f64> = (1..=3000).map(f64::from).collect();
        assert_eq!(last_k_mean(&long, 50).unwrap(), 2975.5);
        assert_eq!(last_k_mean(&[1.0], 0), Err(AnalysisError::ZeroWindow));
    }

    #[test]
    fn stride_windows() {
        assert_eq!(window_records(50, 1), 50);
        assert_eq!(window_records(50, 3), 17);
        assert_eq!(window_records(50, 50), 1);
        assert_eq!(window_records(50, 100), 1);
    }

    #[test]
    fn trajectory_validation() {
        let mut t = IpTrajectory::new(-1, 4);
        let p = |epoch, mi_xt| IpPoint {
            epoch,
            mi_xt,
            mi_ty: 0.5,
            accuracy: 50.0,
        };
        t.push(p(1, 2.0)).unwrap();
        assert!(matches!(t.push(p(1, 2.0)), Err(AnalysisError::EpochOrder { .. })));
        assert!(matches!(t.push(p(2, 4.5)), Err(AnalysisError::InvalidMi { .. })));
        assert!(matches!(t.push(p(2, -0.1)), Err(AnalysisError::InvalidMi { .. })));
        assert!(matches!(t.push(p(2, f64::NAN)), Err(AnalysisError::NonFinite(_))));
        t.push(p(3, 4.0)).unwrap();
        assert_eq!(t.epochs(), vec![1, 3]);
    }

    #[test]
    fn constant_run_summary() {
        let t = traj(-1, 10, &[4.0; 60], &[90.0; 60]);
        let s = build_run_summary(meta(0, 0.0), &[t], &[check_regime(819, 10)], 50).unwrap();
        let l = &s.layers[0];
        assert_eq!(l.rho, 0.0);
        assert_eq!((l.mi_xt_last_mean, l.acc_last_mean), (4.0, 90.0));
        assert_eq!((l.acc_last_min, l.acc_last_max), (90.0, 90.0));
        assert!(!l.reliable);
        assert_eq!(l.mi_xt_argmax_epoch, 0);
    }

    #[test]
    fn collapse_towards_ten_patterns() {
        // decays from 9 bits to just above log2(10)
        let mi: Vec<f64> = (0..300)
            .map(|e| 10f64.log2() + 0.05 + (9.0 - 10f64.log2()) * (-(e as f64) / 40.0).exp())
            .collect();
        let t = traj(-1, 10, &mi, &[95.0; 300]);
        let s = build_run_summary(meta(0, 0.0), &[t], &[check_regime(10_000, 10)], 50).unwrap();
        let l = &s.layers[0];
        assert!(l.mi_xt_last_mean > 10f64.log2() && l.mi_xt_last_mean < 10f64.log2() + 0.1);
        assert!(l.rho > 0.5);
        assert!(l.reliable);
    }

    #[test]
    fn summary_errors() {
        let t = traj(-1, 4, &[1.0], &[50.0]);
        assert_eq!(build_run_summary(meta(0, 0.0), &[], &[], 50), Err(AnalysisError::Empty));
        assert!(matches!(
            build_run_summary(meta(0, 0.0), &[t], &[], 50),
            Err(AnalysisError::LengthMismatch { .. })
        ));
    }

    fn planted(sign: f64) -> Vec<RunSummary> {
        let mut out = Vec::new();
        for (i, lambda) in [0.0, 0.1, 0.2, 0.5, 0.7, 1.0, 1.1, 1.2, 1.5, 1.7, 2.0]
            .into_iter()
            .enumerate()
        {
            for seed in 0..3u64 {
                let k = (3 * i as u64 + seed) as f64;
                let mi = 3.0 + 0.1 * k;
                let acc = 50.0 + sign * k;
                let t = traj(-1, 10, &[mi; 5], &[acc; 5]);
                out.push(build_run_summary(meta(seed, lambda), &[t], &[check_regime(10_000, 10)], 50).unwrap());
            }
        }
        out
    }

    #[test]
    fn planted_correlations() {
        let pos = correlate_group(&planted(1.0), -1).unwrap();
        assert_eq!((pos.n, pos.r_s, pos.p_value), (33, 1.0, 0.0));
        let neg = correlate_group(&planted(-1.0), -1).unwrap();
        assert_eq!(neg.r_s, -1.0);
        assert!(matches!(
            correlate_group(&planted(1.0), -2),
            Err(AnalysisError::MissingLayer(-2))
        ));
        assert!(matches!(
            correlate_group(&planted(1.0)[..2], -1),
            Err(AnalysisError::TooFewSamples { n: 2, .. })
        ));
        let (rows, diags) = correlation_table(&planted(1.0));
        assert_eq!(rows.len(), 1);
        assert!(diags.is_empty());
        assert_eq!(rows[0].n, 33);
    }

    #[test]
    fn pooled_points() {
        let pooled = pooled_by_lambda(&planted(1.0), -1);
        assert_eq!(pooled.len(), 11);
        assert_eq!(pooled[0].lambda, 0.0);
        assert_eq!(pooled[0].seed, 3);
        assert!((pooled[0].acc_mean - 51.0).abs() < 1e-12);
        assert_eq!((pooled[0].acc_min, pooled[0].acc_max), (50.0, 52.0));
        assert_eq!(per_run_points(&planted(1.0), -1).len(), 33);
    }

    #[test]
    fn csv_layout() {
        let s = planted(1.0);
        let csv = summary_csv(&s[..1]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SUMMARY_CSV_HEADER);
        assert_eq!(lines[1], "d,g,r0-0,0,0,-1,10,true,3,3,1,0,50,50,50");
        let (rows, _) = correlation_table(&s);
        assert_eq!(correlation_csv(&rows).lines().nth(1).unwrap(), "d,g,-1,33,1,0");
    }

    #[test]
    fn single_run_skips_correlation() {
        let (rows, diags) = correlation_table(&planted(1.0)[..1]);
        assert!(rows.is_empty());
        assert_eq!(diags.len(), 1);
    }

    proptest! {
        #[test]
        fn rho_in_unit_interval(mi in prop::collection::vec(0.0f64..20.0, 1..200), window in 1usize..80) {
            let rho = compression_factor_of(&mi, window).unwrap();
            prop_assert!((0.0..=1.0).contains(&rho));
        }

        #[test]
        fn rho_zero_for_constant(v in 0.0f64..20.0, n in 1usize..100, window in 1usize..80) {
            prop_assert_eq!(compression_factor_of(&vec![v; n], window).unwrap(), 0.0);
        }
    }
}
