//! Self-contained SVG figures. Output is a deterministic function of the
//! input: coordinates are printed with fixed precision and nothing depends
//! on time or hash order.

use std::fmt::Write as _;

use thiserror::Error;

use crate::analysis::{pooled_by_lambda, RunSummary};
use crate::estimator::BenchmarkRow;
use crate::experiment::{ExperimentError, RunLog};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

/// Stops of the epoch/λ colour gradient (dark violet → teal → yellow).
const GRADIENT: [(f64, [u8; 3]); 3] = [(0.0, [68, 1, 84]), (0.5, [33, 145, 140]), (1.0, [253, 231, 37])];
const SERIES: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("no data for layer offset {0}")]
    MissingLayer(i32),
    #[error(transparent)]
    Run(#[from] ExperimentError),
}

pub type Result<T> = std::result::Result<T, PlotError>;

/// Colour at `t ∈ [0, 1]` on the fixed gradient.
pub fn gradient_colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let (lo, hi) = if t <= GRADIENT[1].0 {
        (GRADIENT[0], GRADIENT[1])
    } else {
        (GRADIENT[1], GRADIENT[2])
    };
    let f = (t - lo.0) / (hi.0 - lo.0);
    let c: Vec<u8> = (0..3)
        .map(|i| (lo.1[i] as f64 + f * (hi.1[i] as f64 - lo.1[i] as f64)).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions at 1, 2 or 5 × 10^k covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64) -> Self {
        if hi - lo < 1e-12 {
            Self {
                lo: lo - 0.5,
                hi: hi + 0.5,
            }
        } else {
            Self { lo, hi }
        }
    }

    /// Covers `values` and `extra`, padded by 5 % and anchored at zero when
    /// all values are non-negative.
    fn fit(values: impl IntoIterator<Item = f64>, extra: &[f64]) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values
            .into_iter()
            .chain(extra.iter().copied())
            .filter(|v| v.is_finite())
        {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self::new(0.0, 1.0);
        }
        if lo >= 0.0 {
            lo = 0.0;
        }
        let pad = 0.05 * (hi - lo).max(1e-9);
        Self::new(lo, hi + pad)
    }
}

struct Svg {
    body: String,
    x: Axis,
    y: Axis,
}

impl Svg {
    fn new(title: &str, x: Axis, y: Axis) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            esc(title)
        );
        Self { body, x, y }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.lo) / (self.x.hi - self.x.lo) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.lo) / (self.y.hi - self.y.lo) * (HEIGHT - TOP - BOTTOM)
    }

    fn py_on(&self, axis: Axis, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - axis.lo) / (axis.hi - axis.lo) * (HEIGHT - TOP - BOTTOM)
    }

    fn frame(&mut self, x_label: &str, y_label: &str, x_ticks: bool) {
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        for t in ticks(self.y.lo, self.y.hi) {
            let y = self.py(t);
            let _ = writeln!(
                self.body,
                r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                x0 - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        if x_ticks {
            for t in ticks(self.x.lo, self.x.hi) {
                let x = self.px(t);
                let _ = writeln!(
                    self.body,
                    r##"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                    y1 + 5.0,
                    y1 + 18.0,
                    fmt_tick(t)
                );
            }
        }
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            esc(x_label)
        );
        let _ = writeln!(
            self.body,
            r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (y0 + y1) / 2.0,
            esc(y_label)
        );
    }

    fn right_axis(&mut self, axis: Axis, label: &str, colour: &str) {
        let x = WIDTH - RIGHT;
        for t in ticks(axis.lo, axis.hi) {
            let y = self.py_on(axis, t);
            let _ = writeln!(
                self.body,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{colour}"/><text x="{:.2}" y="{:.2}" fill="{colour}">{}</text>"#,
                x + 5.0,
                x + 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<text transform="translate({:.2} {:.2}) rotate(90)" text-anchor="middle" fill="{colour}">{}</text>"#,
            x + 48.0,
            (TOP + HEIGHT - BOTTOM) / 2.0,
            esc(label)
        );
    }

    fn hline(&mut self, y: f64, colour: &str, dash: &str, label: &str) {
        let py = self.py(y);
        let _ = writeln!(
            self.body,
            r#"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="{colour}" stroke-dasharray="{dash}"/><text x="{:.2}" y="{:.2}" fill="{colour}">{}</text>"#,
            WIDTH - RIGHT,
            WIDTH - RIGHT + 4.0,
            py + 4.0,
            esc(label)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], colour: &str, dash: Option<&str>) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", x, y)).collect();
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.2"{dash}/>"#,
            coords.join(" ")
        );
    }

    /// Marker `shape`: 0 circle, 1 square, 2 triangle, then repeating.
    fn marker(&mut self, x: f64, y: f64, shape: usize, fill: &str, stroke: &str, title: &str) {
        let t = format!("<title>{}</title>", esc(title));
        let _ = match shape % 3 {
            0 => writeln!(
                self.body,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}" stroke="{stroke}" stroke-width="0.8">{t}</circle>"#
            ),
            1 => writeln!(
                self.body,
                r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="{fill}" stroke="{stroke}" stroke-width="0.8">{t}</rect>"#,
                x - 3.5,
                y - 3.5
            ),
            _ => writeln!(
                self.body,
                r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}" stroke="{stroke}" stroke-width="0.8">{t}</polygon>"#,
                x,
                y - 4.5,
                x - 4.0,
                y + 3.5,
                x + 4.0,
                y + 3.5
            ),
        };
    }

    fn vbar(&mut self, x: f64, y0: f64, y1: f64, colour: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="{colour}"/><line x1="{:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="{colour}"/><line x1="{:.2}" y1="{y1:.2}" x2="{:.2}" y2="{y1:.2}" stroke="{colour}"/>"#,
            x - 3.0,
            x + 3.0,
            x - 3.0,
            x + 3.0
        );
    }

    fn legend(&mut self, row: usize, shape: usize, colour: &str, label: &str) {
        let x = WIDTH - RIGHT + 14.0;
        let y = TOP + 12.0 + 18.0 * row as f64;
        self.marker(x, y, shape, colour, colour, label);
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 10.0,
            y + 4.0,
            esc(label)
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Information plane of the requested layers: `Î(X;T)` against `Î(T;Y)`,
/// points coloured by epoch, one line and marker shape per layer, and a
/// dashed reference at `log₂(classes)`.
pub fn plot_ip(log: &RunLog, layer_offsets: &[i32]) -> Result<String> {
    if layer_offsets.is_empty() || log.epochs.is_empty() {
        return Err(PlotError::Empty);
    }
    let mut series = Vec::new();
    for &off in layer_offsets {
        let t = log.trajectory(off).map_err(|_| PlotError::MissingLayer(off))?;
        series.push(t);
    }
    let ref_level = (log.header.class_count as f64).log2();
    let x = Axis::fit(series.iter().flat_map(|t| t.mi_xt()), &[]);
    let y = Axis::fit(series.iter().flat_map(|t| t.mi_ty()), &[ref_level]);
    let title = format!("Information plane: {}", log.header.run_id);
    let mut svg = Svg::new(&title, x, y);
    svg.frame("I(X;T) [bits]", "I(T;Y) [bits]", true);
    svg.hline(
        ref_level,
        "#555555",
        "6 4",
        &format!("log2({})", log.header.class_count),
    );

    let first = log.epochs.first().map_or(0, |e| e.epoch) as f64;
    let last = log.epochs.last().map_or(0, |e| e.epoch) as f64;
    let span = (last - first).max(1.0);
    for (i, t) in series.iter().enumerate() {
        let colour = SERIES[i % SERIES.len()];
        let pts: Vec<(f64, f64)> = t.points().iter().map(|p| (svg.px(p.mi_xt), svg.py(p.mi_ty))).collect();
        svg.polyline(&pts, colour, None);
        for (p, &(px, py)) in t.points().iter().zip(&pts) {
            let c = gradient_colour((p.epoch as f64 - first) / span);
            let label = format!(
                "layer {} epoch {}: {:.4}, {:.4}",
                t.layer_offset, p.epoch, p.mi_xt, p.mi_ty
            );
            svg.marker(px, py, i, &c, colour, &label);
        }
        svg.legend(i, i, colour, &format!("layer {} (w={})", t.layer_offset, t.width));
    }
    let row = series.len();
    let _ = writeln!(
        svg.body,
        r#"<text x="{:.2}" y="{:.2}">epoch {} → {}</text>"#,
        WIDTH - RIGHT + 8.0,
        TOP + 16.0 + 18.0 * row as f64,
        first,
        last
    );
    for k in 0..=10 {
        let _ = writeln!(
            svg.body,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="8" fill="{}"/>"#,
            WIDTH - RIGHT + 8.0 + 10.0 * k as f64,
            TOP + 24.0 + 18.0 * row as f64,
            gradient_colour(k as f64 / 10.0)
        );
    }
    Ok(svg.finish())
}

fn lambda_colour(lambda: f64, lo: f64, hi: f64) -> String {
    gradient_colour(if hi > lo { (lambda - lo) / (hi - lo) } else { 0.0 })
}

/// Compression factor per run and layer, one column per
/// `(dataset, group, layer_offset)`, dots coloured by λ.
pub fn plot_compression_scatter(summaries: &[RunSummary]) -> Result<String> {
    let mut columns: Vec<(String, String, i32)> = Vec::new();
    let mut dots: Vec<(usize, f64, f64, String)> = Vec::new();
    for s in summaries {
        for l in &s.layers {
            let key = (s.meta.dataset.clone(), s.meta.group.clone(), l.layer_offset);
            let col = match columns.iter().position(|c| *c == key) {
                Some(i) => i,
                None => {
                    columns.push(key);
                    columns.len() - 1
                }
            };
            dots.push((col, l.rho, s.meta.lambda, s.meta.run_id.clone()));
        }
    }
    if dots.is_empty() {
        return Err(PlotError::Empty);
    }
    let (lam_lo, lam_hi) = dots
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d.2), b.max(d.2)));
    let x = Axis::new(-0.5, columns.len() as f64 - 0.5);
    let y = Axis::new(0.0, 1.0);
    let mut svg = Svg::new("Compression factor per run and layer", x, y);
    svg.frame("dataset / group / layer", "rho", false);
    svg.hline(0.25, "#999999", "2 3", "0.25");
    for (i, c) in columns.iter().enumerate() {
        let px = svg.px(i as f64);
        let _ = writeln!(
            svg.body,
            r#"<text transform="translate({px:.2} {:.2}) rotate(20)" font-size="10">{}</text>"#,
            HEIGHT - BOTTOM + 12.0,
            esc(&format!("{}/{}/{}", c.0, c.1, c.2))
        );
    }
    let mut per_col = vec![0usize; columns.len()];
    let counts: Vec<usize> = (0..columns.len())
        .map(|c| dots.iter().filter(|d| d.0 == c).count())
        .collect();
    for (col, rho, lambda, run) in &dots {
        let k = per_col[*col];
        per_col[*col] += 1;
        let n = counts[*col].max(1) as f64;
        let jitter = if n > 1.0 {
            (k as f64 / (n - 1.0) - 0.5) * 0.6
        } else {
            0.0
        };
        let (px, py) = (svg.px(*col as f64 + jitter), svg.py(*rho));
        let c = lambda_colour(*lambda, lam_lo, lam_hi);
        svg.marker(
            px,
            py,
            0,
            &c,
            "#333333",
            &format!("{run}: rho {rho:.4}, lambda {lambda}"),
        );
    }
    let mut lambdas: Vec<f64> = dots.iter().map(|d| d.2).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    for (i, l) in lambdas.iter().enumerate() {
        svg.legend(i, 0, &lambda_colour(*l, lam_lo, lam_hi), &format!("lambda {l}"));
    }
    Ok(svg.finish())
}

/// Window means of `Ī(X;T)` (left axis) and accuracy (right axis) against
/// λ, with min–max range bars, for one layer.
pub fn plot_mi_accuracy(summaries: &[RunSummary], layer_offset: i32) -> Result<String> {
    if summaries.is_empty() {
        return Err(PlotError::Empty);
    }
    let pts = pooled_by_lambda(summaries, layer_offset);
    if pts.is_empty() {
        return Err(PlotError::MissingLayer(layer_offset));
    }
    let x = Axis::fit(pts.iter().map(|p| p.lambda), &[]);
    let x = Axis::new(x.lo - 0.05 * (x.hi - x.lo), x.hi);
    let y = Axis::fit(pts.iter().flat_map(|p| [p.mi_xt_min, p.mi_xt_max]), &[]);
    let acc_lo = pts.iter().map(|p| p.acc_min).fold(f64::INFINITY, f64::min);
    let acc_hi = pts.iter().map(|p| p.acc_max).fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (acc_hi - acc_lo).max(1.0);
    let acc = Axis::new(acc_lo - pad, acc_hi + pad);

    let title = format!("I(X;T) and accuracy, layer {layer_offset}");
    let mut svg = Svg::new(&title, x, y);
    svg.frame("weight decay lambda", "mean I(X;T) [bits]", true);
    let (mi_colour, acc_colour) = (SERIES[0], SERIES[1]);
    svg.right_axis(acc, "accuracy [%]", acc_colour);

    let mi_pts: Vec<(f64, f64)> = pts.iter().map(|p| (svg.px(p.lambda), svg.py(p.mi_xt_mean))).collect();
    let acc_pts: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| (svg.px(p.lambda), svg.py_on(acc, p.acc_mean)))
        .collect();
    svg.polyline(&mi_pts, mi_colour, None);
    svg.polyline(&acc_pts, acc_colour, Some("5 3"));
    for (p, (&m, &a)) in pts.iter().zip(mi_pts.iter().zip(&acc_pts)) {
        let (y0, y1) = (svg.py(p.mi_xt_min), svg.py(p.mi_xt_max));
        svg.vbar(m.0, y0, y1, mi_colour);
        let (y0, y1) = (svg.py_on(acc, p.acc_min), svg.py_on(acc, p.acc_max));
        svg.vbar(a.0, y0, y1, acc_colour);
        svg.marker(
            m.0,
            m.1,
            0,
            mi_colour,
            mi_colour,
            &format!("lambda {}: I(X;T) {:.4}", p.lambda, p.mi_xt_mean),
        );
        svg.marker(
            a.0,
            a.1,
            1,
            acc_colour,
            acc_colour,
            &format!("lambda {}: accuracy {:.3}", p.lambda, p.acc_mean),
        );
    }
    svg.legend(0, 0, mi_colour, "I(X;T)");
    svg.legend(1, 1, acc_colour, "accuracy");
    Ok(svg.finish())
}

/// Mean plug-in estimate against dimension for each `p`, the true entropy
/// as a dotted line and the `log₂ N` ceiling dashed.
pub fn plot_entropy_benchmark(rows: &[BenchmarkRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let n = rows[0].sample_count;
    let ceiling = (n as f64).log2();
    let mut ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let x = Axis::fit(rows.iter().map(|r| r.dim as f64), &[]);
    let y = Axis::fit(rows.iter().flat_map(|r| [r.true_entropy, r.mean_estimate]), &[ceiling]);
    let mut svg = Svg::new(&format!("Plug-in entropy, N = {n}"), x, y);
    svg.frame("dimension D", "entropy [bits]", true);
    svg.hline(ceiling, "#555555", "6 4", &format!("log2({n})"));
    for (i, p) in ps.iter().enumerate() {
        let colour = SERIES[i % SERIES.len()];
        let mut sel: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.p == *p).collect();
        sel.sort_by_key(|r| r.dim);
        let truth: Vec<(f64, f64)> = sel
            .iter()
            .map(|r| (svg.px(r.dim as f64), svg.py(r.true_entropy)))
            .collect();
        let est: Vec<(f64, f64)> = sel
            .iter()
            .map(|r| (svg.px(r.dim as f64), svg.py(r.mean_estimate)))
            .collect();
        svg.polyline(&truth, colour, Some("1 3"));
        svg.polyline(&est, colour, None);
        for (r, &(px, py)) in sel.iter().zip(&est) {
            svg.marker(
                px,
                py,
                i,
                colour,
                colour,
                &format!("p {} D {}: {:.4}", r.p, r.dim, r.mean_estimate),
            );
        }
        svg.legend(i, i, colour, &format!("p = {p}"));
    }
    Ok(svg.finish())
}
