//! Static SVG charts: uplift curve and inaccuracy histogram.
//!
//! Both charts use a fixed 800x500 viewport and need no external renderer.
//! The plotted area and the value ranges of its axes are recorded as
//! `data-*` attributes on the plot element, so pixel coordinates can be
//! mapped back to values.

use std::fmt::Write;

use crate::engine::UpliftCurve;
use crate::error::{Error, Result};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
pub const DEFAULT_BIN_WIDTH: f64 = 10.0;

const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const TICKS: usize = 5;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Pixel rectangle of the plot area and the value ranges it spans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Frame {
    pub const X0: f64 = LEFT;
    pub const Y0: f64 = TOP;
    pub const PLOT_WIDTH: f64 = WIDTH - LEFT - RIGHT;
    pub const PLOT_HEIGHT: f64 = HEIGHT - TOP - BOTTOM;

    pub fn px(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        Self::X0 + (x - lo) / (hi - lo) * Self::PLOT_WIDTH
    }

    pub fn py(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        Self::Y0 + (hi - y) / (hi - lo) * Self::PLOT_HEIGHT
    }

    /// Inverse of [`Frame::px`].
    pub fn x_value(&self, px: f64) -> f64 {
        let (lo, hi) = self.x_range;
        lo + (px - Self::X0) / Self::PLOT_WIDTH * (hi - lo)
    }

    /// Inverse of [`Frame::py`].
    pub fn y_value(&self, py: f64) -> f64 {
        let (lo, hi) = self.y_range;
        hi - (py - Self::Y0) / Self::PLOT_HEIGHT * (hi - lo)
    }

    fn data_attrs(&self) -> String {
        format!(
            r#"data-plot="{} {} {} {}" data-x-range="{} {}" data-y-range="{} {}""#,
            Self::X0,
            Self::Y0,
            Self::PLOT_WIDTH,
            Self::PLOT_HEIGHT,
            self.x_range.0,
            self.x_range.1,
            self.y_range.0,
            self.y_range.1
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Step from {1, 2, 5} x 10^k giving about `TICKS` intervals over `span`.
fn nice_step(span: f64) -> f64 {
    let raw = span / TICKS as f64;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag)
}

/// Range covering `[lo, hi]` with ends on multiples of a nice step.
fn nice_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if hi - lo < 1e-9 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn ticks(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(
    out: &mut String,
    frame: &Frame,
    x_ticks: &[(f64, String)],
    y_ticks: &[(f64, String)],
    x_label: &str,
    y_label: &str,
) {
    let (x0, y0) = (Frame::X0, Frame::Y0);
    let (x1, y1) = (x0 + Frame::PLOT_WIDTH, y0 + Frame::PLOT_HEIGHT);
    let _ = writeln!(out, r##"<g class="axes" stroke="#333" fill="none">"##);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    for (v, _) in x_ticks {
        let x = frame.px(*v);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}"/>"#, y1 + 5.0);
    }
    for (v, _) in y_ticks {
        let y = frame.py(*v);
        let _ = writeln!(out, r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}"/>"##, x0 - 5.0);
        let _ = writeln!(out, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##);
    }
    let _ = writeln!(out, "</g>");
    for (v, label) in x_ticks {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            frame.px(*v),
            y1 + 20.0,
            escape(label)
        );
    }
    for (v, label) in y_ticks {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            frame.py(*v) + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="x-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        x0 + Frame::PLOT_WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let (lx, ly) = (22.0, y0 + Frame::PLOT_HEIGHT / 2.0);
    let _ = writeln!(
        out,
        r#"<text class="y-label" x="{lx}" y="{ly}" text-anchor="middle" transform="rotate(-90 {lx} {ly})">{}</text>"#,
        escape(y_label)
    );
}

/// Line chart of required uplift (percent) against acceptable risk.
pub fn curve_svg(curve: &UpliftCurve<f64>, title: &str) -> Result<String> {
    if curve.points.is_empty() {
        return Err(Error::invalid("curve has no points"));
    }
    let ys = curve.points.iter().map(|p| p.uplift_pct);
    let lo = ys.clone().fold(0.0, f64::min);
    let hi = ys.fold(0.0, f64::max);
    let (ylo, yhi, ystep) = nice_range(lo, hi);
    let frame = Frame { x_range: (0.0, 1.0), y_range: (ylo, yhi) };

    let mut out = String::new();
    open(&mut out, title);
    let x_ticks: Vec<(f64, String)> = ticks(0.0, 1.0, 0.1).into_iter().map(|v| (v, fmt_tick(v))).collect();
    let y_ticks: Vec<(f64, String)> =
        ticks(ylo, yhi, ystep).into_iter().map(|v| (v, format!("{}%", fmt_tick(v)))).collect();
    axes(&mut out, &frame, &x_ticks, &y_ticks, "Acceptable risk of cost overrun", "Required uplift (percent)");
    let points: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", frame.px(p.acceptable_risk), frame.py(p.uplift_pct)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="uplift-curve" {} fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
        frame.data_attrs(),
        COLORS[0],
        points.join(" ")
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Values sharing a label, e.g. one region.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramGroup {
    pub label: String,
    pub values: Vec<f64>,
}

/// Counts of `values` in bins `[edge_i, edge_i + width)` starting at `start`.
pub fn bin_counts(values: &[f64], start: f64, width: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        let i = (((v - start) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

/// Bar histogram of percent inaccuracies, one bar colour per group, with a
/// vertical marker at each group's mean.
pub fn histogram_svg(groups: &[HistogramGroup], bin_width: f64, x_label: &str, title: &str) -> Result<String> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::invalid(format!("bin width {bin_width} must be positive")));
    }
    if groups.is_empty() || groups.iter().any(|g| g.values.is_empty()) {
        return Err(Error::EmptySample);
    }
    let all = groups.iter().flat_map(|g| g.values.iter().copied());
    let min = all.clone().fold(f64::INFINITY, f64::min);
    let max = all.fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::invalid("histogram values must be finite"));
    }
    let start = (min / bin_width).floor() * bin_width;
    let bins = (((max - start) / bin_width).floor() as usize + 1).max(1);
    let end = start + bins as f64 * bin_width;
    let counts: Vec<Vec<usize>> = groups.iter().map(|g| bin_counts(&g.values, start, bin_width, bins)).collect();
    let top = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let (_, yhi, ystep) = nice_range(0.0, top);
    let ystep = ystep.max(1.0);
    let frame = Frame { x_range: (start, end), y_range: (0.0, yhi) };

    let mut out = String::new();
    open(&mut out, title);
    let xstep = nice_step(end - start).max(bin_width);
    let xstep = (xstep / bin_width).ceil() * bin_width;
    let x_ticks: Vec<(f64, String)> = ticks(start, end, xstep)
        .into_iter()
        .filter(|&v| v <= end + 1e-9)
        .map(|v| (v, format!("{}%", fmt_tick(v))))
        .collect();
    let y_ticks: Vec<(f64, String)> = ticks(0.0, yhi, ystep).into_iter().map(|v| (v, fmt_tick(v))).collect();
    axes(&mut out, &frame, &x_ticks, &y_ticks, x_label, "Number of projects");

    let slot = Frame::PLOT_WIDTH / bins as f64;
    let bar = slot / groups.len() as f64;
    let _ = writeln!(out, r#"<g class="bars" {}>"#, frame.data_attrs());
    for (g, (group, counts)) in groups.iter().zip(&counts).enumerate() {
        let color = COLORS[g % COLORS.len()];
        for (i, &c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            let x = Frame::X0 + slot * i as f64 + bar * g as f64;
            let y = frame.py(c as f64);
            let _ = writeln!(
                out,
                r#"<rect class="bar" data-group="{}" data-bin-start="{}" data-count="{c}" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                escape(&group.label),
                start + bin_width * i as f64,
                bar - 1.0,
                frame.py(0.0) - y
            );
        }
    }
    let _ = writeln!(out, "</g>");

    for (g, group) in groups.iter().enumerate() {
        let color = COLORS[g % COLORS.len()];
        let mean = group.values.iter().sum::<f64>() / group.values.len() as f64;
        let x = frame.px(mean);
        let _ = writeln!(
            out,
            r#"<line class="mean-marker" data-group="{}" data-mean="{mean}" x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="{color}" stroke-width="2" stroke-dasharray="6 4"/>"#,
            escape(&group.label),
            Frame::Y0,
            Frame::Y0 + Frame::PLOT_HEIGHT
        );
        let ly = Frame::Y0 + 14.0 * (g + 1) as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ly}" fill="{color}">{} (n={}) mean {:.1}%</text>"#,
            x + 4.0,
            escape(&group.label),
            group.values.len(),
            mean
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::UpliftPoint;

    #[test]
    fn frame_maps_both_ways() {
        let f = Frame { x_range: (0.0, 1.0), y_range: (-20.0, 80.0) };
        for v in [-20.0, 0.0, 33.3, 80.0] {
            assert!((f.y_value(f.py(v)) - v).abs() < 1e-9);
        }
        assert_eq!(f.px(0.0), Frame::X0);
        assert_eq!(f.py(80.0), Frame::Y0);
    }

    #[test]
    fn curve_has_one_polyline() {
        let curve = UpliftCurve {
            points: vec![
                UpliftPoint { acceptable_risk: 0.1, uplift_pct: 68.0 },
                UpliftPoint { acceptable_risk: 0.5, uplift_pct: 40.0 },
            ],
        };
        let svg = curve_svg(&curve, "UK rail & cost").unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("&amp;"));
        assert!(svg.contains(r#"width="800" height="500""#));
        assert!(curve_svg(&UpliftCurve { points: vec![] }, "").is_err());
    }

    #[test]
    fn bins_are_half_open() {
        assert_eq!(bin_counts(&[0.0, 9.99, 10.0, 25.0], 0.0, 10.0, 3), vec![2, 1, 1]);
    }

    #[test]
    fn one_marker_per_group() {
        let groups = vec![
            HistogramGroup { label: "UK".into(), values: vec![10.0, 20.0] },
            HistogramGroup { label: "non-UK".into(), values: vec![-5.0, 50.0, 70.0] },
        ];
        let svg = histogram_svg(&groups, 10.0, "Cost inaccuracy (percent)", "t").unwrap();
        assert_eq!(svg.matches(r#"class="mean-marker""#).count(), 2);
        assert_eq!(svg.matches(r#"class="bar""#).count(), 5);
        assert!(histogram_svg(&groups, 0.0, "", "").is_err());
        assert!(histogram_svg(&[], 10.0, "", "").is_err());
    }
}
