//! Figure rendering: self-contained SVG documents plus CSV twins of the
//! plotted points, so downstream tooling never has to parse SVG.
//!
//! Everything is generated with plain string formatting and fixed layout
//! constants; given the same inputs the output bytes are identical.

use pdm_core::explain::{DependenceTable, SummaryTable};
use pdm_core::stats::CorrMatrix;

use crate::artifacts::csv_body;

const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" {FONT}>\n\
         <rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"
    )
}

fn text(x: f64, y: f64, size: f64, anchor: &str, extra: &str, s: &str) -> String {
    let escaped = s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    format!(
        "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"{size:.0}\" text-anchor=\"{anchor}\" \
         {extra}>{escaped}</text>\n"
    )
}

fn line(x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64, extra: &str) -> String {
    format!(
        "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" \
         stroke=\"{stroke}\" stroke-width=\"{width:.1}\" {extra}/>\n"
    )
}

fn circle(x: f64, y: f64, r: f64, fill: &str, opacity: f64) -> String {
    format!(
        "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{r:.1}\" fill=\"{fill}\" \
         fill-opacity=\"{opacity:.2}\"/>\n"
    )
}

fn rect(x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) -> String {
    format!(
        "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"{fill}\" \
         {extra}/>\n"
    )
}

/// Linear data-to-pixel mapping.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Scale {
        let (d0, d1) = if (d1 - d0).abs() < f64::EPSILON { (d0 - 0.5, d1 + 0.5) } else { (d0, d1) };
        Scale { d0, d1, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

/// Round tick positions covering [lo, hi]: steps of 1, 2, or 5 times a
/// power of ten, at most `target + 2` ticks.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    // Among 1-2-5-10 times the magnitude, take the step whose tick count
    // lands closest to the requested count (ties: the coarser step).
    let mut step = mag;
    let mut best = f64::INFINITY;
    for candidate in [mag, 2.0 * mag, 5.0 * mag, 10.0 * mag] {
        let count = (hi / candidate).floor() - (lo / candidate).ceil() + 1.0;
        let dist = (count - (target as f64 + 1.0)).abs();
        if dist < best || (dist == best && candidate > step) {
            best = dist;
            step = candidate;
        }
    }
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        // Snap near-zero ticks to exactly zero for clean labels.
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e7 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Diverging blue-white-red map for r in [-1, 1].
fn diverging_color(r: f64) -> String {
    let r = r.clamp(-1.0, 1.0);
    let (lo, mid, hi) = ((33, 102, 172), (247, 247, 247), (178, 24, 43));
    let lerp = |a: i32, b: i32, t: f64| (a as f64 + (b as f64 - a as f64) * t).round() as i32;
    let (from, to, t) = if r < 0.0 { (mid, lo, -r) } else { (mid, hi, r) };
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(from.0, to.0, t),
        lerp(from.1, to.1, t),
        lerp(from.2, to.2, t)
    )
}

/// Sequential blue-to-red map for a normalized value in [0, 1].
fn value_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (lo, hi) = ((31, 119, 180), (214, 39, 40));
    let lerp = |a: i32, b: i32| (a as f64 + (b as f64 - a as f64) * t).round() as i32;
    format!("#{:02x}{:02x}{:02x}", lerp(lo.0, hi.0), lerp(lo.1, hi.1), lerp(lo.2, hi.2))
}

fn abbreviate(name: &str) -> String {
    let stripped = match name.find(" [") {
        Some(i) => &name[..i],
        None => name,
    };
    stripped.to_string()
}

// ---------------------------------------------------------------- corr ----

/// Long-form CSV of every heatmap cell.
pub fn corr_csv(corr: &CorrMatrix) -> String {
    let mut rows = Vec::new();
    for (i, a) in corr.names.iter().enumerate() {
        for (j, b) in corr.names.iter().enumerate() {
            rows.push(vec![a.clone(), b.clone(), corr.r.get(i, j).to_string()]);
        }
    }
    csv_body(&["column_a", "column_b", "r"], rows)
}

/// Annotated correlation heatmap.
pub fn corr_svg(corr: &CorrMatrix) -> String {
    let n = corr.names.len();
    let cell = 46.0;
    let left = 150.0;
    let top = 40.0;
    let grid = n as f64 * cell;
    let width = left + grid + 30.0;
    let height = top + grid + 120.0;
    let mut svg = svg_open(width, height);
    svg.push_str(&text(
        left + grid / 2.0,
        24.0,
        15.0,
        "middle",
        "font-weight=\"bold\"",
        "Pearson correlation",
    ));
    for (i, a) in corr.names.iter().enumerate() {
        let y = top + i as f64 * cell;
        for (j, _) in corr.names.iter().enumerate() {
            let r = corr.r.get(i, j);
            let x = left + j as f64 * cell;
            svg.push_str(&rect(x, y, cell, cell, &diverging_color(r), "stroke=\"white\""));
            let ink = if r.abs() > 0.55 { "white" } else { "#333333" };
            svg.push_str(&text(
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                11.0,
                "middle",
                &format!("fill=\"{ink}\""),
                &format!("{r:.2}"),
            ));
        }
        svg.push_str(&text(left - 8.0, y + cell / 2.0 + 4.0, 11.0, "end", "", &abbreviate(a)));
    }
    for (j, b) in corr.names.iter().enumerate() {
        let x = left + j as f64 * cell + cell / 2.0;
        let y = top + grid + 12.0;
        svg.push_str(&text(
            x,
            y,
            11.0,
            "end",
            &format!("transform=\"rotate(-45 {x:.1} {y:.1})\""),
            &abbreviate(b),
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

// ------------------------------------------------------------- scatter ----

/// CSV twin of the actual-vs-predicted scatter.
pub fn scatter_csv(rows: &[usize], actual: &[f64], predicted: &[f64]) -> String {
    let body = rows
        .iter()
        .zip(actual)
        .zip(predicted)
        .map(|((r, a), p)| vec![r.to_string(), a.to_string(), p.to_string()]);
    csv_body(&["row", "actual", "predicted"], body)
}

/// Actual-vs-predicted scatter with the identity line.
pub fn scatter_svg(actual: &[f64], predicted: &[f64], model: &str) -> String {
    let (width, height) = (560.0, 520.0);
    let (left, right, top, bottom) = (70.0, 20.0, 50.0, 60.0);
    let lo = actual
        .iter()
        .chain(predicted)
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let hi = actual
        .iter()
        .chain(predicted)
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let pad = 0.04 * (hi - lo).max(1e-9);
    let (lo, hi) = (lo - pad, hi + pad);
    let sx = Scale::new(lo, hi, left, width - right);
    let sy = Scale::new(lo, hi, height - bottom, top);

    let mut svg = svg_open(width, height);
    svg.push_str(&text(
        width / 2.0,
        26.0,
        15.0,
        "middle",
        "font-weight=\"bold\"",
        &format!("Actual vs predicted ({model})"),
    ));
    for t in ticks(lo, hi, 6) {
        let (x, y) = (sx.map(t), sy.map(t));
        svg.push_str(&line(x, height - bottom, x, top, "#eeeeee", 1.0, ""));
        svg.push_str(&line(left, y, width - right, y, "#eeeeee", 1.0, ""));
        svg.push_str(&text(x, height - bottom + 18.0, 11.0, "middle", "", &tick_label(t)));
        svg.push_str(&text(left - 8.0, y + 4.0, 11.0, "end", "", &tick_label(t)));
    }
    svg.push_str(&line(left, height - bottom, width - right, height - bottom, "#333333", 1.0, ""));
    svg.push_str(&line(left, height - bottom, left, top, "#333333", 1.0, ""));
    svg.push_str(&line(
        sx.map(lo),
        sy.map(lo),
        sx.map(hi),
        sy.map(hi),
        "#888888",
        1.2,
        "stroke-dasharray=\"6 4\"",
    ));
    for (a, p) in actual.iter().zip(predicted) {
        svg.push_str(&circle(sx.map(*a), sy.map(*p), 2.6, "#1f77b4", 0.45));
    }
    svg.push_str(&text(width / 2.0, height - 16.0, 12.0, "middle", "", "actual"));
    let (ly, lx) = (height / 2.0, 20.0);
    svg.push_str(&text(
        lx,
        ly,
        12.0,
        "middle",
        &format!("transform=\"rotate(-90 {lx:.1} {ly:.1})\""),
        "predicted",
    ));
    svg.push_str("</svg>\n");
    svg
}

// ----------------------------------------------------------- histogram ----

/// Fixed-width binning; the top edge is inclusive so counts sum to n.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    assert!(bins > 0, "need at least one bin");
    let lo = values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let hi = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let (lo, hi) = if values.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

pub fn residual_csv(hist: &[(f64, f64, usize)]) -> String {
    let body = hist
        .iter()
        .enumerate()
        .map(|(i, (l, r, c))| vec![i.to_string(), l.to_string(), r.to_string(), c.to_string()]);
    csv_body(&["bin_index", "bin_left", "bin_right", "count"], body)
}

pub fn residual_svg(hist: &[(f64, f64, usize)], model: &str) -> String {
    let (width, height) = (620.0, 440.0);
    let (left, right, top, bottom) = (70.0, 20.0, 50.0, 60.0);
    let lo = hist.first().map(|b| b.0).unwrap_or(0.0);
    let hi = hist.last().map(|b| b.1).unwrap_or(1.0);
    let peak = hist.iter().map(|b| b.2).max().unwrap_or(1).max(1) as f64;
    let sx = Scale::new(lo, hi, left, width - right);
    let sy = Scale::new(0.0, peak, height - bottom, top);

    let mut svg = svg_open(width, height);
    svg.push_str(&text(
        width / 2.0,
        26.0,
        15.0,
        "middle",
        "font-weight=\"bold\"",
        &format!("Residual distribution ({model})"),
    ));
    for t in ticks(0.0, peak, 5) {
        let y = sy.map(t);
        svg.push_str(&line(left, y, width - right, y, "#eeeeee", 1.0, ""));
        svg.push_str(&text(left - 8.0, y + 4.0, 11.0, "end", "", &tick_label(t)));
    }
    for (l, r, c) in hist {
        let x0 = sx.map(*l);
        let x1 = sx.map(*r);
        let y = sy.map(*c as f64);
        svg.push_str(&rect(
            x0,
            y,
            (x1 - x0).max(0.5),
            (height - bottom - y).max(0.0),
            "#1f77b4",
            "stroke=\"white\" stroke-width=\"0.5\"",
        ));
    }
    for t in ticks(lo, hi, 7) {
        let x = sx.map(t);
        svg.push_str(&text(x, height - bottom + 18.0, 11.0, "middle", "", &tick_label(t)));
    }
    svg.push_str(&line(left, height - bottom, width - right, height - bottom, "#333333", 1.0, ""));
    svg.push_str(&line(left, height - bottom, left, top, "#333333", 1.0, ""));
    svg.push_str(&text(width / 2.0, height - 16.0, 12.0, "middle", "", "residual (actual - predicted)"));
    let (ly, lx) = (height / 2.0, 20.0);
    svg.push_str(&text(
        lx,
        ly,
        12.0,
        "middle",
        &format!("transform=\"rotate(-90 {lx:.1} {ly:.1})\""),
        "count",
    ));
    svg.push_str("</svg>\n");
    svg
}

// ------------------------------------------------------------ beeswarm ----

/// Deterministic vertical jitter lanes for beeswarm bands.
const LANES: [f64; 9] = [0.0, 0.35, -0.35, 0.65, -0.65, 0.18, -0.18, 0.5, -0.5];

/// Beeswarm-style summary: one band per feature (importance order), points
/// at x = phi colored by the feature's (min-max normalized) value.
pub fn beeswarm_svg(summary: &SummaryTable) -> String {
    let band = 54.0;
    let (left, right, top, bottom) = (190.0, 100.0, 56.0, 46.0);
    let width = 860.0;
    let height = top + summary.features.len() as f64 * band + bottom;
    let phi_max = summary
        .features
        .iter()
        .flat_map(|f| f.points.iter().map(|(_, phi)| phi.abs()))
        .fold(1e-12, f64::max);
    let sx = Scale::new(-phi_max, phi_max, left, width - right);

    let mut svg = svg_open(width, height);
    svg.push_str(&text(
        (left + width - right) / 2.0,
        24.0,
        15.0,
        "middle",
        "font-weight=\"bold\"",
        "Attribution summary (beeswarm)",
    ));
    for t in ticks(-phi_max, phi_max, 6) {
        let x = sx.map(t);
        svg.push_str(&line(x, top, x, height - bottom, "#eeeeee", 1.0, ""));
        svg.push_str(&text(x, height - bottom + 18.0, 11.0, "middle", "", &tick_label(t)));
    }
    svg.push_str(&line(sx.map(0.0), top, sx.map(0.0), height - bottom, "#999999", 1.0, ""));
    for (i, feature) in summary.features.iter().enumerate() {
        let cy = top + (i as f64 + 0.5) * band;
        let vlo = feature.points.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
        let vhi = feature.points.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        let span = (vhi - vlo).max(1e-12);
        svg.push_str(&line(left, cy + band / 2.0, width - right, cy + band / 2.0, "#f5f5f5", 1.0, ""));
        for (j, (value, phi)) in feature.points.iter().enumerate() {
            let y = cy + LANES[j % LANES.len()] * (band * 0.38);
            svg.push_str(&circle(sx.map(*phi), y, 2.2, &value_color((value - vlo) / span), 0.6));
        }
        svg.push_str(&text(left - 10.0, cy + 4.0, 12.0, "end", "", &feature.feature_name));
        svg.push_str(&text(
            width - right + 10.0,
            cy + 4.0,
            11.0,
            "start",
            "fill=\"#555555\"",
            &format!("mean|phi| {:.4}", feature.mean_abs_phi),
        ));
    }
    svg.push_str(&text(
        (left + width - right) / 2.0,
        height - 14.0,
        12.0,
        "middle",
        "",
        "attribution (phi); point color: feature value (blue low, red high)",
    ));
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------- dependence ----

pub fn dependence_csv(table: &DependenceTable) -> String {
    let body = table.points.iter().map(|p| {
        vec![
            p.value.to_string(),
            p.phi.to_string(),
            p.interaction_value.map(|v| v.to_string()).unwrap_or_default(),
        ]
    });
    csv_body(&["value", "phi", "interaction_value"], body)
}

/// Dependence scatter: phi against feature value, colored by the
/// interaction feature when present.
pub fn dependence_svg(table: &DependenceTable) -> String {
    let (width, height) = (620.0, 460.0);
    let (left, right, top, bottom) = (76.0, 24.0, 50.0, 60.0);
    let xlo = table.points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let xhi = table.points.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let ylo = table.points.iter().map(|p| p.phi).fold(f64::INFINITY, f64::min);
    let yhi = table.points.iter().map(|p| p.phi).fold(f64::NEG_INFINITY, f64::max);
    let ypad = 0.05 * (yhi - ylo).max(1e-9);
    let sx = Scale::new(xlo, xhi, left, width - right);
    let sy = Scale::new(ylo - ypad, yhi + ypad, height - bottom, top);
    let (ilo, ihi) = table
        .points
        .iter()
        .filter_map(|p| p.interaction_value)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));

    let mut svg = svg_open(width, height);
    svg.push_str(&text(
        width / 2.0,
        26.0,
        15.0,
        "middle",
        "font-weight=\"bold\"",
        &format!("Dependence: {}", table.feature_name),
    ));
    for t in ticks(sy.d0, sy.d1, 6) {
        let y = sy.map(t);
        svg.push_str(&line(left, y, width - right, y, "#eeeeee", 1.0, ""));
        svg.push_str(&text(left - 8.0, y + 4.0, 11.0, "end", "", &tick_label(t)));
    }
    for t in ticks(sx.d0, sx.d1, 7) {
        let x = sx.map(t);
        svg.push_str(&text(x, height - bottom + 18.0, 11.0, "middle", "", &tick_label(t)));
    }
    if sy.d0 < 0.0 && sy.d1 > 0.0 {
        svg.push_str(&line(left, sy.map(0.0), width - right, sy.map(0.0), "#999999", 1.0, ""));
    }
    for p in &table.points {
        let fill = match p.interaction_value {
            Some(v) if ihi > ilo => value_color((v - ilo) / (ihi - ilo)),
            _ => "#1f77b4".to_string(),
        };
        svg.push_str(&circle(sx.map(p.value), sy.map(p.phi), 2.6, &fill, 0.55));
    }
    svg.push_str(&line(left, height - bottom, width - right, height - bottom, "#333333", 1.0, ""));
    svg.push_str(&line(left, height - bottom, left, top, "#333333", 1.0, ""));
    svg.push_str(&text(width / 2.0, height - 16.0, 12.0, "middle", "", &table.feature_name));
    let (ly, lx) = (height / 2.0, 20.0);
    svg.push_str(&text(
        lx,
        ly,
        12.0,
        "middle",
        &format!("transform=\"rotate(-90 {lx:.1} {ly:.1})\""),
        "phi",
    ));
    if let Some(name) = &table.interaction_name {
        svg.push_str(&text(
            width - right,
            top - 8.0,
            11.0,
            "end",
            "fill=\"#555555\"",
            &format!("color: {name} (blue low, red high)"),
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_sum_to_n() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let hist = histogram(&values, 30);
        assert_eq!(hist.len(), 30);
        assert_eq!(hist.iter().map(|b| b.2).sum::<usize>(), values.len());
    }

    #[test]
    fn histogram_handles_constant_values() {
        let hist = histogram(&[2.0; 17], 30);
        assert_eq!(hist.iter().map(|b| b.2).sum::<usize>(), 17);
    }

    #[test]
    fn histogram_top_edge_is_inclusive() {
        let hist = histogram(&[0.0, 0.5, 1.0], 2);
        assert_eq!(hist[0].2, 1);
        assert_eq!(hist[1].2, 2);
    }

    #[test]
    fn ticks_cover_range_with_round_steps() {
        let t = ticks(-0.93, 0.93, 6);
        assert!(t.contains(&0.0));
        assert!(t.len() >= 4 && t.len() <= 9, "{t:?}");
        let t = ticks(0.0, 100.0, 5);
        assert_eq!(t, vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0]);
    }

    #[test]
    fn diverging_color_endpoints() {
        assert_eq!(diverging_color(-1.0), "#2166ac");
        assert_eq!(diverging_color(0.0), "#f7f7f7");
        assert_eq!(diverging_color(1.0), "#b2182b");
    }

    #[test]
    fn scatter_svg_is_deterministic() {
        let a = [0.0, 1.0, 2.0, 3.0];
        let p = [0.1, 0.9, 2.2, 2.8];
        assert_eq!(scatter_svg(&a, &p, "m"), scatter_svg(&a, &p, "m"));
    }

    #[test]
    fn svg_escapes_markup_characters() {
        let s = text(0.0, 0.0, 10.0, "middle", "", "a<b & c>d");
        assert!(s.contains("a&lt;b &amp; c&gt;d"));
    }
}
