//! Static SVG charts written as plain text: trade-off scatter, robustness
//! heatmap, and pairwise-agreement bars.

use std::fmt::Write;

use crate::alignment::{AlignmentReport, Target};
use crate::proxy_eval::MetricGroup;
use crate::ranking::{pareto_front, RobustnessMatrix, TradeoffPoint};

const FONT: &str = "font-family=\"sans-serif\"";

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn header(width: u32, height: u32, title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <title>{}</title>\n\
         <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n",
        escape(title)
    )
}

/// Linear map from a data interval onto a pixel interval, padded by 5%.
struct Scale {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(v), h.max(v))
        });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        Scale {
            lo: lo - 0.05 * span,
            hi: hi + 0.05 * span,
            p0,
            p1,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }

    fn ticks(&self, count: usize) -> Vec<f64> {
        (0..=count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / count as f64)
            .collect()
    }
}

/// Mises vs. U3 scatter with labels and the Pareto front as a polyline.
pub fn tradeoff_svg(points: &[TradeoffPoint]) -> String {
    let (w, h) = (720u32, 520u32);
    let (left, right, top, bottom) = (80.0, 690.0, 40.0, 460.0);
    let xs = Scale::new(points.iter().map(|p| p.mises), left, right);
    let ys = Scale::new(points.iter().map(|p| p.u3), bottom, top);
    let mut s = header(w, h, "Stress-distortion trade-off");

    let _ = writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
        right - left,
        bottom - top
    );
    for t in xs.ticks(5) {
        let x = xs.map(t);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{bottom}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\
             <text x=\"{x:.2}\" y=\"{:.2}\" {FONT} font-size=\"11\" text-anchor=\"middle\">{t:.1}</text>",
            bottom + 5.0,
            bottom + 18.0
        );
    }
    for t in ys.ticks(5) {
        let y = ys.map(t);
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{left}\" y2=\"{y:.2}\" stroke=\"#444\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"11\" text-anchor=\"end\">{t:.3}</text>",
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"13\" text-anchor=\"middle\">Residual Mises top-k mean (MPa)</text>",
        (left + right) / 2.0,
        bottom + 45.0
    );
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"{:.2}\" {FONT} font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">U3 range (mm)</text>",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );

    let front = pareto_front(points);
    if front.len() > 1 {
        let path: Vec<String> = front
            .iter()
            .map(|p| format!("{:.2},{:.2}", xs.map(p.mises), ys.map(p.u3)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>",
            path.join(" ")
        );
    }
    for p in points {
        let (x, y) = (xs.map(p.mises), ys.map(p.u3));
        let fill = if p.dominated { "#7f8c8d" } else { "#c0392b" };
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"{fill}\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"10\">{}</text>",
            x + 7.0,
            y - 6.0,
            escape(&p.strategy_id)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{left}\" y=\"24\" {FONT} font-size=\"14\">Stress-distortion trade-off (red: non-dominated)</text>"
    );
    s.push_str("</svg>\n");
    s
}

/// Colour for rank `r` of `m`: dark green for rank 1 fading to pale yellow.
fn rank_colour(r: usize, m: usize) -> String {
    let t = if m > 1 {
        (r - 1) as f64 / (m - 1) as f64
    } else {
        0.0
    };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(0.0, 255.0),
        lerp(104.0, 247.0),
        lerp(55.0, 188.0)
    )
}

/// Strategy x weighting rank heatmap; rows follow `row_order`.
pub fn robustness_svg(matrix: &RobustnessMatrix, row_order: &[String]) -> String {
    let cols = matrix.weightings.len();
    let rows = row_order.len();
    let cell_w = (600.0 / cols.max(1) as f64).clamp(4.0, 40.0);
    let cell_h = 22.0;
    let left = 170.0;
    let top = 50.0;
    let width = (left + cell_w * cols as f64 + 90.0).ceil() as u32;
    let height = (top + cell_h * rows as f64 + 70.0).ceil() as u32;
    let mut s = header(width, height, "Ranking robustness across weightings");
    let _ = writeln!(
        s,
        "<text x=\"{left}\" y=\"24\" {FONT} font-size=\"14\">Rank under each simplex weighting (1 = best)</text>"
    );
    for (ri, id) in row_order.iter().enumerate() {
        let y = top + ri as f64 * cell_h;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"11\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            y + cell_h * 0.7,
            escape(id)
        );
        let Some(ranks) = matrix.ranks.get(id) else {
            continue;
        };
        for (ci, &r) in ranks.iter().enumerate() {
            let w = &matrix.weightings[ci];
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{cell_w:.2}\" height=\"{cell_h:.2}\" fill=\"{}\">\
                 <title>{}: rank {r} at ({:.2}, {:.2}, {:.2})</title></rect>",
                left + ci as f64 * cell_w,
                rank_colour(r, rows),
                escape(id),
                w.beta_sigma,
                w.beta_u,
                w.beta_p
            );
        }
        if let Some(range) = matrix.rank_range.get(id) {
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"11\">{}-{}</text>",
                left + cell_w * cols as f64 + 8.0,
                y + cell_h * 0.7,
                range.min,
                range.max
            );
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{left}\" y=\"{:.2}\" {FONT} font-size=\"12\">weighting index (beta_sigma ascending, then beta_u)</text>",
        top + cell_h * rows as f64 + 22.0
    );
    for r in 1..=rows {
        let x = left + (r - 1) as f64 * 24.0;
        let y = top + cell_h * rows as f64 + 34.0;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"22\" height=\"14\" fill=\"{}\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"9\" text-anchor=\"middle\">{r}</text>",
            rank_colour(r, rows),
            x + 11.0,
            y + 25.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn target_colour(t: Target) -> &'static str {
    match t {
        Target::Mises => "#2e86c1",
        Target::U3 => "#28b463",
        Target::Peeq => "#aab7b8",
        Target::Composite => "#884ea0",
    }
}

/// Horizontal grouped bars: pairwise agreement per proxy metric and target.
pub fn agreement_svg(report: &AlignmentReport) -> String {
    let mut metrics: Vec<(&str, MetricGroup)> = Vec::new();
    for e in &report.entries {
        if !metrics.iter().any(|(m, _)| *m == e.metric) {
            metrics.push((e.metric.as_str(), e.group));
        }
    }
    let bar_h = 7.0;
    let group_h = bar_h * Target::ALL.len() as f64 + 8.0;
    let left = 300.0;
    let plot_w = 380.0;
    let top = 60.0;
    let width = (left + plot_w + 40.0) as u32;
    let height = (top + group_h * metrics.len() as f64 + 50.0).ceil() as u32;
    let mut s = header(width, height, "Proxy-FEA pairwise agreement");
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"24\" {FONT} font-size=\"14\">Pairwise agreement per proxy metric (qualitative, n = {})</text>",
        report.strategy_ids.len()
    );
    for (i, t) in Target::ALL.iter().enumerate() {
        let x = left + i as f64 * 90.0;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"34\" width=\"12\" height=\"10\" fill=\"{}\"/>\
             <text x=\"{:.2}\" y=\"43\" {FONT} font-size=\"11\">{}</text>",
            target_colour(*t),
            x + 16.0,
            t.name()
        );
    }
    let bottom = top + group_h * metrics.len() as f64;
    for frac in [0.0, 0.5, 1.0] {
        let x = left + frac * plot_w;
        let dash = if frac == 0.5 {
            " stroke-dasharray=\"4 3\""
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{top}\" x2=\"{x:.2}\" y2=\"{bottom:.2}\" stroke=\"#666\"{dash}/>\
             <text x=\"{x:.2}\" y=\"{:.2}\" {FONT} font-size=\"10\" text-anchor=\"middle\">{frac:.1}</text>",
            bottom + 14.0
        );
    }
    for (mi, (metric, group)) in metrics.iter().enumerate() {
        let y0 = top + mi as f64 * group_h;
        let tag = match group {
            MetricGroup::V1 => "v1",
            MetricGroup::V2 => "v2",
            MetricGroup::Score => "score",
        };
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"11\" text-anchor=\"end\">{} [{tag}]</text>",
            left - 6.0,
            y0 + group_h / 2.0,
            escape(metric)
        );
        for (ti, t) in Target::ALL.iter().enumerate() {
            let Some(e) = report.entry(metric, *t) else {
                continue;
            };
            let _ = writeln!(
                s,
                "<rect x=\"{left}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{bar_h:.2}\" fill=\"{}\">\
                 <title>{} vs {}: {:.3}</title></rect>",
                y0 + ti as f64 * bar_h,
                e.pairwise_agreement * plot_w,
                target_colour(*t),
                escape(metric),
                t.name(),
                e.pairwise_agreement
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn colours_span_the_ramp() {
        assert_eq!(rank_colour(1, 10), "#006837");
        assert_eq!(rank_colour(10, 10), "#fff7bc");
        assert_eq!(rank_colour(1, 1), "#006837");
    }
}
