//! Self-contained SVG charts.

use std::fmt::Write;

use crate::stats::Summary;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Frame {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Frame {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = if log { (0.1, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            lo = 10f64.powf(lo.log10().floor());
            hi = 10f64.powf(hi.log10().ceil().max(lo.log10() + 1.0));
        } else {
            let pad = ((hi - lo) * 0.05).max(1e-3);
            lo -= pad;
            hi += pad;
        }
        Frame { lo, hi, log }
    }

    fn y(&self, v: f64) -> f64 {
        let t = if self.log {
            (v.max(self.lo).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        };
        TOP + (1.0 - t) * (HEIGHT - TOP - BOTTOM)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10() as i32, self.hi.log10() as i32);
            (a..=b).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..=5).map(|k| self.lo + (self.hi - self.lo) * k as f64 / 5.0).collect()
        }
    }
}

fn header(out: &mut String, title: &str, y_label: &str, frame: &Frame) {
    let plot_bottom = HEIGHT - BOTTOM;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
    writeln!(
        out,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (TOP + plot_bottom) / 2.0,
        escape(y_label)
    )
    .unwrap();
    for t in frame.ticks() {
        let y = frame.y(t);
        writeln!(
            out,
            r##"<line x1="{LEFT}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<path d="M{LEFT},{TOP} V{plot_bottom} H{}" fill="none" stroke="black"/>"#,
        WIDTH - RIGHT
    )
    .unwrap();
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        format!("{:.2}", v)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One box per group, with Tukey whiskers and outliers as dots. Groups with
/// no data leave an empty slot.
pub fn box_plot(title: &str, y_label: &str, groups: &[(String, Option<Summary>)]) -> String {
    let frame = Frame::new(
        groups.iter().flat_map(|(_, s)| {
            s.iter()
                .flat_map(|s| [s.whisker_low, s.whisker_high].into_iter().chain(s.outliers.iter().copied()))
        }),
        false,
    );
    let mut out = String::new();
    header(&mut out, title, y_label, &frame);
    let slot = (WIDTH - LEFT - RIGHT) / groups.len().max(1) as f64;
    for (k, (label, summary)) in groups.iter().enumerate() {
        let cx = LEFT + slot * (k as f64 + 0.5);
        writeln!(
            out,
            r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 18.0,
            escape(label)
        )
        .unwrap();
        let Some(s) = summary else { continue };
        let half = (slot * 0.3).min(24.0);
        let (y1, ym, y3) = (frame.y(s.q1), frame.y(s.median), frame.y(s.q3));
        let (wl, wh) = (frame.y(s.whisker_low), frame.y(s.whisker_high));
        writeln!(
            out,
            r##"<line x1="{cx:.1}" x2="{cx:.1}" y1="{wh:.1}" y2="{y3:.1}" stroke="black"/><line x1="{cx:.1}" x2="{cx:.1}" y1="{y1:.1}" y2="{wl:.1}" stroke="black"/><line x1="{:.1}" x2="{:.1}" y1="{wh:.1}" y2="{wh:.1}" stroke="black"/><line x1="{:.1}" x2="{:.1}" y1="{wl:.1}" y2="{wl:.1}" stroke="black"/><rect x="{:.1}" y="{y3:.1}" width="{:.1}" height="{:.1}" fill="#9ecae1" stroke="black"/><line x1="{:.1}" x2="{:.1}" y1="{ym:.1}" y2="{ym:.1}" stroke="#d62728" stroke-width="2"/>"##,
            cx - half / 2.0,
            cx + half / 2.0,
            cx - half / 2.0,
            cx + half / 2.0,
            cx - half,
            2.0 * half,
            (y1 - y3).max(0.5),
            cx - half,
            cx + half,
        )
        .unwrap();
        for &o in &s.outliers {
            writeln!(out, r#"<circle cx="{cx:.1}" cy="{:.1}" r="2.5" fill="none" stroke="black"/>"#, frame.y(o)).unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Lines through `(x, y)` points, one per series, with a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)], log_y: bool) -> String {
    let frame = Frame::new(series.iter().flat_map(|(_, p)| p.iter().map(|&(_, y)| y)), log_y);
    let xs: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|&(x, _)| x)).collect();
    let (x_lo, x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (x_lo, x_hi) = if x_lo.is_finite() && x_hi > x_lo { (x_lo, x_hi) } else { (x_lo.min(0.0), x_lo.max(0.0) + 1.0) };
    let px = |x: f64| LEFT + 20.0 + (x - x_lo) / (x_hi - x_lo) * (WIDTH - LEFT - RIGHT - 40.0);
    let mut out = String::new();
    header(&mut out, title, y_label, &frame);
    let mut ticks: Vec<f64> = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, px(x), HEIGHT - BOTTOM + 18.0, x).unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    )
    .unwrap();
    for (k, (name, points)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = points
            .iter()
            .filter(|(_, y)| y.is_finite() && (!log_y || *y > 0.0))
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), frame.y(y)))
            .collect();
        if !pts.is_empty() {
            writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" ")).unwrap();
            for p in &pts {
                let (x, y) = p.split_once(',').unwrap();
                writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#).unwrap();
            }
        }
        let ly = TOP + 18.0 * k as f64;
        writeln!(
            out,
            r#"<line x1="{}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            WIDTH - RIGHT + 12.0,
            WIDTH - RIGHT + 32.0,
            WIDTH - RIGHT + 36.0,
            ly + 4.0,
            escape(name)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
