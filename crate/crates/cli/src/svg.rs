//! Hand-written SVG figures on a fixed 800x600 canvas. Every plotted mark
//! carries the CSV values it was drawn from as `data-*` attributes.

use std::fmt::Write as _;

use wcmdp::simulator::CampaignResult;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One plotted position with its whisker interval.
#[derive(Clone, Debug)]
pub struct Point {
    pub n: u64,
    pub value: f64,
    pub ci95: f64,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

#[derive(Clone, Copy, Debug)]
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn right(&self) -> f64 {
        self.left + self.width
    }

    fn bottom(&self) -> f64 {
        self.top + self.height
    }
}

#[derive(Clone, Copy, Debug)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return if log { Axis { lo: 0.1, hi: 10.0, log } } else { Axis { lo: 0.0, hi: 1.0, log } };
        }
        if log {
            let (l, h) = (lo.log10(), hi.log10());
            let pad = ((h - l) * 0.08).max(0.15);
            Axis { lo: 10f64.powf(l - pad), hi: 10f64.powf(h + pad), log }
        } else {
            let pad = ((hi - lo) * 0.08).max(hi.abs().max(1e-3) * 0.05);
            Axis { lo: lo - pad, hi: hi + pad, log }
        }
    }

    /// Position in `[0, 1]` along the axis.
    fn unit(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let mut out = Vec::new();
            let (a, b) = (self.lo.log10().floor() as i32, self.hi.log10().ceil() as i32);
            for k in a..=b {
                for m in [1.0, 2.0, 5.0] {
                    let v = m * 10f64.powi(k);
                    if v >= self.lo && v <= self.hi {
                        out.push(v);
                    }
                }
            }
            out
        } else {
            let span = self.hi - self.lo;
            let raw = span / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
            let mut v = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= self.hi {
                out.push(v);
                v += step;
            }
            out
        }
    }
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn new(title: &str) -> Self {
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(out, "<title>{}</title>", escape(title)).unwrap();
        writeln!(out, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##).unwrap();
        Canvas { out }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        writeln!(self.out, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#).unwrap();
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, body: &str, extra: &str) {
        writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" {extra}>{}</text>"#,
            escape(body)
        )
        .unwrap();
    }

    fn axes(&mut self, f: Frame, x: Axis, y: Axis, xlabel: &str, ylabel: &str, title: &str) {
        writeln!(
            self.out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000"/>"##,
            f.left, f.top, f.width, f.height
        )
        .unwrap();
        for t in x.ticks() {
            let px = f.left + x.unit(t) * f.width;
            self.line(px, f.bottom(), px, f.bottom() + 5.0, r##"stroke="#000000""##);
            self.line(px, f.top, px, f.bottom(), r##"stroke="#dddddd""##);
            self.text(px, f.bottom() + 18.0, "middle", &label(t), "");
        }
        for t in y.ticks() {
            let py = f.bottom() - y.unit(t) * f.height;
            self.line(f.left - 5.0, py, f.left, py, r##"stroke="#000000""##);
            self.line(f.left, py, f.right(), py, r##"stroke="#dddddd""##);
            self.text(f.left - 8.0, py + 4.0, "end", &label(t), "");
        }
        self.text(f.left + f.width / 2.0, f.bottom() + 40.0, "middle", xlabel, "");
        let (cx, cy) = (f.left - 60.0, f.top + f.height / 2.0);
        self.text(cx, cy, "middle", ylabel, &format!(r#"transform="rotate(-90 {cx:.2} {cy:.2})""#));
        self.text(f.left + f.width / 2.0, f.top - 12.0, "middle", title, r#"font-size="14""#);
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Gap against `N` on log-log axes with 95% whiskers and reference slopes
/// `-1/2` and `-1` through the first positive gap. Nonpositive gaps are
/// drawn as hollow markers on the bottom edge.
pub fn rate_plot(rows: &[CampaignResult], slope: Option<f64>) -> String {
    let title = match slope {
        Some(s) => format!("optimality gap vs N (fitted slope {s:.3})"),
        None => "optimality gap vs N".to_string(),
    };
    let mut c = Canvas::new(&title);
    let f = Frame { left: 100.0, top: 50.0, width: 640.0, height: 470.0 };
    let x = Axis::fit(rows.iter().map(|r| r.n as f64), true);
    let y = Axis::fit(
        rows.iter().flat_map(|r| [r.gap, r.gap + r.ci95, r.gap - r.ci95]),
        true,
    );
    c.axes(f, x, y, "N", "gap", &title);
    let px = |n: f64| f.left + x.unit(n) * f.width;
    let py = |v: f64| f.bottom() - y.unit(v.clamp(y.lo, y.hi)) * f.height;
    writeln!(
        c.out,
        r#"<clipPath id="plot"><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        f.left, f.top, f.width, f.height
    )
    .unwrap();
    if let Some(anchor) = rows.iter().find(|r| r.gap > 0.0) {
        for (k, (s, dash)) in [(-0.5, "6 4"), (-1.0, "2 3")].iter().enumerate() {
            let at = |n: f64| anchor.gap * (n / anchor.n as f64).powf(*s);
            writeln!(
                c.out,
                r##"<line class="reference" data-slope="{s}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#777777" stroke-dasharray="{dash}" clip-path="url(#plot)"/>"##,
                px(x.lo),
                f.bottom() - y.unit(at(x.lo)) * f.height,
                px(x.hi),
                f.bottom() - y.unit(at(x.hi)) * f.height,
            )
            .unwrap();
            let ly = f.top + 20.0 + 16.0 * k as f64;
            c.line(f.right() - 150.0, ly - 4.0, f.right() - 120.0, ly - 4.0, &format!(r##"stroke="#777777" stroke-dasharray="{dash}""##));
            c.text(f.right() - 112.0, ly, "start", &format!("slope {s}"), "");
        }
    }
    for r in rows {
        let cx = px(r.n as f64);
        let data = format!(
            r#"data-n="{}" data-gap="{:.12}" data-ci95="{:.12}""#,
            r.n, r.gap, r.ci95
        );
        if r.gap > 0.0 {
            let (lo, hi) = (py(r.gap - r.ci95), py(r.gap + r.ci95));
            c.line(cx, lo, cx, hi, r##"class="whisker" stroke="#1f77b4""##);
            c.line(cx - 5.0, lo, cx + 5.0, lo, r##"stroke="#1f77b4""##);
            c.line(cx - 5.0, hi, cx + 5.0, hi, r##"stroke="#1f77b4""##);
            writeln!(c.out, r##"<circle class="point" {data} cx="{cx:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##, py(r.gap)).unwrap();
        } else {
            writeln!(
                c.out,
                r##"<circle class="point nonpositive" {data} cx="{cx:.2}" cy="{:.2}" r="4" fill="none" stroke="#1f77b4"/>"##,
                f.bottom()
            )
            .unwrap();
        }
    }
    c.finish()
}

/// Mean value against `N` (log axis) per series, one panel side by side
/// for each entry of `panels`.
pub fn panels_plot(title: &str, panels: &[Panel]) -> String {
    let mut c = Canvas::new(title);
    let count = panels.len().max(1) as f64;
    let slot = (WIDTH - 40.0) / count;
    let mut color_of: Vec<String> = Vec::new();
    for (i, panel) in panels.iter().enumerate() {
        let f = Frame {
            left: 40.0 + slot * i as f64 + 70.0,
            top: 60.0,
            width: slot - 100.0,
            height: 420.0,
        };
        let pts = || panel.series.iter().flat_map(|s| s.points.iter());
        let x = Axis::fit(pts().map(|p| p.n as f64), true);
        let y = Axis::fit(pts().flat_map(|p| [p.value - p.ci95, p.value + p.ci95]), false);
        c.axes(f, x, y, "N", "mean reward per arm", &panel.title);
        let px = |n: f64| f.left + x.unit(n) * f.width;
        let py = |v: f64| f.bottom() - y.unit(v) * f.height;
        for s in &panel.series {
            let k = match color_of.iter().position(|l| *l == s.label) {
                Some(k) => k,
                None => {
                    color_of.push(s.label.clone());
                    color_of.len() - 1
                }
            };
            let color = COLORS[k % COLORS.len()];
            let path: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", px(p.n as f64), py(p.value)))
                .collect();
            writeln!(
                c.out,
                r#"<polyline data-series="{}" points="{}" fill="none" stroke="{color}"/>"#,
                escape(&s.label),
                path.join(" ")
            )
            .unwrap();
            for p in &s.points {
                let cx = px(p.n as f64);
                let (lo, hi) = (py(p.value - p.ci95), py(p.value + p.ci95));
                c.line(cx, lo, cx, hi, &format!(r#"class="whisker" stroke="{color}""#));
                writeln!(
                    c.out,
                    r#"<circle class="point" data-series="{}" data-n="{}" data-mean="{:.12}" data-ci95="{:.12}" cx="{cx:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                    escape(&s.label),
                    p.n,
                    p.value,
                    p.ci95,
                    py(p.value)
                )
                .unwrap();
            }
        }
    }
    for (k, l) in color_of.iter().enumerate() {
        let ly = 556.0 + 16.0 * (k / 2) as f64;
        let lx = 110.0 + 330.0 * (k % 2) as f64;
        let color = COLORS[k % COLORS.len()];
        c.line(lx, ly - 4.0, lx + 24.0, ly - 4.0, &format!(r#"stroke="{color}" stroke-width="2""#));
        c.text(lx + 30.0, ly, "start", l, "");
    }
    c.finish()
}
