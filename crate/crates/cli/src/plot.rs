//! Minimal SVG rendering: line plots with optional error bars, and a heatmap
//! with contour overlay.

use std::fmt::Write;

use hom_core::keyrate::KeyRateMap;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Symmetric y error per point; drawn as markers with bars.
    pub errors: Option<Vec<f64>>,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi <= lo {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log }
    }

    fn fraction(&self, v: f64) -> f64 {
        if self.log {
            (v.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().ceil() as i32, self.hi.log10().floor() as i32);
            return (a..=b).map(|e| 10f64.powi(e)).collect();
        }
        (0..=4).map(|k| self.lo + (self.hi - self.lo) * k as f64 / 4.0).collect()
    }
}

fn px(x: &Axis, v: f64) -> f64 {
    LEFT + x.fraction(v) * (W - LEFT - RIGHT)
}

fn py(y: &Axis, v: f64) -> f64 {
    H - BOTTOM - y.fraction(v) * (H - TOP - BOTTOM)
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, x: &Axis, y: &Axis) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>
"#,
        W / 2.0,
        escape(title),
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for t in x.ticks() {
        let p = px(x, t);
        let _ = writeln!(
            out,
            r#"<line x1="{p:.1}" y1="{0}" x2="{p:.1}" y2="{1}" stroke="black"/><text x="{p:.1}" y="{2}" text-anchor="middle">{3}</text>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0,
            H - BOTTOM + 18.0,
            tick_label(t)
        );
    }
    for t in y.ticks() {
        let p = py(y, t);
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{p:.1}" x2="{LEFT}" y2="{p:.1}" stroke="black"/><text x="{1}" y="{2:.1}" text-anchor="end">{3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            p + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let x = Axis::new(all().map(|p| p.0), self.log_x);
        let y = Axis::new(
            self.series.iter().flat_map(|s| {
                s.points.iter().enumerate().flat_map(move |(i, p)| {
                    let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
                    [p.1 - e, p.1 + e]
                })
            }),
            false,
        );
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label, &x, &y);
        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let visible = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!self.log_x || p.0 > 0.0);
            match &s.errors {
                None => {
                    let pts: Vec<String> = s
                        .points
                        .iter()
                        .filter(visible)
                        .map(|&(a, b)| format!("{:.2},{:.2}", px(&x, a), py(&y, b)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
                Some(errors) => {
                    for (p, e) in s.points.iter().zip(errors) {
                        if !visible(&p) {
                            continue;
                        }
                        let (cx, cy) = (px(&x, p.0), py(&y, p.1));
                        let _ = writeln!(
                            out,
                            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/><circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{color}"/>"#,
                            py(&y, p.1 - e),
                            py(&y, p.1 + e)
                        );
                    }
                }
            }
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                LEFT + 10.0,
                TOP + 16.0 + 16.0 * k as f64,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Visibility heatmap over `(β, Δt)` with key-rate contours.
pub fn heatmap_svg(map: &KeyRateMap, title: &str) -> String {
    let x = Axis::new(map.betas.iter().copied(), false);
    let y = Axis::new(map.delta_ts.iter().copied(), false);
    let mut out = String::new();
    frame(&mut out, title, "chirp β (ps⁻²)", "misalignment Δt (ps)", &x, &y);
    let edges = |v: &[f64], i: usize| {
        let lo = if i == 0 { v[0] } else { 0.5 * (v[i - 1] + v[i]) };
        let hi = if i + 1 == v.len() { v[i] } else { 0.5 * (v[i] + v[i + 1]) };
        (lo, hi)
    };
    for (j, _) in map.delta_ts.iter().enumerate() {
        for (i, _) in map.betas.iter().enumerate() {
            let v = map.cell(i, j).visibility;
            let (x0, x1) = edges(&map.betas, i);
            let (y0, y1) = edges(&map.delta_ts, j);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                px(&x, x0),
                py(&y, y1),
                (px(&x, x1) - px(&x, x0)).max(0.5),
                (py(&y, y0) - py(&y, y1)).max(0.5),
                shade(v / 0.5)
            );
        }
    }
    for level in &map.contours {
        for line in &level.polylines {
            let pts: Vec<String> = line.iter().map(|&(a, b)| format!("{:.2},{:.2}", px(&x, a), py(&y, b))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="white" stroke-width="1.5" points="{}"><title>R/Rmax = {}</title></polyline>"#,
                pts.join(" "),
                level.level
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Dark blue to yellow.
fn shade(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let (r, g, b) = (68.0 + f * (253.0 - 68.0), 1.0 + f * (231.0 - 1.0), 84.0 + f * (37.0 - 84.0));
    format!("rgb({},{},{})", r.round(), g.round(), b.round())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
