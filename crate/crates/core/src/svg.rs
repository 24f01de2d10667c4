//! Small standalone SVG documents: line/bar overlays and heatmaps.
//!
//! Output depends only on the inputs; coordinates are printed with fixed
//! precision so identical data gives identical bytes.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Bars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            style: Style::Line,
        }
    }

    /// Bars centred on the given abscissae.
    pub fn bars(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            style: Style::Bars,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        if !x0.is_finite() || x1 <= x0 {
            (x0, x1) = (0.0, 1.0);
        }
        if y1 <= 0.0 {
            y1 = 1.0;
        }
        (x0, x1, 0.0, y1 * 1.05)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - 2.0 * MARGIN;
        let ph = HEIGHT - 2.0 * MARGIN;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;
        let mut out = String::new();
        header(&mut out);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        // axes and ticks
        let _ = writeln!(
            out,
            r#"<path d="M{m:.2},{t:.2}V{b:.2}H{r:.2}" stroke="black" fill="none"/>"#,
            m = MARGIN,
            t = MARGIN,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN
        );
        for k in 0..=5 {
            let x = x0 + (x1 - x0) * k as f64 / 5.0;
            let y = y0 + (y1 - y0) * k as f64 / 5.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(x),
                HEIGHT - MARGIN + 16.0,
                tick(x)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN - 6.0,
                sy(y) + 4.0,
                tick(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            match s.style {
                Style::Bars => {
                    let w = if s.points.len() > 1 {
                        (sx(s.points[1].0) - sx(s.points[0].0)).abs()
                    } else {
                        pw / 20.0
                    };
                    for &(x, y) in &s.points {
                        let top = sy(y.max(0.0));
                        let _ = writeln!(
                            out,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}" fill-opacity="0.35"/>"#,
                            sx(x) - w / 2.0,
                            top,
                            w,
                            (HEIGHT - MARGIN - top).max(0.0)
                        );
                    }
                }
                Style::Line => {
                    let mut d = String::new();
                    for (i, &(x, y)) in s.points.iter().enumerate() {
                        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
                    }
                    let _ = writeln!(
                        out,
                        r#"<path d="{d}" stroke="{colour}" stroke-width="1.6" fill="none"/>"#
                    );
                }
            }
            let ly = MARGIN + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="12" height="8" fill="{colour}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                WIDTH - MARGIN - 150.0,
                ly - 8.0,
                WIDTH - MARGIN - 134.0,
                ly,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Row-major `n × n` heatmap over the square `[lo, hi]²`; row index is `x`.
pub fn heatmap(title: &str, lo: f64, hi: f64, n: usize, values: &[f64]) -> String {
    let side = HEIGHT - 2.0 * MARGIN;
    let cell = side / n.max(1) as f64;
    let peak = values.iter().cloned().fold(0.0f64, f64::max);
    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for ix in 0..n {
        for iy in 0..n {
            let v = values[ix * n + iy];
            let t = if peak > 0.0 { (v / peak).clamp(0.0, 1.0) } else { 0.0 };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                MARGIN + ix as f64 * cell,
                HEIGHT - MARGIN - (iy + 1) as f64 * cell,
                cell + 0.01,
                cell + 0.01,
                colour(t)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{side:.2}" height="{side:.2}" stroke="black" fill="none"/>"#,
        MARGIN, MARGIN
    );
    for (k, v) in [lo, 0.5 * (lo + hi), hi].iter().enumerate() {
        let at = MARGIN + side * k as f64 / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{at:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 16.0,
            tick(*v)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            HEIGHT - MARGIN - side * k as f64 / 2.0 + 4.0,
            tick(*v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">max {:.6e}</text>"#,
        MARGIN + side + 12.0,
        MARGIN + 12.0,
        peak
    );
    out.push_str("</svg>\n");
    out
}

// black -> red -> yellow -> white
fn colour(t: f64) -> String {
    let r = (3.0 * t).min(1.0);
    let g = (3.0 * t - 1.0).clamp(0.0, 1.0);
    let b = (3.0 * t - 2.0).clamp(0.0, 1.0);
    format!(
        "#{:02x}{:02x}{:02x}",
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8
    )
}
