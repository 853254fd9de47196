//! Deterministic SVG line charts. Coordinates are printed with fixed precision so
//! identical inputs give byte-identical files.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

/// Shaded region between two curves sharing x values.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub label: String,
    pub lower: Vec<(f64, f64)>,
    pub upper: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub band: Option<Band>,
    pub series: Vec<Series>,
    pub annotation: Option<String>,
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool, px_lo: f64, px_hi: f64) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter_map(|v| transform(v, log)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        Some(Axis { log, lo, hi, px_lo, px_hi })
    }

    fn px(&self, v: f64) -> Option<f64> {
        transform(v, self.log).map(|t| self.px_lo + (t - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i64, self.hi.floor() as i64);
            if b >= a {
                let step = ((b - a) / 6 + 1).max(1);
                return (a..=b).step_by(step as usize).map(|k| (k as f64, format!("1e{k}"))).collect();
            }
        }
        (0..=4)
            .map(|k| {
                let t = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
                let label = if self.log { format!("{:.2e}", 10f64.powf(t)) } else { tick_label(t) };
                (t, label)
            })
            .collect()
    }

    fn px_of_transformed(&self, t: f64) -> f64 {
        self.px_lo + (t - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn transform(v: f64, log: bool) -> Option<f64> {
    if !v.is_finite() || (log && v <= 0.0) {
        None
    } else if log {
        Some(v.log10())
    } else {
        Some(v)
    }
}

fn tick_label(t: f64) -> String {
    let a = t.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{t:.2e}")
    } else {
        format!("{t:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn path_data(points: &[(f64, f64)], x: &Axis, y: &Axis) -> String {
    let mut d = String::new();
    let mut pen_down = false;
    for &(a, b) in points {
        match (x.px(a), y.px(b)) {
            (Some(px), Some(py)) => {
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px, py);
                pen_down = true;
            }
            _ => pen_down = false,
        }
    }
    d.trim_end().to_string()
}

/// Renders the chart; `None` when no point can be placed on the axes.
pub fn render(chart: &Chart) -> Option<String> {
    let all_points = || {
        chart
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain(chart.band.iter().flat_map(|b| b.lower.iter().chain(b.upper.iter())))
            .copied()
            .filter(|&(a, b)| transform(a, chart.log_x).is_some() && transform(b, chart.log_y).is_some())
    };
    all_points().next()?;
    let x = Axis::fit(all_points().map(|p| p.0), chart.log_x, LEFT, WIDTH - RIGHT)?;
    let y = Axis::fit(all_points().map(|p| p.1), chart.log_y, HEIGHT - BOTTOM, TOP)?;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, escape(&chart.title));

    for (t, label) in x.ticks() {
        let px = x.px_of_transformed(t);
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{TOP:.2}" x2="{px:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, HEIGHT - BOTTOM);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, HEIGHT - BOTTOM + 14.0, escape(&label));
    }
    for (t, label) in y.ticks() {
        let py = y.px_of_transformed(t);
        let _ = writeln!(s, r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/>"##, WIDTH - RIGHT);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 4.0, py + 4.0, escape(&label));
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - RIGHT - LEFT,
        HEIGHT - BOTTOM - TOP
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, HEIGHT - 8.0, escape(&chart.x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{0:.2}" text-anchor="middle" transform="rotate(-90 14 {0:.2})">{1}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(&chart.y_label)
    );

    let mut legend: Vec<(String, String, Style)> = Vec::new();
    if let Some(band) = &chart.band {
        let mut pts: Vec<(f64, f64)> = band.upper.clone();
        pts.extend(band.lower.iter().rev().copied());
        let poly: Vec<String> = pts.iter().filter_map(|&(a, b)| Some(format!("{:.2},{:.2}", x.px(a)?, y.px(b)?))).collect();
        if poly.len() >= 3 {
            let _ = writeln!(s, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##, poly.join(" "));
            legend.push((band.label.clone(), "#9ecae1".to_string(), Style::Line));
        }
    }
    for (k, series) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match series.style {
            Style::Markers => {
                for &(a, b) in &series.points {
                    if let (Some(px), Some(py)) = (x.px(a), y.px(b)) {
                        let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{color}"/>"#);
                    }
                }
            }
            style => {
                let d = path_data(&series.points, &x, &y);
                if !d.is_empty() {
                    let dash = if style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#);
                }
            }
        }
        legend.push((series.label.clone(), color.to_string(), series.style));
    }
    for (k, (label, color, style)) in legend.iter().enumerate() {
        let ly = TOP + 8.0 + 16.0 * k as f64;
        let lx = WIDTH - RIGHT + 10.0;
        if *style == Style::Markers {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{ly:.2}" r="2.5" fill="{color}"/>"#, lx + 9.0);
        } else {
            let dash = if *style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"{dash}/>"#, lx + 18.0);
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 24.0, ly + 4.0, escape(label));
    }
    if let Some(note) = &chart.annotation {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, LEFT + 8.0, TOP + 16.0, escape(note));
    }
    s.push_str("</svg>\n");
    Some(s)
}
