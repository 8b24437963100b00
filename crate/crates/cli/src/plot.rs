//! Self-contained SVG figures: line charts, heatmaps and scatter grids.
//!
//! Every renderer returns `None` when there is nothing finite to draw.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        return format!("{v:.1e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Roughly five round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + 1e-9 * span {
        out.push(if v.abs() < 1e-12 * step { 0.0 } else { v });
        v += step;
    }
    out
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let w = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - w, hi + w)
    }
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        esc(title)
    );
}

#[derive(Clone, Debug)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, Option<f64>)>,
    pub dashed: bool,
}

impl Line {
    pub fn new(label: impl Into<String>, points: Vec<(f64, Option<f64>)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
        }
    }

    pub fn dense(label: impl Into<String>, xs: &[f64], ys: &[f64]) -> Self {
        Self::new(label, xs.iter().zip(ys).map(|(x, y)| (*x, Some(*y))).collect())
    }
}

#[derive(Clone, Debug, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
    pub log_x: bool,
}

impl LineChart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn line(mut self, line: Line) -> Self {
        self.lines.push(line);
        self
    }

    fn fx(&self, x: f64) -> Option<f64> {
        let v = if self.log_x { (x > 0.0).then(|| x.log10())? } else { x };
        v.is_finite().then_some(v)
    }

    pub fn render(&self) -> Option<String> {
        let finite: Vec<(f64, f64)> = self
            .lines
            .iter()
            .flat_map(|l| l.points.iter())
            .filter_map(|&(x, y)| Some((self.fx(x)?, y.filter(|v| v.is_finite())?)))
            .collect();
        if finite.is_empty() {
            return None;
        }
        let (w, h) = (680.0, 420.0);
        let (ml, mr, mt, mb) = (70.0, 170.0, 36.0, 50.0);
        let (pw, ph) = (w - ml - mr, h - mt - mb);
        let fold = |f: fn(&(f64, f64)) -> f64| {
            finite.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        };
        let (x0, x1) = padded(fold(|p| p.0).0, fold(|p| p.0).1);
        let (y0, y1) = padded(fold(|p| p.1).0, fold(|p| p.1).1);
        let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        header(&mut out, w, h, &self.title);
        let _ = writeln!(out, r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        for t in ticks(x0, x1) {
            let label = if self.log_x { tick_label(10f64.powf(t)) } else { tick_label(t) };
            let _ = writeln!(
                out,
                r##"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="#333"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"##,
                sx(t),
                mt + ph,
                mt + ph + 4.0,
                mt + ph + 16.0,
                label
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                out,
                r##"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="#333"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"##,
                ml - 4.0,
                sy(t),
                ml,
                ml - 6.0,
                sy(t) + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            h - 12.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            mt + ph / 2.0,
            esc(&self.y_label)
        );

        for (i, line) in self.lines.iter().enumerate() {
            let c = color(i);
            let dash = if line.dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let mut segment: Vec<(f64, f64)> = Vec::new();
            let flush = |seg: &mut Vec<(f64, f64)>, out: &mut String| {
                if seg.len() > 1 {
                    let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{c}" stroke-width="1.6"{dash} points="{}"/>"#,
                        pts.join(" ")
                    );
                } else if let Some((x, y)) = seg.first() {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, sx(*x), sy(*y));
                }
                seg.clear();
            };
            for &(x, y) in &line.points {
                match (self.fx(x), y.filter(|v| v.is_finite())) {
                    (Some(x), Some(y)) => segment.push((x, y)),
                    _ => flush(&mut segment, &mut out),
                }
            }
            flush(&mut segment, &mut out);
            let ly = mt + 10.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{c}" stroke-width="2"{dash}/><text x="{3}" y="{4}">{5}</text>"#,
                ml + pw + 10.0,
                ly,
                ml + pw + 30.0,
                ml + pw + 35.0,
                ly + 4.0,
                esc(&line.label)
            );
        }
        out.push_str("</svg>\n");
        Some(out)
    }
}

/// Cell `(row i, column j)` is `values[i * xs.len() + j]` at `(xs[j], ys[i])`.
/// `None` cells are left blank.
#[derive(Clone, Debug, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Option<f64>>,
    /// Curves in data coordinates, drawn on top.
    pub overlays: Vec<Vec<(f64, f64)>>,
    pub markers: Vec<(String, (f64, f64))>,
}

const STOPS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn ramp(u: f64) -> String {
    let u = u.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (u.floor() as usize).min(STOPS.len() - 2);
    let f = u - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Fractional index of `v` on a sorted axis, for overlays on a cell grid.
fn axis_pos(axis: &[f64], v: f64) -> f64 {
    if axis.len() < 2 {
        return 0.0;
    }
    let k = axis.partition_point(|a| *a <= v).clamp(1, axis.len() - 1);
    let (a, b) = (axis[k - 1], axis[k]);
    (k - 1) as f64 + (v - a) / (b - a)
}

impl Heatmap {
    pub fn render(&self) -> Option<String> {
        let finite: Vec<f64> = self.values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() || self.xs.is_empty() || self.ys.is_empty() {
            return None;
        }
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let (w, h) = (640.0, 480.0);
        let (ml, mr, mt, mb) = (70.0, 110.0, 36.0, 60.0);
        let (pw, ph) = (w - ml - mr, h - mt - mb);
        let (cw, chh) = (pw / nx as f64, ph / ny as f64);
        let cx = |j: f64| ml + (j + 0.5) * cw;
        let cy = |i: f64| mt + ph - (i + 0.5) * chh;

        let mut out = String::new();
        header(&mut out, w, h, &self.title);
        for i in 0..ny {
            for j in 0..nx {
                if let Some(v) = self.values[i * nx + j].filter(|v| v.is_finite()) {
                    let u = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}</title></rect>"#,
                        ml + j as f64 * cw,
                        mt + ph - (i + 1) as f64 * chh,
                        cw,
                        chh,
                        ramp(u),
                        tick_label(v)
                    );
                }
            }
        }
        let _ = writeln!(out, r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        for (j, x) in self.xs.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                cx(j as f64),
                mt + ph + 16.0,
                tick_label(*x)
            );
        }
        for (i, y) in self.ys.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                ml - 6.0,
                cy(i as f64) + 4.0,
                tick_label(*y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            h - 20.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            mt + ph / 2.0,
            esc(&self.y_label)
        );
        for line in &self.overlays {
            let pts: Vec<String> = line
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", cx(axis_pos(&self.xs, x)), cy(axis_pos(&self.ys, y))))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="white" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
        }
        for (k, (label, (x, y))) in self.markers.iter().enumerate() {
            let (px, py) = (cx(axis_pos(&self.xs, *x)), cy(axis_pos(&self.ys, *y)));
            let _ = writeln!(
                out,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{}" stroke="white"/><text x="{:.2}" y="{:.2}" fill="white">{}</text>"#,
                color(k + 1),
                px + 6.0,
                py - 6.0,
                esc(label)
            );
        }
        // color bar
        let bx = ml + pw + 20.0;
        for k in 0..50 {
            let u = k as f64 / 49.0;
            let _ = writeln!(
                out,
                r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                mt + ph - (k + 1) as f64 * ph / 50.0,
                ph / 50.0 + 0.5,
                ramp(u)
            );
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 20.0, mt + ph, tick_label(lo));
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 20.0, mt + 10.0, tick_label(hi));
        out.push_str("</svg>\n");
        Some(out)
    }
}

/// One point cloud inside a scatter panel.
#[derive(Clone, Debug)]
pub struct Layer {
    pub label: String,
    /// Flat `(x, y)` pairs.
    pub points: Vec<f64>,
}

/// A `rows × cols` grid of scatter panels with shared axes.
#[derive(Clone, Debug, Default)]
pub struct ScatterGrid {
    pub title: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `panels[r][c]` holds the layers of one panel.
    pub panels: Vec<Vec<Vec<Layer>>>,
    pub max_points: usize,
}

impl ScatterGrid {
    pub fn render(&self) -> Option<String> {
        let all = self.panels.iter().flatten().flatten().flat_map(|l| l.points.chunks(2));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for p in all {
            if p.len() == 2 && p[0].is_finite() && p[1].is_finite() {
                any = true;
                x0 = x0.min(p[0]);
                x1 = x1.max(p[0]);
                y0 = y0.min(p[1]);
                y1 = y1.max(p[1]);
            }
        }
        if !any {
            return None;
        }
        let (x0, x1) = padded(x0, x1);
        let (y0, y1) = padded(y0, y1);
        let rows = self.panels.len();
        let cols = self.panels.iter().map(|r| r.len()).max().unwrap_or(0);
        let cell = 150.0;
        let longest = self.row_labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
        let (ml, mt) = ((longest as f64 * 7.0 + 16.0).max(40.0), 60.0);
        let (w, h) = (ml + cols as f64 * (cell + 10.0) + 10.0, mt + rows as f64 * (cell + 10.0) + 10.0);
        let mut out = String::new();
        header(&mut out, w, h, &self.title);

        let layer_names: Vec<&str> = {
            let mut names: Vec<&str> = Vec::new();
            for l in self.panels.iter().flatten().flatten() {
                if !names.contains(&l.label.as_str()) {
                    names.push(&l.label);
                }
            }
            names
        };
        for (k, name) in layer_names.iter().enumerate() {
            let x = ml + 120.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<circle cx="{x}" cy="36" r="4" fill="{}"/><text x="{}" y="40">{}</text>"#,
                color(k),
                x + 8.0,
                esc(name)
            );
        }
        for (c, label) in self.col_labels.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                ml + c as f64 * (cell + 10.0) + cell / 2.0,
                mt - 4.0,
                esc(label)
            );
        }
        for (r, row) in self.panels.iter().enumerate() {
            let oy = mt + r as f64 * (cell + 10.0);
            if let Some(label) = self.row_labels.get(r) {
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
                    ml - 6.0,
                    oy + cell / 2.0,
                    esc(label)
                );
            }
            for (c, layers) in row.iter().enumerate() {
                let ox = ml + c as f64 * (cell + 10.0);
                let _ = writeln!(
                    out,
                    r##"<rect x="{ox:.1}" y="{oy:.1}" width="{cell}" height="{cell}" fill="none" stroke="#999"/>"##
                );
                for l in layers {
                    let k = layer_names.iter().position(|n| *n == l.label).unwrap_or(0);
                    let n = l.points.len() / 2;
                    let step = if self.max_points > 0 { n.div_ceil(self.max_points).max(1) } else { 1 };
                    let _ = write!(out, r#"<g fill="{}" fill-opacity="0.45">"#, color(k));
                    for p in l.points.chunks(2).step_by(step) {
                        if p.len() == 2 && p[0].is_finite() && p[1].is_finite() {
                            let px = ox + (p[0] - x0) / (x1 - x0) * cell;
                            let py = oy + cell - (p[1] - y0) / (y1 - y0) * cell;
                            let _ = write!(out, r#"<circle cx="{px:.1}" cy="{py:.1}" r="1.2"/>"#);
                        }
                    }
                    out.push_str("</g>\n");
                }
            }
        }
        out.push_str("</svg>\n");
        Some(out)
    }
}
