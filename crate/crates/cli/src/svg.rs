//! Self-contained SVG heatmaps and line plots.
//!
//! Output depends only on the data: fixed canvas, fixed number formats and
//! a fixed 8-stop colour ramp, so files are byte-stable across platforms.

use std::fmt::Write as _;

use dlgc::sweep::{Measure, SweepResult, SweepRow};

/// Viridis-like ramp, low to high.
pub const RAMP: [&str; 8] = [
    "#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725",
];
/// Fill for unstable or failed grid points.
pub const MASK: &str = "#bdbdbd";
const SERIES: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn hex(c: &str) -> [f64; 3] {
    let v = |i: usize| u8::from_str_radix(&c[i..i + 2], 16).unwrap_or(0) as f64;
    [v(1), v(3), v(5)]
}

/// Colour for `t ∈ [0, 1]`, linearly interpolated between ramp stops.
pub fn ramp_colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (RAMP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(RAMP.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (hex(RAMP[i]), hex(RAMP[i + 1]));
    let ch = |k: usize| (a[k] + (b[k] - a[k]) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

fn tick(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for k in 0..=4 {
        let xv = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let yv = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let (x, y) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            b + 5.0,
            b + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            y + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// 2-D grid coloured by `measure`; masked cells mark unstable points.
pub fn heatmap(result: &SweepResult, measure: Measure, title: &str) -> String {
    let spec = &result.spec;
    let (ax, ay) = (&spec.axes[0], &spec.axes[1]);
    let (xs, ys) = (ax.values(), ay.values());
    let values: Vec<Option<f64>> = result.rows.iter().map(|r| r.measure(measure)).collect();
    let vmax = values.iter().flatten().cloned().fold(0.0f64, f64::max);
    let vmin = values.iter().flatten().cloned().fold(0.0f64, f64::min);
    let (vmin, vmax) = span(vmin, vmax);

    // cell edges halfway between grid points
    let edges = |v: &[f64]| -> Vec<f64> {
        if v.len() == 1 {
            return vec![v[0] - 0.5, v[0] + 0.5];
        }
        let mut e = vec![v[0] - (v[1] - v[0]) / 2.0];
        e.extend(v.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        e.push(v[v.len() - 1] + (v[v.len() - 1] - v[v.len() - 2]) / 2.0);
        e
    };
    let (ex, ey) = (edges(&xs), edges(&ys));
    let f = Frame {
        x0: ex[0],
        x1: ex[ex.len() - 1],
        y0: ey[0],
        y1: ey[ey.len() - 1],
    };

    let mut s = String::new();
    open(&mut s, title);
    for (i, _) in xs.iter().enumerate() {
        for (j, _) in ys.iter().enumerate() {
            let fill = match values[i * ys.len() + j] {
                Some(v) => ramp_colour((v - vmin) / (vmax - vmin)),
                None => MASK.to_string(),
            };
            let (x, x2) = (f.px(ex[i]), f.px(ex[i + 1]));
            let (y, y2) = (f.py(ey[j + 1]), f.py(ey[j]));
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#,
                x2 - x,
                y2 - y
            );
        }
    }
    axes(&mut s, &f, ax.param.label(), ay.param.label());

    // colour bar
    let (bx, bw) = (WIDTH - RIGHT + 25.0, 18.0);
    let (bt, bb) = (TOP, HEIGHT - BOTTOM);
    let n = 64;
    for k in 0..n {
        let t0 = k as f64 / n as f64;
        let y = bb - (bb - bt) * (t0 + 1.0 / n as f64);
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{y:.2}" width="{bw}" height="{:.2}" fill="{}"/>"#,
            (bb - bt) / n as f64 + 0.2,
            ramp_colour(t0 + 0.5 / n as f64)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{bx}" y="{bt}" width="{bw}" height="{}" fill="none" stroke="black"/>"#,
        bb - bt
    );
    for k in 0..=4 {
        let v = vmin + (vmax - vmin) * k as f64 / 4.0;
        let y = bb - (bb - bt) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            bx + bw + 5.0,
            y + 4.0,
            tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        bx + bw / 2.0,
        bt - 8.0,
        measure.column()
    );
    let _ = writeln!(
        s,
        r#"<rect x="{bx}" y="{:.2}" width="{bw}" height="10" fill="{MASK}"/><text x="{:.2}" y="{:.2}">unstable</text>"#,
        bb + 12.0,
        bx + bw + 5.0,
        bb + 21.0
    );
    s.push_str("</svg>\n");
    s
}

struct Series {
    label: String,
    points: Vec<(f64, Option<f64>)>,
}

/// Line plot over the first axis. One series per measure, or one per value
/// of a short second axis (first measure only).
pub fn line_plot(result: &SweepResult, title: &str, reference: Option<(f64, &str)>) -> String {
    let spec = &result.spec;
    let ax = &spec.axes[0];
    let mut series: Vec<Series> = Vec::new();
    let rows: &[SweepRow] = &result.rows;
    match spec.axes.get(1) {
        None => {
            for m in &spec.measures {
                series.push(Series {
                    label: m.column().into(),
                    points: rows.iter().map(|r| (r.coords[0], r.measure(*m))).collect(),
                });
            }
        }
        Some(ay) => {
            let m = spec.measures[0];
            for (j, yv) in ay.values().iter().enumerate() {
                series.push(Series {
                    label: format!("{} {} = {}", m.column(), ay.param.label(), tick(*yv)),
                    points: rows
                        .iter()
                        .skip(j)
                        .step_by(ay.count)
                        .map(|r| (r.coords[0], r.measure(m)))
                        .collect(),
                });
            }
        }
    }

    let ys = series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1));
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for y in ys {
        lo = lo.min(y);
        hi = hi.max(y);
    }
    if let Some((r, _)) = reference {
        hi = hi.max(r);
    }
    let (lo, hi) = span(lo, hi * 1.05);
    let f = Frame {
        x0: ax.start.min(ax.stop),
        x1: ax.start.max(ax.stop),
        y0: lo,
        y1: hi,
    };
    let (f_x0, f_x1) = if f.x1 > f.x0 { (f.x0, f.x1) } else { (f.x0 - 0.5, f.x0 + 0.5) };
    let f = Frame {
        x0: f_x0,
        x1: f_x1,
        ..f
    };

    let mut s = String::new();
    open(&mut s, title);
    axes(&mut s, &f, ax.param.label(), "");
    for (k, ser) in series.iter().enumerate() {
        let colour = SERIES[k % SERIES.len()];
        // unstable points break the line
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in &ser.points {
            match y {
                Some(y) => runs.last_mut().unwrap().push((f.px(x), f.py(y))),
                None if !runs.last().unwrap().is_empty() => runs.push(Vec::new()),
                None => {}
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 16.0 * k as f64 + 8.0;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    if let Some((r, label)) = reference {
        let y = f.py(r);
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="black" stroke-dasharray="6 4"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            WIDTH - RIGHT,
            WIDTH - RIGHT - 4.0,
            y - 4.0,
            escape(label)
        );
    }
    let masked = rows.iter().filter(|r| !r.is_stable()).count();
    if masked > 0 {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{MASK}">{masked} unstable points omitted</text>"#,
            LEFT + 6.0,
            TOP + 16.0
        );
    }
    s.push_str("</svg>\n");
    s
}
