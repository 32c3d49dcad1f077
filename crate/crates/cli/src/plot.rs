//! Static SVG rendering of power curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use probetest::PowerRecord;

use crate::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn x(&self, sigma: f64) -> f64 {
        let w = WIDTH - LEFT - RIGHT;
        LEFT + w * (sigma.log10() - self.lo) / (self.hi - self.lo)
    }

    fn y(&self, power: f64) -> f64 {
        let h = HEIGHT - TOP - BOTTOM;
        TOP + h * (1.0 - power.clamp(0.0, 1.0))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders power against `log₁₀ σ`, one polyline per test, with a dashed
/// line at `alpha`.
pub fn render_svg(records: &[PowerRecord], alpha: f64, title: &str) -> String {
    let (mut lo, mut hi) = records
        .iter()
        .map(|r| r.sigma.log10())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (-6.0, 0.0);
    }
    lo = lo.floor();
    hi = hi.ceil();
    if hi <= lo {
        hi = lo + 1.0;
    }
    let f = Frame { lo, hi };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );

    let (x0, x1, y0, y1) = (f.x(10f64.powf(lo)), f.x(10f64.powf(hi)), f.y(0.0), f.y(1.0));
    for d in (lo as i32)..=(hi as i32) {
        let x = f.x(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#,
            y0 + 18.0
        );
    }
    for i in 0..=5 {
        let p = i as f64 / 5.0;
        let y = f.y(p);
        let _ = writeln!(s, r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{p:.1}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">noise level σ</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">power</text>"#,
        (y0 + y1) / 2.0
    );
    let ya = f.y(alpha);
    let _ = writeln!(
        s,
        r##"<line class="alpha" x1="{x0:.1}" y1="{ya:.1}" x2="{x1:.1}" y2="{ya:.1}" stroke="#555" stroke-dasharray="6 4"/>"##
    );

    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        curves.entry(r.test.name()).or_default().push((r.sigma, r.power));
    }
    for (i, (name, mut pts)) in curves.into_iter().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", f.x(*x), f.y(*y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" data-test="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&name),
            path.join(" ")
        );
        let ly = TOP + 20.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&name));
    }
    s.push_str("</svg>\n");
    s
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_plot(records: &[PowerRecord], alpha: f64, title: &str, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, render_svg(records, alpha, title)).map_err(|e| CliError::io(path, e))
}
