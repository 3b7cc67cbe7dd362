//! SVG line charts of mean clean error against tree size, one line per eta.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::report::ReportRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// `[min, max]` widened by 5% of the span on each side; a zero span widens by 0.5.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

/// `eta -> [(t, mean error_clean)]` for one experiment.
fn lines(rows: &[&ReportRow]) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut acc: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        let e = acc
            .entry(r.eta.to_string())
            .or_default()
            .entry(r.t)
            .or_default();
        e.0 += r.error_clean;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(eta, pts)| {
            let v = pts
                .into_iter()
                .map(|(t, (sum, n))| (t as f64, sum / n as f64))
                .collect();
            (eta, v)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Self-contained SVG for one experiment's rows.
pub fn render_svg(experiment: &str, rows: &[&ReportRow]) -> String {
    let series = lines(rows);
    let (x0, x1) = padded_range(series.values().flatten().map(|p| p.0));
    let (y0, y1) = padded_range(series.values().flatten().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(experiment)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, x) in [(x0, LEFT), (x1, LEFT + pw)] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.4}</text>"#,
            TOP + ph + 16.0
        );
    }
    for (v, y) in [(y0, TOP + ph), (y1, TOP)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.4}</text>"#,
            LEFT - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">error_clean</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, (eta, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">eta={}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(eta)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<experiment>.svg` per experiment into `dir`.
pub fn emit_plots(rows: &[ReportRow], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let mut by_exp: BTreeMap<&str, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        by_exp.entry(&r.experiment).or_default().push(r);
    }
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (exp, rs) in by_exp {
        let path = dir.join(format!("{}.svg", exp.replace('/', "-")));
        fs::write(&path, render_svg(exp, &rs))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(eta: f64, t: usize, e: f64) -> ReportRow {
        ReportRow {
            experiment: "x".into(),
            trial: 0,
            t,
            eta,
            gamma: f64::NAN,
            eps: 0.1,
            error_clean: e,
            error_corrupted: e,
            g_value: 0.0,
            wall_time: 0.0,
        }
    }

    #[test]
    fn single_row_single_point() {
        let r = row(0.0, 1, 0.5);
        let svg = render_svg("x", &[&r]);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(r#"points="277.00,192.00""#));
    }

    #[test]
    fn two_etas_two_lines() {
        let rows = [
            row(0.0, 1, 0.5),
            row(0.0, 2, 0.1),
            row(0.1, 1, 0.5),
            row(0.1, 2, 0.3),
        ];
        let refs: Vec<&ReportRow> = rows.iter().collect();
        let svg = render_svg("x", &refs);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("eta=0.1"));
    }

    #[test]
    fn padding_is_five_percent() {
        assert_eq!(padded_range([0.0, 10.0]), (-0.5, 10.5));
        assert_eq!(padded_range([2.0]), (1.5, 2.5));
    }

    #[test]
    fn empty_report_rejected() {
        let dir = std::env::temp_dir();
        assert!(matches!(
            emit_plots(&[], &dir),
            Err(HarnessError::EmptyReport)
        ));
    }
}
