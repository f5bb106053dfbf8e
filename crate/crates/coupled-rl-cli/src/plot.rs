//! Minimal static SVG line plots: per-episode returns averaged over
//! seeds, one polyline per configuration hash.

use std::collections::BTreeMap;

use crate::runner::RunRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Mean return per episode for each config hash present in the records.
fn series_by_hash(records: &[RunRecord]) -> BTreeMap<String, Vec<f64>> {
    let mut grouped: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in records {
        let entry = grouped
            .entry(r.config_hash.clone())
            .or_default()
            .entry(r.episode)
            .or_insert((0.0, 0));
        entry.0 += r.ret;
        entry.1 += 1;
    }
    grouped
        .into_iter()
        .map(|(hash, by_episode)| {
            let series = by_episode
                .into_values()
                .map(|(sum, n)| sum / n as f64)
                .collect();
            (hash, series)
        })
        .collect()
}

/// Renders mean-return curves as a standalone SVG document.
pub fn render_returns_svg(records: &[RunRecord], title: &str) -> String {
    let series = series_by_hash(records);
    let max_len = series.values().map(Vec::len).max().unwrap_or(0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for values in series.values() {
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }

    let x_of = |episode: usize| {
        MARGIN + (WIDTH - 2.0 * MARGIN) * episode as f64 / (max_len.max(2) - 1) as f64
    };
    let y_of = |value: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (value - lo) / (hi - lo);

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    ));
    svg.push_str(&format!(
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    ));
    svg.push_str(&format!(
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        WIDTH / 2.0
    ));
    // Axes.
    svg.push_str(&format!(
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    ));
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">episode</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    ));
    for (tick, value) in [(HEIGHT - MARGIN, lo), (MARGIN, hi)] {
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12">{value:.1}</text>"#,
            MARGIN - 6.0,
            tick + 4.0
        ));
    }
    for (i, (hash, values)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(e, &v)| format!("{:.2},{:.2}", x_of(e), y_of(v)))
            .collect();
        svg.push_str(&format!(
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="monospace" font-size="11" fill="{color}">{hash}</text>"#,
            WIDTH - MARGIN - 140.0,
            MARGIN + 16.0 * (i as f64 + 1.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
