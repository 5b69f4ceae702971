//! Single-curve line plots as standalone SVG.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Plots `points` as one polyline; non-finite points are skipped.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let finite: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (x0, x1) = range(finite.iter().map(|p| p.0));
    let (y0, y1) = range(finite.iter().map(|p| p.1));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(
        s,
        r#"<polyline points="{left},{top} {left},{bottom} {right},{bottom}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let text = |s: &mut String, x: f64, y: f64, anchor: &str, body: &str| {
        writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="14" text-anchor="{anchor}">{}</text>"#, escape(body)).unwrap();
    };
    text(&mut s, WIDTH / 2.0, MARGIN / 2.0, "middle", title);
    text(&mut s, WIDTH / 2.0, HEIGHT - 15.0, "middle", x_label);
    text(&mut s, 15.0, HEIGHT / 2.0, "start", y_label);
    text(&mut s, left, bottom + 20.0, "middle", &format!("{x0:.4}"));
    text(&mut s, right, bottom + 20.0, "middle", &format!("{x1:.4}"));
    text(&mut s, left - 5.0, bottom, "end", &format!("{y0:.4}"));
    text(&mut s, left - 5.0, top + 5.0, "end", &format!("{y1:.4}"));

    let coords: Vec<String> = finite
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        coords.join(" ")
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
