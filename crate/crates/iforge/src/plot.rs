//! Static SVG rendering of prediction intervals.

use std::fmt::Write as _;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 48.0;

/// One band per significance level.
#[derive(Debug, Clone)]
pub struct Band<'a> {
    pub alpha: f64,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

/// Points sorted by prediction on the x-axis; bands drawn widest first, the
/// prediction as a line and observations, when known, as dots.
pub fn interval_svg(title: &str, center: &[f64], bands: &[Band<'_>], observed: Option<&[f64]>) -> String {
    let n = center.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| center[a].total_cmp(&center[b]).then(a.cmp(&b)));

    let values =
        bands.iter().flat_map(|b| b.lower.iter().chain(b.upper)).chain(center).chain(observed.into_iter().flatten());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let x = |k: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * if n > 1 { k as f64 / (n - 1) as f64 } else { 0.5 };
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="24" font-size="14">{}</text>"#, escape(title));

    let mut sorted: Vec<&Band<'_>> = bands.iter().collect();
    sorted.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    for (rank, band) in sorted.iter().enumerate() {
        let opacity = 0.18 + 0.14 * rank as f64;
        let mut points = String::new();
        for (k, &i) in order.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", x(k), y(band.upper[i]));
        }
        for (k, &i) in order.iter().enumerate().rev() {
            let _ = write!(points, "{:.2},{:.2} ", x(k), y(band.lower[i]));
        }
        let _ = writeln!(
            svg,
            r##"<polygon points="{}" fill="#3b6fb6" fill-opacity="{opacity:.2}" stroke="none"><title>{}% interval</title></polygon>"##,
            points.trim_end(),
            crate::io::level_label(band.alpha)
        );
    }
    let line: Vec<String> =
        order.iter().enumerate().map(|(k, &i)| format!("{:.2},{:.2}", x(k), y(center[i]))).collect();
    let _ =
        writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#1b2a41" stroke-width="1.5"/>"##, line.join(" "));
    if let Some(obs) = observed {
        for (k, &i) in order.iter().enumerate() {
            let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#c0392b"/>"##, x(k), y(obs[i]));
        }
    }

    let axis = HEIGHT - MARGIN;
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{axis}" x2="{}" y2="{axis}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{axis}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">test point, sorted by prediction</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{hi:.4}</text>"#, MARGIN - 4.0, MARGIN + 4.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{lo:.4}</text>"#, MARGIN - 4.0, axis);
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
