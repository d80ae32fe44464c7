//! Minimal SVG line plots with a logarithmic radius axis.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Points with `x ≤ 0` are dropped (the origin node), as are `y ≤ 0` when
/// `log_y` is set.
pub fn line_plot(title: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let keep = |x: f64, y: f64| x > 0.0 && y.is_finite() && (!log_y || y > 0.0);
    let mut bounds = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (&x, &y) in s.x.iter().zip(s.y) {
            if keep(x, y) {
                bounds.0 = bounds.0.min(x.log10());
                bounds.1 = bounds.1.max(x.log10());
                bounds.2 = bounds.2.min(ty(y));
                bounds.3 = bounds.3.max(ty(y));
            }
        }
    }
    let (x0, mut x1, mut y0, mut y1) = bounds;
    if !x0.is_finite() {
        return empty(title);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        let pad = 0.5 * y0.abs().max(1e-3);
        y0 -= pad;
        y1 += pad;
    }
    let px = |lx: f64| MARGIN + (lx - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = header(title);
    let _ = write!(
        svg,
        r##"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##,
        m = MARGIN,
        w = WIDTH - 2.0 * MARGIN,
        h = HEIGHT - 2.0 * MARGIN
    );
    for d in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let lx = d as f64;
        if lx < x0 - 1e-9 || lx > x1 + 1e-9 {
            continue;
        }
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">1e{d}</text>"##,
            px(lx),
            HEIGHT - MARGIN + 16.0
        );
    }
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let label = if log_y { format!("1e{v:.1}") } else { format!("{v:.3}") };
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{label}</text>"##,
            MARGIN - 4.0,
            py(v) + 4.0
        );
    }
    let _ = write!(
        svg,
        r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">r (log scale)</text>"##,
        WIDTH / 2.0,
        HEIGHT - 18.0
    );
    let _ = write!(
        svg,
        r##"<text x="14" y="{:.1}" font-size="12" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"##,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = s
            .x
            .iter()
            .zip(s.y)
            .filter(|(&x, &y)| keep(x, y))
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x.log10()), py(ty(y))))
            .collect();
        let _ = write!(
            svg,
            r##"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"##,
            points.join(" ")
        );
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"##,
            WIDTH - MARGIN - 150.0,
            MARGIN + 16.0 * (k as f64 + 1.0),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn header(title: &str) -> String {
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif"><text x="{:.1}" y="24" font-size="14" text-anchor="middle">{}</text>"##,
        WIDTH / 2.0,
        escape(title)
    )
}

fn empty(title: &str) -> String {
    let mut svg = header(title);
    svg.push_str(r##"<text x="360" y="220" text-anchor="middle">no positive data</text></svg>"##);
    svg.push('\n');
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_the_origin_and_nonpositive_values() {
        let x = [0.0, 1.0, 10.0, 100.0];
        let y = [1.0, 0.5, 0.0, 0.01];
        let svg = line_plot("t", "w", &[Series { label: "w".into(), x: &x, y: &y }], true);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        let poly = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(poly.split(' ').count(), 2);
        let none = line_plot("t", "w", &[Series { label: "w".into(), x: &x, y: &[0.0; 4] }], true);
        assert!(none.contains("no positive data"));
    }
}
