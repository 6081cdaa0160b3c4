//! Minimal SVG rendering of bar and line data. Cosmetic only.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn frame(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x}" y2="{y}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{y}" stroke="black"/>"#,
        x = WIDTH - MARGIN,
        y = HEIGHT - MARGIN
    );
    s
}

fn bounds(series: &[Series]) -> (f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    (x0, x1, if y1 > 0.0 { y1 } else { 1.0 })
}

fn legend(s: &mut String, series: &[Series]) {
    for (i, ser) in series.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            y - 9.0,
            ser.color,
            WIDTH - MARGIN - 105.0,
            y,
            ser.label
        );
    }
}

/// Grouped bars at integer-like x positions.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut s = frame(title, x_label, y_label);
    let (x0, x1, y1) = bounds(series);
    let slots = (x1 - x0 + 1.0).max(1.0);
    let slot_w = (WIDTH - 2.0 * MARGIN) / slots;
    let bar_w = slot_w / (series.len().max(1) as f64 + 0.5);
    let plot_h = HEIGHT - 2.0 * MARGIN;
    for (k, ser) in series.iter().enumerate() {
        for &(x, y) in &ser.points {
            let h = (y.max(0.0) / y1) * plot_h;
            let left = MARGIN + (x - x0) * slot_w + k as f64 * bar_w + 0.25 * bar_w;
            let _ = writeln!(
                s,
                r#"<rect x="{left:.2}" y="{:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{}"/>"#,
                HEIGHT - MARGIN - h,
                ser.color
            );
        }
    }
    legend(&mut s, series);
    s.push_str("</svg>\n");
    s
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut s = frame(title, x_label, y_label);
    let (x0, x1, y1) = bounds(series);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y / y1 * (HEIGHT - 2.0 * MARGIN);
    for ser in series {
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            ser.color,
            path.join(" ")
        );
    }
    legend(&mut s, series);
    s.push_str("</svg>\n");
    s
}
