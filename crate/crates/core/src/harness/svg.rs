//! Minimal static SVG 1.1 bar and line charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str, y_label: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>
<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title),
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    )
    .unwrap();
    s
}

fn axes(s: &mut String, max: f64) {
    let (x0, y0, y1) = (LEFT, HEIGHT - BOTTOM, TOP);
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, WIDTH - RIGHT).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).unwrap();
    for k in 0..=4 {
        let v = max * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.3e}</text>"#,
            x0 - 4.0,
            y + 3.0
        )
        .unwrap();
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 16.0;
        writeln!(s, r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{}"/>"#, PALETTE[i % PALETTE.len()]).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            x + 18.0,
            y + 10.0,
            escape(name)
        )
        .unwrap();
    }
}

/// Stacked bars, one per category, one segment per series.
pub fn stacked_bars(title: &str, y_label: &str, categories: &[String], series: &[Series]) -> String {
    let totals: Vec<f64> =
        (0..categories.len()).map(|c| series.iter().map(|s| s.values[c].max(0.0)).sum()).collect();
    let max = totals.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut s = header(title, y_label);
    axes(&mut s, max);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let slot = plot_w / categories.len().max(1) as f64;
    for (c, cat) in categories.iter().enumerate() {
        let x = LEFT + slot * c as f64 + slot * 0.2;
        let mut y = HEIGHT - BOTTOM;
        for (i, ser) in series.iter().enumerate() {
            let h = ser.values[c].max(0.0) / max * plot_h;
            y -= h;
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#,
                slot * 0.6,
                PALETTE[i % PALETTE.len()]
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            x + slot * 0.3,
            HEIGHT - BOTTOM + 16.0,
            escape(cat)
        )
        .unwrap();
    }
    legend(&mut s, &series.iter().map(|x| x.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Line chart with markers; series share the category axis.
pub fn lines(title: &str, y_label: &str, categories: &[String], series: &[Series]) -> String {
    let max = series.iter().flat_map(|s| s.values.iter().copied()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut s = header(title, y_label);
    axes(&mut s, max);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let slot = plot_w / categories.len().max(1) as f64;
    let px = |c: usize| LEFT + slot * (c as f64 + 0.5);
    let py = |v: f64| HEIGHT - BOTTOM - v.max(0.0) / max * plot_h;
    for (c, cat) in categories.iter().enumerate() {
        writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            px(c),
            HEIGHT - BOTTOM + 16.0,
            escape(cat)
        )
        .unwrap();
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.values.iter().enumerate().map(|(c, &v)| format!("{:.2},{:.2}", px(c), py(v))).collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" ")).unwrap();
        for (c, &v) in ser.values.iter().enumerate() {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(c), py(v)).unwrap();
        }
    }
    legend(&mut s, &series.iter().map(|x| x.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}
