//! Minimal SVG figures: surface heatmaps with optima markers, ICE curves and
//! modality scatters. Output is a standalone `<svg>` document string.

use std::fmt::Write;

use crate::analysis::{Category, GridOptima, IceCurveSet};
use crate::models::GridValues;

const SIZE: f64 = 360.0;
const MARGIN: f64 = 48.0;

// viridis sampled at five stops
const STOPS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let w = SIZE + 2.0 * MARGIN;
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{w}" height="{w}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, MARGIN / 2.0, escape(title));
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, w - 12.0, escape(x_label));
    let _ = write!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        w / 2.0,
        w / 2.0,
        escape(y_label)
    );
}

fn frame(out: &mut String) {
    let _ = write!(out, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
}

// unit coordinates to pixels, y pointing up
fn px(x: f64) -> f64 {
    MARGIN + x * SIZE
}

fn py(y: f64) -> f64 {
    MARGIN + (1.0 - y) * SIZE
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Heatmap of a grid slice; upward triangles mark local maxima, downward
/// triangles local minima.
pub fn heatmap_svg(grid: &GridValues, optima: &GridOptima, title: &str, x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    open(&mut out, title, x_label, y_label);
    let r = grid.resolution();
    let (lo, hi) = range(grid.values.iter().copied());
    let cell = SIZE / r as f64;
    for i in 0..r {
        for j in 0..r {
            let t = (grid.get(i, j) - lo) / (hi - lo);
            let _ = write!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                MARGIN + i as f64 * cell,
                MARGIN + (r - 1 - j) as f64 * cell,
                cell + 0.3,
                cell + 0.3,
                colour(t)
            );
        }
    }
    let h = (cell * 0.8).clamp(6.0, 14.0);
    let centre = |i: usize, j: usize| (MARGIN + (i as f64 + 0.5) * cell, MARGIN + (r - 1 - j) as f64 * cell + cell / 2.0);
    for &(i, j) in &optima.maxima {
        let (cx, cy) = centre(i, j);
        let _ = write!(
            out,
            r#"<polygon class="maximum" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="white" stroke="black"/>"#,
            cx,
            cy - h / 2.0,
            cx - h / 2.0,
            cy + h / 2.0,
            cx + h / 2.0,
            cy + h / 2.0
        );
    }
    for &(i, j) in &optima.minima {
        let (cx, cy) = centre(i, j);
        let _ = write!(
            out,
            r#"<polygon class="minimum" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="black" stroke="white"/>"#,
            cx,
            cy + h / 2.0,
            cx - h / 2.0,
            cy - h / 2.0,
            cx + h / 2.0,
            cy - h / 2.0
        );
    }
    frame(&mut out);
    let _ = write!(out, r#"<text x="{}" y="{}" font-size="10">range [{lo:.3}, {hi:.3}]</text>"#, MARGIN, MARGIN + SIZE + 14.0);
    out.push_str("</svg>");
    out
}

/// ICE curves on a shared value axis.
pub fn ice_svg(set: &IceCurveSet, title: &str, x_label: &str) -> String {
    let mut out = String::new();
    open(&mut out, title, x_label, "predicted return");
    let (lo, hi) = range(set.curves.iter().flatten().copied());
    for curve in &set.curves {
        let pts: Vec<String> = set
            .grid
            .iter()
            .zip(curve)
            .map(|(x, v)| format!("{:.2},{:.2}", px(*x), py((v - lo) / (hi - lo))))
            .collect();
        let _ = write!(
            out,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-opacity="0.5"/>"#,
            pts.join(" ")
        );
    }
    frame(&mut out);
    let _ = write!(out, r#"<text x="{}" y="{}" font-size="10">range [{lo:.3}, {hi:.3}]</text>"#, MARGIN, MARGIN + SIZE + 14.0);
    out.push_str("</svg>");
    out
}

fn category_colour(c: Category) -> &'static str {
    match c {
        Category::Unimodal => "#1f77b4",
        Category::Multimodal => "#d62728",
        Category::Uncategorized => "#999999",
    }
}

/// Configurations at unit coordinates `(x, y)` coloured by modality category.
pub fn modality_svg(points: &[(f64, f64, Category)], title: &str, x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    open(&mut out, title, x_label, y_label);
    frame(&mut out);
    for &(x, y, c) in points {
        let _ = write!(
            out,
            r#"<circle class="{}" cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
            c.name(),
            px(x),
            py(y),
            category_colour(c)
        );
    }
    for (k, c) in Category::ALL.into_iter().enumerate() {
        let x = MARGIN + 8.0 + 110.0 * k as f64;
        let y = MARGIN + SIZE + 16.0;
        let _ = write!(out, r#"<circle cx="{x}" cy="{}" r="4" fill="{}"/>"#, y - 4.0, category_colour(c));
        let _ = write!(out, r#"<text x="{}" y="{y}" font-size="10">{}</text>"#, x + 8.0, c.name());
    }
    out.push_str("</svg>");
    out
}
