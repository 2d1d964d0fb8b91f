use std::fmt::Write;

use super::scene::{Item, Scene, CHAR_H};
use crate::xml::escape;

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn points(pts: &[(f64, f64)]) -> String {
    let mut s = String::with_capacity(pts.len() * 16);
    for (i, (x, y)) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s
}

/// Serializes a scene. Output depends only on the scene.
pub fn to_svg(scene: &Scene) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = scene.width,
        h = scene.height
    );
    for item in &scene.items {
        let _ = match item {
            Item::Rect { x, y, w, h, fill } => writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{}\"/>",
                hex(*fill)
            ),
            Item::Line {
                x1,
                y1,
                x2,
                y2,
                width,
                color,
            } => writeln!(
                out,
                "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{}\" stroke-width=\"{width}\"/>",
                hex(*color)
            ),
            Item::Polyline { points: p, width, color } => writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{width}\" stroke-linejoin=\"round\"/>",
                points(p),
                hex(*color)
            ),
            Item::Polygon { points: p, fill } => {
                writeln!(out, "<polygon points=\"{}\" fill=\"{}\"/>", points(p), hex(*fill))
            }
            Item::Text { x, y, text, color } => writeln!(
                out,
                "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"{}\" fill=\"{}\">{}</text>",
                y + CHAR_H,
                CHAR_H * 1.5,
                hex(*color),
                escape(text)
            ),
        };
    }
    out.push_str("</svg>\n");
    out
}
