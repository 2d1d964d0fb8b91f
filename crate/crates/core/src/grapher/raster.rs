//! Minimal software rasterizer for scenes: rectangles, thick lines,
//! even-odd polygons and 8x8 bitmap text.

use font8x8::{UnicodeFonts, BASIC_FONTS};

use super::scene::{Item, Scene};
use super::GraphError;

struct Canvas {
    w: usize,
    h: usize,
    px: Vec<u8>,
}

impl Canvas {
    fn new(w: u32, h: u32) -> Canvas {
        let (w, h) = (w as usize, h as usize);
        Canvas {
            w,
            h,
            px: vec![0xFF; w * h * 3],
        }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x as usize >= self.w || y as usize >= self.h {
            return;
        }
        let i = (y as usize * self.w + x as usize) * 3;
        self.px[i..i + 3].copy_from_slice(&c);
    }

    fn fill_rect(&mut self, x: f64, y: f64, w: f64, h: f64, c: [u8; 3]) {
        let x0 = x.round().max(0.0) as i64;
        let y0 = y.round().max(0.0) as i64;
        let x1 = ((x + w).round() as i64).min(self.w as i64);
        let y1 = ((y + h).round() as i64).min(self.h as i64);
        for yy in y0..y1 {
            for xx in x0..x1 {
                self.put(xx, yy, c);
            }
        }
    }

    fn stamp(&mut self, x: f64, y: f64, width: f64, c: [u8; 3]) {
        let half = (width - 1.0) / 2.0;
        let x0 = (x - half).floor() as i64;
        let y0 = (y - half).floor() as i64;
        let n = width.max(1.0).round() as i64;
        for dy in 0..n {
            for dx in 0..n {
                self.put(x0 + dx, y0 + dy, c);
            }
        }
    }

    fn line(&mut self, (x1, y1): (f64, f64), (x2, y2): (f64, f64), width: f64, c: [u8; 3]) {
        let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
        let steps = (len * 2.0).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            self.stamp(x1 + (x2 - x1) * t, y1 + (y2 - y1) * t, width, c);
        }
    }

    fn polygon(&mut self, pts: &[(f64, f64)], c: [u8; 3]) {
        if pts.len() < 3 {
            return;
        }
        let ymin = pts
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let ymax = pts
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
            .min(self.h as f64);
        let mut xs = Vec::new();
        let mut row = ymin.floor() as i64;
        while (row as f64) < ymax {
            let sy = row as f64 + 0.5;
            xs.clear();
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                if (a.1 <= sy) != (b.1 <= sy) {
                    xs.push(a.0 + (sy - a.1) / (b.1 - a.1) * (b.0 - a.0));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let (x0, x1) = (pair[0].round() as i64, pair[1].round() as i64);
                for x in x0..x1.max(x0 + 1) {
                    self.put(x, row, c);
                }
            }
            row += 1;
        }
    }

    fn text(&mut self, x: f64, y: f64, text: &str, c: [u8; 3]) {
        let (x0, y0) = (x.round() as i64, y.round() as i64);
        for (i, ch) in text.chars().enumerate() {
            let glyph = BASIC_FONTS
                .get(ch)
                .or_else(|| BASIC_FONTS.get('?'))
                .unwrap_or([0; 8]);
            for (gy, bits) in glyph.iter().enumerate() {
                for gx in 0..8 {
                    if bits & (1 << gx) != 0 {
                        self.put(x0 + i as i64 * 8 + gx, y0 + gy as i64, c);
                    }
                }
            }
        }
    }
}

pub fn rasterize(scene: &Scene) -> Vec<u8> {
    let mut cv = Canvas::new(scene.width, scene.height);
    for item in &scene.items {
        match item {
            Item::Rect { x, y, w, h, fill } => cv.fill_rect(*x, *y, *w, *h, *fill),
            Item::Line {
                x1,
                y1,
                x2,
                y2,
                width,
                color,
            } => cv.line((*x1, *y1), (*x2, *y2), *width, *color),
            Item::Polyline {
                points,
                width,
                color,
            } => {
                if points.len() == 1 {
                    cv.stamp(points[0].0, points[0].1, *width, *color);
                }
                for pair in points.windows(2) {
                    cv.line(pair[0], pair[1], *width, *color);
                }
            }
            Item::Polygon { points, fill } => cv.polygon(points, *fill),
            Item::Text { x, y, text, color } => cv.text(*x, *y, text, *color),
        }
    }
    cv.px
}

pub fn to_png(scene: &Scene) -> Result<Vec<u8>, GraphError> {
    let pixels = rasterize(scene);
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, scene.width, scene.height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| GraphError::Encode(e.to_string()))?;
    writer
        .write_image_data(&pixels)
        .map_err(|e| GraphError::Encode(e.to_string()))?;
    writer
        .finish()
        .map_err(|e| GraphError::Encode(e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_fills_interior() {
        let mut cv = Canvas::new(10, 10);
        cv.polygon(&[(2.0, 2.0), (8.0, 2.0), (8.0, 8.0), (2.0, 8.0)], [0, 0, 0]);
        let at = |x: usize, y: usize| cv.px[(y * 10 + x) * 3];
        assert_eq!(at(5, 5), 0);
        assert_eq!(at(1, 5), 0xFF);
        assert_eq!(at(5, 9), 0xFF);
    }
}
