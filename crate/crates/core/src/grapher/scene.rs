//! Layout: turns evaluated series into a display list in pixel space.

use chrono::DateTime;

use super::script::{Element, GraphProgram};
use super::{Evaluated, RenderRequest};

pub const CHAR_W: f64 = 8.0;
pub const CHAR_H: f64 = 8.0;

const BACKGROUND: [u8; 3] = [0xF5, 0xF5, 0xF5];
const CANVAS: [u8; 3] = [0xFF, 0xFF, 0xFF];
const GRID: [u8; 3] = [0xDD, 0xDD, 0xDD];
const AXIS: [u8; 3] = [0x40, 0x40, 0x40];
const TEXT: [u8; 3] = [0x00, 0x00, 0x00];

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Rect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        fill: [u8; 3],
    },
    Line {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        width: f64,
        color: [u8; 3],
    },
    Polyline {
        points: Vec<(f64, f64)>,
        width: f64,
        color: [u8; 3],
    },
    Polygon {
        points: Vec<(f64, f64)>,
        fill: [u8; 3],
    },
    /// `x`, `y` is the top-left corner of the first glyph.
    Text {
        x: f64,
        y: f64,
        text: String,
        color: [u8; 3],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: u32,
    pub height: u32,
    /// Plot area: left, top, width, height.
    pub plot: (f64, f64, f64, f64),
    pub y_min: f64,
    pub y_max: f64,
    pub items: Vec<Item>,
}

fn nice_step(raw: f64) -> f64 {
    let base = 10f64.powf(raw.log10().floor());
    let f = raw / base;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * base
}

/// Value range `[lo, hi]` rounded outward to a tick step.
pub fn value_axis(min: f64, max: f64) -> (f64, f64, f64) {
    let (mut min, mut max) = (min, max);
    if min == max {
        let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.1 };
        min -= pad;
        max += pad;
    }
    let step = nice_step((max - min) / 5.0);
    let lo = (min / step).floor() * step;
    let hi = (max / step).ceil() * step;
    // guard against rounding pulling a bound inside the data
    let lo = if lo > min { lo - step } else { lo };
    let hi = if hi < max { hi + step } else { hi };
    (lo, hi, step)
}

fn value_label(v: f64, step: f64, scale_of: f64) -> String {
    const SUFFIX: [(f64, &str); 5] = [(1e12, "T"), (1e9, "G"), (1e6, "M"), (1e3, "k"), (1.0, "")];
    let (div, suffix) = SUFFIX
        .iter()
        .copied()
        .find(|(d, _)| scale_of >= *d)
        .unwrap_or((1.0, ""));
    let rel = step / div;
    let decimals = if rel >= 1.0 {
        0
    } else {
        ((-rel.log10()).ceil() as usize).min(6)
    };
    let text = format!("{:.*}{}", decimals, v / div, suffix);
    if text.starts_with("-0")
        && text
            .trim_start_matches(['-', '0', '.'])
            .chars()
            .all(|c| !c.is_ascii_digit())
    {
        text[1..].to_string()
    } else {
        text
    }
}

const TIME_STEPS: [i64; 14] = [
    60,
    300,
    600,
    1800,
    3600,
    3 * 3600,
    6 * 3600,
    12 * 3600,
    86_400,
    2 * 86_400,
    7 * 86_400,
    14 * 86_400,
    30 * 86_400,
    365 * 86_400,
];

fn time_label(t: i64, span: i64) -> String {
    let Some(dt) = DateTime::from_timestamp(t, 0) else {
        return String::new();
    };
    if span <= 2 * 86_400 {
        dt.format("%H:%M").to_string()
    } else if span <= 400 * 86_400 {
        dt.format("%m-%d").to_string()
    } else {
        dt.format("%Y-%m").to_string()
    }
}

fn legend_of(e: &Element) -> Option<(Option<[u8; 3]>, &str)> {
    match e {
        Element::Line { color, legend, .. } | Element::Area { color, legend, .. } => {
            legend.as_deref().map(|l| (Some(*color), l))
        }
        Element::Comment(t) => Some((None, t.as_str())),
    }
}

/// Lays out axes, grid, data, title and legend for one image.
pub fn build_scene(program: &GraphProgram, data: &Evaluated, req: &RenderRequest) -> Scene {
    let (w, h) = (req.width as f64, req.height as f64);
    let mut known = data
        .series
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            program.elements.iter().any(|e| match e {
                Element::Line { var, .. } | Element::Area { var, .. } => var == i,
                Element::Comment(_) => false,
            })
        })
        .flat_map(|(_, s)| s.iter().flatten().copied());
    let first = known.next();
    let (mut dmin, mut dmax) = first.map_or((0.0, 1.0), |v| (v, v));
    for v in known {
        dmin = dmin.min(v);
        dmax = dmax.max(v);
    }
    if first.is_some()
        && program
            .elements
            .iter()
            .any(|e| matches!(e, Element::Area { .. }))
    {
        dmin = dmin.min(0.0);
        dmax = dmax.max(0.0);
    }
    let (y_min, y_max, y_step) = value_axis(dmin, dmax);
    let scale_of = y_min.abs().max(y_max.abs());
    let mut ticks = Vec::new();
    let mut k = 0;
    loop {
        let v = y_min + k as f64 * y_step;
        if v > y_max + y_step * 1e-9 || k > 50 {
            break;
        }
        ticks.push((v, value_label(v, y_step, scale_of)));
        k += 1;
    }
    let label_chars = ticks
        .iter()
        .map(|(_, l)| l.chars().count())
        .max()
        .unwrap_or(1);

    let legends: Vec<(Option<[u8; 3]>, &str)> =
        program.elements.iter().filter_map(legend_of).collect();
    let title_h = if req.title.is_empty() {
        4.0
    } else {
        CHAR_H + 8.0
    };
    let mut legend_rows = legends.len();
    let bottom = |rows: usize| CHAR_H + 8.0 + rows as f64 * (CHAR_H + 4.0);
    while legend_rows > 0 && h - title_h - bottom(legend_rows) < 20.0 {
        legend_rows -= 1;
    }
    let left = (label_chars as f64 * CHAR_W + 6.0).min(w / 3.0);
    let right = 8.0;
    let plot = (
        left,
        title_h,
        (w - left - right).max(1.0),
        (h - title_h - bottom(legend_rows)).max(1.0),
    );
    let (px, py, pw, ph) = plot;
    let y_of = |v: f64| py + ph - (v - y_min) / (y_max - y_min) * ph;
    let span = (req.end - req.start).max(1);
    let x_of = |t: i64| px + (t - req.start) as f64 / span as f64 * pw;

    let mut items = vec![
        Item::Rect {
            x: 0.0,
            y: 0.0,
            w,
            h,
            fill: BACKGROUND,
        },
        Item::Rect {
            x: px,
            y: py,
            w: pw,
            h: ph,
            fill: CANVAS,
        },
    ];

    for (v, label) in &ticks {
        let y = y_of(*v);
        items.push(Item::Line {
            x1: px,
            y1: y,
            x2: px + pw,
            y2: y,
            width: 1.0,
            color: GRID,
        });
        items.push(Item::Text {
            x: (px - 3.0 - label.chars().count() as f64 * CHAR_W).max(0.0),
            y: y - CHAR_H / 2.0,
            text: label.clone(),
            color: TEXT,
        });
    }

    let max_ticks = ((pw / (6.0 * CHAR_W)).floor() as i64).max(1);
    let tstep = TIME_STEPS
        .iter()
        .copied()
        .find(|s| span / s <= max_ticks)
        .unwrap_or(TIME_STEPS[TIME_STEPS.len() - 1]);
    let mut t = (req.start + tstep - 1).div_euclid(tstep) * tstep;
    while t <= req.end {
        let x = x_of(t);
        items.push(Item::Line {
            x1: x,
            y1: py,
            x2: x,
            y2: py + ph,
            width: 1.0,
            color: GRID,
        });
        let label = time_label(t, span);
        let lw = label.chars().count() as f64 * CHAR_W;
        items.push(Item::Text {
            x: (x - lw / 2.0).clamp(0.0, (w - lw).max(0.0)),
            y: py + ph + 4.0,
            text: label,
            color: TEXT,
        });
        t += tstep;
    }

    // runs of consecutive known points
    let runs = |var: usize| -> Vec<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        for (t, v) in data.times.iter().zip(&data.series[var]) {
            match v {
                Some(v) => cur.push((x_of(*t), y_of(*v))),
                None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
                None => {}
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    };
    let base = y_of(0.0f64.clamp(y_min, y_max));
    for e in &program.elements {
        if let Element::Area { var, color, .. } = e {
            for run in runs(*var) {
                if run.len() == 1 {
                    let (x, y) = run[0];
                    items.push(Item::Line {
                        x1: x,
                        y1: base,
                        x2: x,
                        y2: y,
                        width: 1.0,
                        color: *color,
                    });
                    continue;
                }
                let mut points = Vec::with_capacity(run.len() + 2);
                points.push((run[0].0, base));
                points.extend(run.iter().copied());
                points.push((run[run.len() - 1].0, base));
                items.push(Item::Polygon {
                    points,
                    fill: *color,
                });
            }
        }
    }
    for e in &program.elements {
        if let Element::Line {
            width, var, color, ..
        } = e
        {
            for points in runs(*var) {
                items.push(Item::Polyline {
                    points,
                    width: *width as f64,
                    color: *color,
                });
            }
        }
    }

    items.push(Item::Line {
        x1: px,
        y1: py + ph,
        x2: px + pw,
        y2: py + ph,
        width: 1.0,
        color: AXIS,
    });
    items.push(Item::Line {
        x1: px,
        y1: py,
        x2: px,
        y2: py + ph,
        width: 1.0,
        color: AXIS,
    });

    if !req.title.is_empty() {
        let tw = req.title.chars().count() as f64 * CHAR_W;
        items.push(Item::Text {
            x: ((w - tw) / 2.0).max(0.0),
            y: 4.0,
            text: req.title.clone(),
            color: TEXT,
        });
    }
    let mut y = py + ph + CHAR_H + 8.0;
    for (color, text) in legends.iter().take(legend_rows) {
        let mut x = px;
        if let Some(c) = color {
            items.push(Item::Rect {
                x,
                y,
                w: CHAR_W,
                h: CHAR_H,
                fill: *c,
            });
            x += CHAR_W + 4.0;
        }
        items.push(Item::Text {
            x,
            y,
            text: text.to_string(),
            color: TEXT,
        });
        y += CHAR_H + 4.0;
    }

    Scene {
        width: req.width,
        height: req.height,
        plot,
        y_min,
        y_max,
        items,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_covers_data() {
        for (lo, hi) in [
            (0.0, 1.0),
            (3.0, 3.0),
            (-7.5, 1234.5),
            (534717280.0, 1741169408.0),
            (0.001, 0.002),
        ] {
            let (a, b, step) = value_axis(lo, hi);
            assert!(a <= lo && b >= hi && step > 0.0, "{lo} {hi} -> {a} {b}");
        }
    }

    #[test]
    fn labels() {
        assert_eq!(value_label(500_000_000.0, 100_000_000.0, 1e9), "0.5G");
        assert_eq!(value_label(20.0, 10.0, 100.0), "20");
        assert_eq!(value_label(0.25, 0.05, 1.0), "0.25");
        assert_eq!(value_label(-0.0, 0.5, 1.0), "0.0");
    }
}
