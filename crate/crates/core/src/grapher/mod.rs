//! Graph scripts (DEF/CDEF/LINE/AREA/COMMENT), their evaluation against a
//! host database, and rendering to SVG or PNG.

mod attime;
mod raster;
mod rpn;
mod scene;
mod script;
mod svg;

pub use attime::{parse_at_time, AtTime};
pub use rpn::{eval_cdef, Op, Rpn, Token};
pub use scene::{build_scene, Item, Scene};
pub use script::{parse_graph_script, Element, GraphProgram, VarDef, VarSource};

use crate::rrd::{Cf, Rrd, RrdError};

pub const MIN_DIMENSION: u32 = 50;
pub const MAX_DIMENSION: u32 = 4096;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("bad time specification `{0}`")]
    BadTimeSpec(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undefined name `{name}`")]
    UndefinedVname { line: usize, name: String },
    #[error("line {line}: `{name}` defined twice")]
    DuplicateVname { line: usize, name: String },
    #[error("line {line}: unbalanced RPN expression `{expr}`")]
    UnbalancedRpn { line: usize, expr: String },
    #[error("line {line}: no variable `{id}` on this host")]
    UnknownMib { line: usize, id: String },
    #[error("no graph `{0}`")]
    NoSuchGraph(String),
    #[error("no archive with consolidation function {0}")]
    NoSuchCf(Cf),
    #[error("graph window is empty")]
    WindowEmpty,
    #[error("image size {width}x{height} outside {MIN_DIMENSION}..={MAX_DIMENSION}")]
    BadSize { width: u32, height: u32 },
    #[error("unsupported image format for `{0}` (use .png or .svg)")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Archive(RrdError),
    #[error("PNG encoding failed: {0}")]
    Encode(String),
}

impl From<RrdError> for GraphError {
    fn from(e: RrdError) -> Self {
        match e {
            RrdError::NoSuchCf(cf) => GraphError::NoSuchCf(cf),
            RrdError::EmptyWindow => GraphError::WindowEmpty,
            other => GraphError::Archive(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Svg,
}

impl ImageFormat {
    /// Picks the format from a graph id such as `cpu.png`.
    pub fn from_graph_id(id: &str) -> Option<ImageFormat> {
        let ext = id.rsplit_once('.')?.1;
        if ext.eq_ignore_ascii_case("png") {
            Some(ImageFormat::Png)
        } else if ext.eq_ignore_ascii_case("svg") {
            Some(ImageFormat::Svg)
        } else {
            None
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            ImageFormat::Png => "image/png",
            ImageFormat::Svg => "image/svg+xml",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderRequest {
    pub width: u32,
    pub height: u32,
    pub start: i64,
    pub end: i64,
    pub title: String,
    pub format: ImageFormat,
}

/// Every program variable evaluated on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    /// Row end times of the first DEF's series.
    pub times: Vec<i64>,
    /// One series per program variable, aligned with `times`.
    pub series: Vec<Vec<Option<f64>>>,
}

/// Value of `rows` at `t`: the row whose window `(time - g, time]`
/// contains `t`.
fn sample_at(series: &crate::rrd::Series, var: usize, t: i64) -> Option<f64> {
    let g = series.granularity as i64;
    let first = series.rows.first()?.time;
    let k = (t - first + g - 1).div_euclid(g);
    if k < 0 {
        return None;
    }
    series.rows.get(k as usize).and_then(|r| r.values[var])
}

/// Fetches every DEF over `[start, end]` and evaluates the CDEFs. DEF
/// series are resampled onto the first DEF's grid.
pub fn evaluate(
    program: &GraphProgram,
    rrd: &Rrd,
    start: i64,
    end: i64,
) -> Result<Evaluated, GraphError> {
    if start >= end {
        return Err(GraphError::WindowEmpty);
    }
    let mut times: Option<Vec<i64>> = None;
    let mut series: Vec<Vec<Option<f64>>> = Vec::with_capacity(program.vars.len());
    for def in &program.vars {
        let column = match &def.source {
            VarSource::Def { mib, cf } => {
                let var = rrd.var_index(mib).ok_or_else(|| GraphError::UnknownMib {
                    line: def.line,
                    id: mib.clone(),
                })?;
                let fetched = rrd.fetch(*cf, start as f64, end as f64)?;
                let grid =
                    times.get_or_insert_with(|| fetched.rows.iter().map(|r| r.time).collect());
                grid.iter().map(|t| sample_at(&fetched, var, *t)).collect()
            }
            VarSource::Cdef(expr) => {
                let inputs: Vec<&[Option<f64>]> = series.iter().map(|s| s.as_slice()).collect();
                let mut out = eval_cdef(expr, &inputs);
                // a CDEF over literals alone still spans the grid
                out.resize(times.as_ref().map_or(0, |t| t.len()), None);
                out
            }
        };
        series.push(column);
    }
    Ok(Evaluated {
        times: times.unwrap_or_default(),
        series,
    })
}

/// Renders `program` against `rrd`. Returns the content type and image
/// bytes. Never modifies the database.
pub fn render(
    program: &GraphProgram,
    rrd: &Rrd,
    request: &RenderRequest,
) -> Result<(&'static str, Vec<u8>), GraphError> {
    let (w, h) = (request.width, request.height);
    if !(MIN_DIMENSION..=MAX_DIMENSION).contains(&w)
        || !(MIN_DIMENSION..=MAX_DIMENSION).contains(&h)
    {
        return Err(GraphError::BadSize {
            width: w,
            height: h,
        });
    }
    let data = evaluate(program, rrd, request.start, request.end)?;
    let scene = build_scene(program, &data, request);
    let bytes = match request.format {
        ImageFormat::Svg => svg::to_svg(&scene).into_bytes(),
        ImageFormat::Png => raster::to_png(&scene)?,
    };
    Ok((request.format.content_type(), bytes))
}
