//! Embedded HTTP server: status documents, XSLT-transformed pages,
//! graphs and static files.

mod pipe;
mod route;
mod server;

use std::path::Path;
use std::sync::Arc;

use log::warn;

pub use pipe::{processor_argv, run_pipe, shell_argv, PipeError};
pub use route::{
    check_transform_name, parse_query, percent_decode, resolve_under, route, safe_segments,
    GraphQuery, Route, RouteError,
};
pub use server::{access_log_line, parse_request_line, serve, ServerError, ServerHandle};

use crate::collector::Clock;
use crate::config::MonitorConfig;
use crate::grapher::{render, AtTime, GraphError, RenderRequest};
use crate::rrd::ArchiveReader;
use crate::status::{host_xml, StatusReader};

pub const DEFAULT_XSLT_PROCESSOR: &str = "xsltproc --nonet {xsl} -";

/// Everything a request handler may read.
pub struct HttpContext {
    pub config: Arc<MonitorConfig>,
    pub status: StatusReader,
    pub archives: ArchiveReader,
    pub clock: Arc<dyn Clock>,
    /// Command line with an optional `{xsl}` placeholder.
    pub xslt_processor: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Response {
    pub fn ok(content_type: &'static str, body: Vec<u8>) -> Response {
        Response {
            status: 200,
            content_type,
            body,
        }
    }

    pub fn error(status: u16, message: impl std::fmt::Display) -> Response {
        Response {
            status,
            content_type: "text/plain; charset=utf-8",
            body: format!("{status} {}: {message}\n", reason(status)).into_bytes(),
        }
    }
}

pub fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        403 => "Forbidden",
        404 => "Not Found",
        405 => "Method Not Allowed",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Unknown",
    }
}

pub fn content_type_for(path: &str) -> &'static str {
    match extension(path).map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("html" | "htm") => "text/html; charset=utf-8",
        Some("xml" | "xsl") => "text/xml; charset=utf-8",
        Some("css") => "text/css",
        Some("js") => "text/javascript",
        Some("txt") => "text/plain; charset=utf-8",
        Some("json") => "application/json",
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        Some("gif") => "image/gif",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

/// Extension of the last path segment, without the dot.
pub fn extension(path: &str) -> Option<&str> {
    let path = path.split('?').next().unwrap_or(path);
    let name = path.rsplit('/').next()?;
    let (stem, ext) = name.rsplit_once('.')?;
    (!stem.is_empty()).then_some(ext)
}

/// Whether the configured filter applies to `path`. An empty extension
/// list matches nothing.
pub fn filter_applies(config: &MonitorConfig, path: &str) -> bool {
    config.http_filter.is_some()
        && extension(path).is_some_and(|e| config.http_filter_extensions.iter().any(|x| x == e))
}

const STATUS_XML: &str = "text/xml; charset=utf-8";
const HTML: &str = "text/html; charset=utf-8";

impl HttpContext {
    /// Serves one request. `target` is the raw request-target.
    pub fn handle(&self, method: &str, target: &str) -> Response {
        let r = match route(method, target, &self.config) {
            Ok(r) => r,
            Err(e) => return Response::error(route_status(&e), e),
        };
        let resp = match r {
            Route::ClusterStatus { transform } => {
                self.status_page(self.status.snapshot().to_xml(), transform)
            }
            Route::HostStatus { host, transform } => match self.status.snapshot().host(&host) {
                Some(h) => self.status_page(host_xml(h), transform),
                None => Response::error(404, format!("unknown host `{host}`")),
            },
            Route::Graph { host, graph, query } => self.graph(&host, &graph, &query),
            Route::StaticFile(segs) => self.static_file(&segs),
        };
        if resp.status != 200 {
            return resp;
        }
        let path = target.split('?').next().unwrap_or(target);
        match (&self.config.http_filter, filter_applies(&self.config, path)) {
            (Some(cmd), true) => match run_pipe(&shell_argv(cmd), &resp.body) {
                Ok(body) => Response { body, ..resp },
                Err(e) => {
                    warn!("filter failed on {path}: {e}");
                    Response::error(500, "filter failed")
                }
            },
            _ => resp,
        }
    }

    fn status_page(&self, xml: String, transform: Option<String>) -> Response {
        let Some(name) = transform else {
            return Response::ok(STATUS_XML, xml.into_bytes());
        };
        let sheet = match resolve_under(&self.config.xslt_dir, std::slice::from_ref(&name)) {
            Ok(Some(p)) if p.is_file() => p,
            Ok(_) => return Response::error(404, format!("no such transformation `{name}`")),
            Err(e) => return Response::error(403, e),
        };
        let Some(argv) = processor_argv(&self.xslt_processor, &sheet.to_string_lossy()) else {
            warn!("unusable XSLT processor command `{}`", self.xslt_processor);
            return Response::error(500, "transformation failed");
        };
        match run_pipe(&argv, xml.as_bytes()) {
            Ok(out) => Response::ok(HTML, out),
            Err(e) => {
                warn!("transformation {name} failed: {e}");
                Response::error(500, "transformation failed")
            }
        }
    }

    fn graph(&self, host: &str, id: &str, q: &GraphQuery) -> Response {
        let Some(spec) = self.config.host(host).and_then(|h| h.graph(id)) else {
            return Response::error(404, format!("unknown graph `{id}`"));
        };
        let Some(rrd) = self.archives.get_by_name(host) else {
            return Response::error(404, format!("no archive for host `{host}`"));
        };
        // unparseable sizes fall back to the configured ones
        let width = q
            .width
            .as_deref()
            .and_then(|w| w.parse().ok())
            .unwrap_or(spec.width);
        let height = q
            .height
            .as_deref()
            .and_then(|h| h.parse().ok())
            .unwrap_or(spec.height);
        let start = match q.start.as_deref().map(str::parse::<AtTime>).transpose() {
            Ok(s) => s.unwrap_or(spec.seconds),
            Err(e) => return Response::error(400, e),
        };
        let now = self.clock.now().floor() as i64;
        let request = RenderRequest {
            width,
            height,
            start: start.resolve(now),
            end: now,
            title: spec.title.clone(),
            format: spec.format(),
        };
        match render(&spec.program, &rrd, &request) {
            Ok((ctype, body)) => Response::ok(ctype, body),
            Err(
                e @ (GraphError::BadSize { .. }
                | GraphError::WindowEmpty
                | GraphError::BadTimeSpec(_)),
            ) => Response::error(400, e),
            Err(e) => {
                warn!("rendering {host}/{id}: {e}");
                Response::error(500, "rendering failed")
            }
        }
    }

    fn static_file(&self, segs: &[String]) -> Response {
        let root: &Path = &self.config.html_dir;
        let mut path = match resolve_under(root, segs) {
            Ok(Some(p)) => p,
            Ok(None) => return Response::error(404, "no such file"),
            Err(e) => return Response::error(403, e),
        };
        if path.is_dir() {
            let mut segs = segs.to_vec();
            segs.push("index.html".into());
            path = match resolve_under(root, &segs) {
                Ok(Some(p)) => p,
                Ok(None) => return Response::error(404, "no such file"),
                Err(e) => return Response::error(403, e),
            };
        }
        match std::fs::read(&path) {
            Ok(body) => Response::ok(content_type_for(&path.to_string_lossy()), body),
            Err(_) => Response::error(404, "no such file"),
        }
    }
}

fn route_status(e: &RouteError) -> u16 {
    match e {
        RouteError::MethodNotAllowed(_) => 405,
        RouteError::BadTarget => 400,
        RouteError::PathTraversal => 403,
        RouteError::UnknownGraph { .. } => 404,
    }
}
