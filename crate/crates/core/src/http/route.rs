use std::path::{Path, PathBuf};

use crate::config::MonitorConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Route {
    /// Path segments below html_dir.
    StaticFile(Vec<String>),
    Graph {
        host: String,
        graph: String,
        query: GraphQuery,
    },
    ClusterStatus {
        transform: Option<String>,
    },
    HostStatus {
        host: String,
        transform: Option<String>,
    },
}

/// Raw graph overrides as written in the query string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphQuery {
    pub width: Option<String>,
    pub height: Option<String>,
    pub start: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouteError {
    #[error("method {0} not allowed")]
    MethodNotAllowed(String),
    #[error("malformed request target")]
    BadTarget,
    #[error("path escapes the served directory")]
    PathTraversal,
    #[error("unknown graph `{graph}` for host `{host}`")]
    UnknownGraph { host: String, graph: String },
}

fn hex(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

/// Decodes `%XX` escapes (and `+` when `plus` is set).
pub fn percent_decode(s: &str, plus: bool) -> Option<String> {
    let b = s.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'%' => {
                let hi = hex(*b.get(i + 1)?)?;
                let lo = hex(*b.get(i + 2)?)?;
                out.push(hi << 4 | lo);
                i += 3;
            }
            b'+' if plus => {
                out.push(b' ');
                i += 1;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    String::from_utf8(out).ok()
}

/// `key=value` pairs separated by `&` or `;`. Undecodable pairs are
/// skipped.
pub fn parse_query(q: &str) -> Vec<(String, String)> {
    q.split(['&', ';'])
        .filter(|p| !p.is_empty())
        .filter_map(|p| {
            let (k, v) = p.split_once('=').unwrap_or((p, ""));
            Some((percent_decode(k, true)?, percent_decode(v, true)?))
        })
        .collect()
}

fn last<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a String> {
    pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v)
}

/// Decoded path segments, rejecting anything that could name a file
/// outside the served directory.
pub fn safe_segments(path: &str) -> Result<Vec<String>, RouteError> {
    if !path.starts_with('/') {
        return Err(RouteError::BadTarget);
    }
    let mut segs = Vec::new();
    for raw in path[1..].split('/') {
        let seg = percent_decode(raw, false).ok_or(RouteError::BadTarget)?;
        if seg == ".." || seg.contains(['/', '\\', '\0']) {
            return Err(RouteError::PathTraversal);
        }
        if seg.is_empty() || seg == "." {
            continue;
        }
        segs.push(seg);
    }
    Ok(segs)
}

/// Joins `segs` under `root` and confirms the result, after resolving
/// symlinks, still lies inside `root`. `None` if it does not exist.
pub fn resolve_under(root: &Path, segs: &[String]) -> Result<Option<PathBuf>, RouteError> {
    let mut p = root.to_path_buf();
    p.extend(segs);
    let Ok(real) = p.canonicalize() else {
        return Ok(None);
    };
    let Ok(real_root) = root.canonicalize() else {
        return Ok(None);
    };
    if !real.starts_with(&real_root) {
        return Err(RouteError::PathTraversal);
    }
    Ok(Some(real))
}

/// A stylesheet name must be a bare file name.
pub fn check_transform_name(name: &str) -> Result<(), RouteError> {
    if name.is_empty() || name == "." || name == ".." || name.contains(['/', '\\', '\0']) {
        return Err(RouteError::PathTraversal);
    }
    Ok(())
}

pub fn route(method: &str, target: &str, config: &MonitorConfig) -> Result<Route, RouteError> {
    if method != "GET" {
        return Err(RouteError::MethodNotAllowed(method.to_string()));
    }
    let (path, query) = target.split_once('?').unwrap_or((target, ""));
    let segs = safe_segments(path)?;
    let pairs = parse_query(query);
    let transform = match last(&pairs, "applyTransform") {
        Some(t) => {
            check_transform_name(t)?;
            Some(t.clone())
        }
        None => None,
    };
    match segs.as_slice() {
        [page] if page == "status.html" => Ok(Route::ClusterStatus { transform }),
        [host, page] if config.host(host).is_some() => {
            if page == "status.html" {
                return Ok(Route::HostStatus {
                    host: host.clone(),
                    transform,
                });
            }
            let h = config.host(host).expect("checked");
            if h.graph(page).is_none() {
                return Err(RouteError::UnknownGraph {
                    host: host.clone(),
                    graph: page.clone(),
                });
            }
            Ok(Route::Graph {
                host: host.clone(),
                graph: page.clone(),
                query: GraphQuery {
                    width: last(&pairs, "width").cloned(),
                    height: last(&pairs, "height").cloned(),
                    start: last(&pairs, "start").cloned(),
                },
            })
        }
        _ => Ok(Route::StaticFile(segs)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoding() {
        assert_eq!(percent_decode("a%2Fb+c", true).unwrap(), "a/b c");
        assert_eq!(percent_decode("a+b", false).unwrap(), "a+b");
        assert!(percent_decode("%zz", false).is_none());
        assert!(percent_decode("%4", false).is_none());
    }

    #[test]
    fn query_separators() {
        let q = parse_query("width=320;height=200&start=-3h&width=10");
        assert_eq!(last(&q, "width").unwrap(), "10");
        assert_eq!(last(&q, "height").unwrap(), "200");
        assert_eq!(last(&q, "Width"), None);
    }

    #[test]
    fn traversal_segments() {
        assert_eq!(
            safe_segments("/../etc/passwd"),
            Err(RouteError::PathTraversal)
        );
        assert_eq!(safe_segments("/a/%2e%2e/b"), Err(RouteError::PathTraversal));
        assert_eq!(safe_segments("/a/..%2Fb"), Err(RouteError::PathTraversal));
        assert_eq!(safe_segments("/a//./b/").unwrap(), vec!["a", "b"]);
        assert_eq!(safe_segments("relative"), Err(RouteError::BadTarget));
    }
}
