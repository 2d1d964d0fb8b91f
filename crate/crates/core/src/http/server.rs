use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use log::{debug, info, warn};

use super::{reason, HttpContext, Response};

const MAX_HEADER: usize = 16 * 1024;
const MAX_CONNECTIONS: usize = 256;
const IO_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
    #[error("cannot open access log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// `(method, target)` from `METHOD SP target SP HTTP/x.y`.
pub fn parse_request_line(line: &str) -> Option<(&str, &str)> {
    let mut parts = line.split(' ');
    let method = parts.next().filter(|m| !m.is_empty())?;
    let target = parts.next().filter(|t| !t.is_empty())?;
    let version = parts.next()?;
    if parts.next().is_some() || !version.starts_with("HTTP/") {
        return None;
    }
    Some((method, target))
}

/// `<epoch> <client-ip> "<request-line>" <status> <bytes>`
pub fn access_log_line(
    epoch: u64,
    client: &str,
    request_line: &str,
    status: u16,
    bytes: usize,
) -> String {
    let req: String = request_line
        .chars()
        .flat_map(|c| match c {
            '"' | '\\' => vec!['\\', c],
            c if c.is_control() => vec!['?'],
            c => vec![c],
        })
        .collect();
    format!("{epoch} {client} \"{req}\" {status} {bytes}")
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections. Requests already being served finish
    /// on their own threads.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let mut wake = self.addr;
        if wake.ip().is_unspecified() {
            wake.set_ip(if wake.is_ipv4() {
                [127, 0, 0, 1].into()
            } else {
                std::net::Ipv6Addr::LOCALHOST.into()
            });
        }
        let _ = TcpStream::connect_timeout(&wake, Duration::from_secs(1));
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_and_join();
        }
    }
}

type AccessLog = Option<Arc<Mutex<File>>>;

/// Binds `addr` and serves requests on a background thread, one thread
/// per connection.
pub fn serve(ctx: Arc<HttpContext>, addr: SocketAddr) -> Result<ServerHandle, ServerError> {
    let log: AccessLog = match &ctx.config.http_logfile {
        Some(path) => Some(Arc::new(Mutex::new(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|source| ServerError::Log {
                    path: path.clone(),
                    source,
                })?,
        ))),
        None => None,
    };
    let listener = TcpListener::bind(addr).map_err(|source| ServerError::Bind { addr, source })?;
    let local = listener
        .local_addr()
        .map_err(|source| ServerError::Bind { addr, source })?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let thread = thread::Builder::new()
        .name("http-accept".into())
        .spawn(move || accept_loop(listener, ctx, log, flag))
        .expect("spawn accept thread");
    info!("http server listening on {local}");
    Ok(ServerHandle {
        addr: local,
        stop,
        thread: Some(thread),
    })
}

fn accept_loop(
    listener: TcpListener,
    ctx: Arc<HttpContext>,
    log: AccessLog,
    stop: Arc<AtomicBool>,
) {
    let active = Arc::new(AtomicUsize::new(0));
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let mut stream = match conn {
            Ok(s) => s,
            Err(e) => {
                debug!("accept: {e}");
                continue;
            }
        };
        if active.load(Ordering::SeqCst) >= MAX_CONNECTIONS {
            let _ = write_response(&mut stream, &Response::error(503, "too many connections"));
            continue;
        }
        active.fetch_add(1, Ordering::SeqCst);
        let (ctx, log, active) = (ctx.clone(), log.clone(), active.clone());
        let spawned = thread::Builder::new()
            .name("http-conn".into())
            .spawn(move || {
                handle_connection(stream, &ctx, &log);
                active.fetch_sub(1, Ordering::SeqCst);
            });
        if let Err(e) = spawned {
            warn!("cannot spawn connection thread: {e}");
        }
    }
}

/// Reads up to the end of the header block. `None` if it never came.
fn read_head(stream: &mut TcpStream) -> Option<Vec<u8>> {
    let mut buf = Vec::with_capacity(1024);
    let mut chunk = [0u8; 1024];
    loop {
        let n = stream.read(&mut chunk).ok()?;
        if n == 0 {
            return (!buf.is_empty()).then_some(buf);
        }
        buf.extend_from_slice(&chunk[..n]);
        if buf.windows(4).any(|w| w == b"\r\n\r\n") || buf.windows(2).any(|w| w == b"\n\n") {
            return Some(buf);
        }
        if buf.len() > MAX_HEADER {
            return Some(buf);
        }
    }
}

fn write_response(stream: &mut TcpStream, resp: &Response) -> io::Result<()> {
    let head = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        resp.status,
        reason(resp.status),
        resp.content_type,
        resp.body.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(&resp.body)?;
    stream.flush()
}

fn handle_connection(mut stream: TcpStream, ctx: &HttpContext, log: &AccessLog) {
    let _ = stream.set_read_timeout(Some(IO_TIMEOUT));
    let _ = stream.set_write_timeout(Some(IO_TIMEOUT));
    let peer = stream
        .peer_addr()
        .map(|a| a.ip().to_string())
        .unwrap_or_else(|_| "-".into());
    let Some(head) = read_head(&mut stream) else {
        return;
    };
    let text = String::from_utf8_lossy(&head);
    let line = text
        .lines()
        .next()
        .unwrap_or("")
        .trim_end_matches('\r')
        .to_string();
    let resp = if head.len() > MAX_HEADER {
        Response::error(400, "request header too large")
    } else {
        match parse_request_line(&line) {
            Some((method, target)) => ctx.handle(method, target),
            None => Response::error(400, "malformed request line"),
        }
    };
    if let Err(e) = write_response(&mut stream, &resp) {
        debug!("{peer}: write failed: {e}");
    }
    let _ = stream.shutdown(Shutdown::Write);
    if let Some(log) = log {
        let epoch = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let entry = access_log_line(epoch, &peer, &line, resp.status, resp.body.len());
        let mut f = log.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(f, "{entry}") {
            warn!("access log: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_lines() {
        assert_eq!(
            parse_request_line("GET /status.html HTTP/1.1"),
            Some(("GET", "/status.html"))
        );
        assert_eq!(parse_request_line("GET /a b HTTP/1.1"), None);
        assert_eq!(parse_request_line("GET /"), None);
        assert_eq!(parse_request_line(""), None);
    }

    #[test]
    fn log_line_escapes() {
        assert_eq!(
            access_log_line(5, "1.2.3.4", "GET /\"x\"\t HTTP/1.0", 404, 12),
            "5 1.2.3.4 \"GET /\\\"x\\\"? HTTP/1.0\" 404 12"
        );
    }
}
