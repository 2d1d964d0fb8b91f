//! In-memory cluster view and the XML status document.
//!
//! The collector is the only writer. Every change publishes a new
//! immutable [`ClusterStatus`]; readers load the current one without
//! locking and never see a half-applied poll.

use std::collections::VecDeque;
use std::fmt::Write;
use std::sync::{Arc, Mutex};

use arc_swap::ArcSwap;
use chrono::{DateTime, Local, TimeZone};

use crate::collector::{Outcome, PollResult, VarOutcome};
use crate::config::MonitorConfig;
use crate::xml::{escape, escape_attr};

pub const NOTIFICATION_CAPACITY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HostState {
    Unknown,
    Ok,
    Timeout,
}

impl HostState {
    pub fn as_str(self) -> &'static str {
        match self {
            HostState::Unknown => "UNKNOWN",
            HostState::Ok => "OK",
            HostState::Timeout => "TIMEOUT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
    Critical,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "INFO",
            Severity::Warning => "WARNING",
            Severity::Critical => "CRITICAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Notification {
    /// Microseconds since the epoch.
    pub ts_micros: i64,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HostStatus {
    pub name: String,
    pub tags: Vec<String>,
    pub status: HostState,
    pub mib_ids: Arc<[String]>,
    /// Parallel to `mib_ids`: last known value and its epoch second.
    pub last_values: Vec<Option<(f64, i64)>>,
    /// `(graph id, title)`
    pub graphs: Arc<[(String, String)]>,
    pub notifications: VecDeque<Notification>,
}

impl HostStatus {
    pub fn value(&self, mib: &str) -> Option<(f64, i64)> {
        let i = self.mib_ids.iter().position(|m| m == mib)?;
        self.last_values[i]
    }

    pub fn notify(&mut self, ts_micros: i64, severity: Severity, message: impl Into<String>) {
        if self.notifications.len() == NOTIFICATION_CAPACITY {
            self.notifications.pop_front();
        }
        self.notifications.push_back(Notification {
            ts_micros,
            severity,
            message: message.into(),
        });
    }
}

/// A consistent view of every configured host, in config order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStatus {
    /// Number of applied changes; equal versions mean equal contents.
    pub version: u64,
    pub hosts: Vec<Arc<HostStatus>>,
}

impl ClusterStatus {
    pub fn host(&self, name: &str) -> Option<&HostStatus> {
        self.hosts.iter().find(|h| h.name == name).map(|h| &**h)
    }

    pub fn to_xml(&self) -> String {
        serialize_hosts(self.hosts.iter().map(|h| &**h), &Local)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatusError {
    #[error("unknown host `{0}`")]
    UnknownHost(String),
}

pub struct StatusView {
    current: ArcSwap<ClusterStatus>,
    writer: Mutex<()>,
}

fn micros(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

impl StatusView {
    /// Every host starts UNKNOWN with no values.
    pub fn new(config: &MonitorConfig) -> StatusView {
        let hosts = config
            .hosts
            .iter()
            .map(|h| {
                Arc::new(HostStatus {
                    name: h.name.clone(),
                    tags: h.tags.clone(),
                    status: HostState::Unknown,
                    mib_ids: h.mibs.iter().map(|m| m.id.clone()).collect(),
                    last_values: vec![None; h.mibs.len()],
                    graphs: h
                        .graphs
                        .iter()
                        .map(|g| (g.id.clone(), g.title.clone()))
                        .collect(),
                    notifications: VecDeque::new(),
                })
            })
            .collect();
        StatusView {
            current: ArcSwap::from_pointee(ClusterStatus { version: 0, hosts }),
            writer: Mutex::new(()),
        }
    }

    pub fn snapshot(&self) -> Arc<ClusterStatus> {
        self.current.load_full()
    }

    /// Copies host `name`, lets `f` change it, and publishes the result.
    pub fn update_host(
        &self,
        name: &str,
        f: impl FnOnce(&mut HostStatus),
    ) -> Result<(), StatusError> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let cur = self.current.load_full();
        let idx = cur
            .hosts
            .iter()
            .position(|h| h.name == name)
            .ok_or_else(|| StatusError::UnknownHost(name.to_string()))?;
        let mut host = (*cur.hosts[idx]).clone();
        f(&mut host);
        let mut hosts = cur.hosts.clone();
        hosts[idx] = Arc::new(host);
        self.current.store(Arc::new(ClusterStatus {
            version: cur.version + 1,
            hosts,
        }));
        Ok(())
    }

    /// Records one poll. `processed` follows the host's mib order; `None`
    /// leaves the previous value in place.
    pub fn apply_poll_result(
        &self,
        result: &PollResult,
        processed: &[Option<f64>],
    ) -> Result<(), StatusError> {
        let ts = micros(result.time);
        let second = result.time.floor() as i64;
        self.update_host(&result.host, |h| match result.outcome {
            Outcome::Timeout => {
                h.status = HostState::Timeout;
                h.notify(ts, Severity::Critical, "Timeout");
            }
            Outcome::Responded => {
                h.status = HostState::Ok;
                for (slot, v) in h.last_values.iter_mut().zip(processed) {
                    if let Some(v) = v.filter(|v| v.is_finite()) {
                        *slot = Some((v, second));
                    }
                }
                for (id, outcome) in &result.values {
                    if let VarOutcome::Err(e) = outcome {
                        h.notify(ts, Severity::Warning, format!("{id}: {e}"));
                    }
                }
            }
        })
    }
}

/// Read-only access for everything other than the collector.
#[derive(Clone)]
pub struct StatusReader(Arc<StatusView>);

impl StatusReader {
    pub fn new(view: Arc<StatusView>) -> StatusReader {
        StatusReader(view)
    }

    pub fn snapshot(&self) -> Arc<ClusterStatus> {
        self.0.snapshot()
    }
}

/// `<epoch>.<micros> <HH:MM:SS>.<micros>` in `tz`.
pub fn format_ts<Tz: TimeZone>(ts_micros: i64, tz: &Tz) -> String
where
    Tz::Offset: std::fmt::Display,
{
    let secs = ts_micros.div_euclid(1_000_000);
    let us = ts_micros.rem_euclid(1_000_000);
    let clock = DateTime::from_timestamp(secs, 0)
        .map(|d| d.with_timezone(tz).format("%H:%M:%S").to_string())
        .unwrap_or_else(|| "00:00:00".into());
    format!("{secs}.{us:06} {clock}.{us:06}")
}

fn write_host<Tz: TimeZone>(out: &mut String, h: &HostStatus, tz: &Tz)
where
    Tz::Offset: std::fmt::Display,
{
    let _ = write!(out, "  <host name=\"{}\"", escape_attr(&h.name));
    if !h.tags.is_empty() {
        let _ = write!(out, " tag=\"{}\"", escape_attr(&h.tags.join(",")));
    }
    let _ = writeln!(out, " status=\"{}\">", h.status.as_str());

    let known: Vec<(&String, (f64, i64))> = h
        .mib_ids
        .iter()
        .zip(&h.last_values)
        .filter_map(|(id, v)| v.map(|v| (id, v)))
        .collect();
    if known.is_empty() {
        out.push_str("    <mibs/>\n");
    } else {
        out.push_str("    <mibs>\n");
        for (id, (v, t)) in known {
            let _ = writeln!(
                out,
                "      <mib id=\"{}\" lastUpdated=\"{t}\">{v:.6}</mib>",
                escape_attr(id)
            );
        }
        out.push_str("    </mibs>\n");
    }

    if h.graphs.is_empty() {
        out.push_str("    <graphs/>\n");
    } else {
        out.push_str("    <graphs>\n");
        for (id, title) in h.graphs.iter() {
            let _ = writeln!(
                out,
                "      <graph id=\"{}\" title=\"{}\"/>",
                escape_attr(id),
                escape_attr(title)
            );
        }
        out.push_str("    </graphs>\n");
    }

    if h.notifications.is_empty() {
        out.push_str("    <notifications/>\n");
    } else {
        out.push_str("    <notifications>\n");
        for n in &h.notifications {
            let _ = writeln!(
                out,
                "      <msg ts=\"{}\" severity=\"{}\">{}</msg>",
                format_ts(n.ts_micros, tz),
                n.severity.as_str(),
                escape(&n.message)
            );
        }
        out.push_str("    </notifications>\n");
    }
    out.push_str("  </host>\n");
}

/// The status document for `hosts`, with notification clock times in `tz`.
pub fn serialize_hosts<'a, Tz: TimeZone>(
    hosts: impl IntoIterator<Item = &'a HostStatus>,
    tz: &Tz,
) -> String
where
    Tz::Offset: std::fmt::Display,
{
    let mut out = String::from("<?xml version=\"1.0\"?>\n");
    let mut any = false;
    for h in hosts {
        if !any {
            out.push_str("<hosts>\n");
            any = true;
        }
        write_host(&mut out, h, tz);
    }
    out.push_str(if any { "</hosts>\n" } else { "<hosts/>\n" });
    out
}

/// Single-host document: a `<hosts>` root holding just that host.
pub fn host_xml(host: &HostStatus) -> String {
    serialize_hosts([host], &Local)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_decimals_round_half_even() {
        // exactly representable ties
        assert_eq!(format!("{:.2}", 0.125), "0.12");
        assert_eq!(format!("{:.2}", 0.375), "0.38");
        assert_eq!(format!("{:.0}", 2.5), "2");
        assert_eq!(format!("{:.6}", 534717280.0), "534717280.000000");
        assert_eq!(format!("{:.6}", 1e20), "100000000000000000000.000000");
    }

    #[test]
    fn ts_format() {
        let utc = chrono::Utc;
        assert_eq!(
            format_ts(1017937775_090771, &utc),
            "1017937775.090771 16:29:35.090771"
        );
        let cest = chrono::FixedOffset::east_opt(2 * 3600).unwrap();
        assert_eq!(
            format_ts(1017937775_090771, &cest),
            "1017937775.090771 18:29:35.090771"
        );
    }
}
