use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::io;
use std::net::{IpAddr, SocketAddr, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use log::{debug, info, warn};

use super::process::{process_value, VarState};
use super::transport::{Clock, Transport};
use super::{Outcome, PollResult, VarError, VarOutcome};
use crate::config::{HostConfig, MibSpec, MonitorConfig};
use crate::rrd::{ArchiveStore, Rrd};
use crate::snmp::{
    decode_message, encode_get_request, ErrorStatus, PduType, SnmpMessage, Value, Version,
};
use crate::status::StatusView;

pub const DEFAULT_AGENT_PORT: u16 = 161;
/// Longest single wait, so a stop request is noticed promptly.
const MAX_WAIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectorOptions {
    /// Seconds to wait for each response.
    pub timeout: f64,
    /// Extra attempts after the first.
    pub retries: u32,
}

impl Default for CollectorOptions {
    fn default() -> Self {
        CollectorOptions {
            timeout: 5.0,
            retries: 1,
        }
    }
}

/// Instrumentation hook; `host` is the index in config order.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    PollStarted {
        host: usize,
        scheduled: f64,
        at: f64,
        in_flight: usize,
    },
    PollFinished {
        host: usize,
        scheduled: f64,
        at: f64,
        outcome: Outcome,
        in_flight: usize,
    },
    Sent {
        host: usize,
        bytes: usize,
    },
    Received {
        host: usize,
        bytes: usize,
    },
    /// Undecodable datagram or unknown request id.
    Dropped {
        bytes: usize,
    },
    /// Scheduled polls that were skipped because the host fell behind.
    Missed {
        host: usize,
        cycles: u64,
    },
}

pub trait Observer: Send {
    fn event(&mut self, event: &Event);
}

impl<F: FnMut(&Event) + Send> Observer for F {
    fn event(&mut self, event: &Event) {
        self(event)
    }
}

#[derive(Debug, Default)]
pub struct CollectorStats {
    pub polls: AtomicU64,
    pub timeouts: AtomicU64,
    pub datagrams_sent: AtomicU64,
    pub bytes_sent: AtomicU64,
    pub datagrams_received: AtomicU64,
    pub bytes_received: AtomicU64,
    pub unknown_responses: AtomicU64,
    pub malformed_responses: AtomicU64,
    pub missed_cycles: AtomicU64,
}

impl CollectorStats {
    fn add(counter: &AtomicU64, n: u64) {
        counter.fetch_add(n, Ordering::Relaxed);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CollectorError {
    #[error("transport failure: {0}")]
    Transport(#[from] io::Error),
}

/// Variables sharing one community, asked for in one datagram.
struct Group {
    community: Vec<u8>,
    mibs: Vec<usize>,
}

/// Static per-host polling plan.
struct Plan {
    name: String,
    ip: String,
    addr: Option<SocketAddr>,
    version: Version,
    mibs: Vec<MibSpec>,
    groups: Vec<Group>,
}

fn resolve(ip: &str) -> Option<SocketAddr> {
    if let Ok(sa) = ip.parse::<SocketAddr>() {
        return Some(sa);
    }
    if let Ok(a) = ip.parse::<IpAddr>() {
        return Some(SocketAddr::new(a, DEFAULT_AGENT_PORT));
    }
    let all: Vec<SocketAddr> = (ip, DEFAULT_AGENT_PORT).to_socket_addrs().ok()?.collect();
    all.iter().find(|a| a.is_ipv4()).or(all.first()).copied()
}

impl Plan {
    fn new(h: &HostConfig) -> Plan {
        let mut groups: Vec<Group> = Vec::new();
        for (i, m) in h.mibs.iter().enumerate() {
            match groups
                .iter_mut()
                .find(|g| g.community == m.community.as_bytes())
            {
                Some(g) => g.mibs.push(i),
                None => groups.push(Group {
                    community: m.community.as_bytes().to_vec(),
                    mibs: vec![i],
                }),
            }
        }
        Plan {
            name: h.name.clone(),
            ip: h.ip.clone(),
            addr: resolve(&h.ip),
            version: h.snmp_version,
            mibs: h.mibs.clone(),
            groups,
        }
    }
}

struct RequestIds(i32);

impl RequestIds {
    fn next(&mut self) -> i32 {
        self.0 = if self.0 >= i32::MAX { 1 } else { self.0 + 1 };
        self.0
    }
}

struct PendingGroup {
    group: usize,
    /// Variables not yet settled.
    pending: Vec<usize>,
    request_id: i32,
    datagram: Vec<u8>,
    attempts: u32,
    deadline: f64,
    answered: bool,
    done: bool,
}

/// One in-progress poll of one host.
struct Exchange {
    scheduled: f64,
    started: f64,
    groups: Vec<PendingGroup>,
    outcomes: Vec<Option<VarOutcome>>,
}

/// Shared state an exchange needs while sending.
struct Io<'a> {
    transport: &'a mut dyn Transport,
    ids: &'a mut RequestIds,
    stats: &'a CollectorStats,
    opts: &'a CollectorOptions,
}

impl Exchange {
    fn start(
        plan: &Plan,
        host: usize,
        scheduled: f64,
        now: f64,
        io: &mut Io,
        mut emit: impl FnMut(Event),
    ) -> Exchange {
        let mut ex = Exchange {
            scheduled,
            started: now,
            groups: Vec::with_capacity(plan.groups.len()),
            outcomes: vec![None; plan.mibs.len()],
        };
        for (gi, g) in plan.groups.iter().enumerate() {
            let mut pg = PendingGroup {
                group: gi,
                pending: g.mibs.clone(),
                request_id: 0,
                datagram: Vec::new(),
                attempts: 0,
                deadline: now,
                answered: false,
                done: false,
            };
            ex.send_fresh(plan, &mut pg, host, now, io, &mut emit);
            ex.groups.push(pg);
        }
        ex
    }

    /// Encodes and sends a new request for `pg.pending`.
    fn send_fresh(
        &mut self,
        plan: &Plan,
        pg: &mut PendingGroup,
        host: usize,
        now: f64,
        io: &mut Io,
        emit: &mut impl FnMut(Event),
    ) {
        let Some(addr) = plan.addr else {
            pg.done = true;
            return;
        };
        let oids: Vec<_> = pg
            .pending
            .iter()
            .map(|i| plan.mibs[*i].oid.clone())
            .collect();
        pg.request_id = io.ids.next();
        match encode_get_request(
            plan.version,
            &plan.groups[pg.group].community,
            pg.request_id,
            &oids,
        ) {
            Ok(bytes) => pg.datagram = bytes,
            Err(e) => {
                warn!("{}: cannot encode request: {e}", plan.name);
                for i in pg.pending.drain(..) {
                    self.outcomes[i] = Some(VarOutcome::Err(VarError::Status(ErrorStatus::TooBig)));
                }
                pg.answered = true;
                pg.done = true;
                return;
            }
        }
        pg.attempts = 0;
        Self::transmit(pg, addr, host, now, io, emit);
    }

    fn transmit(
        pg: &mut PendingGroup,
        addr: SocketAddr,
        host: usize,
        now: f64,
        io: &mut Io,
        emit: &mut impl FnMut(Event),
    ) {
        pg.attempts += 1;
        pg.deadline = now + io.opts.timeout;
        match io.transport.send_to(&pg.datagram, addr) {
            Ok(()) => {
                CollectorStats::add(&io.stats.datagrams_sent, 1);
                CollectorStats::add(&io.stats.bytes_sent, pg.datagram.len() as u64);
                emit(Event::Sent {
                    host,
                    bytes: pg.datagram.len(),
                });
            }
            Err(e) => debug!("send to {addr} failed: {e}"),
        }
    }

    /// Handles a response addressed to one of this exchange's requests.
    fn on_response(
        &mut self,
        plan: &Plan,
        msg: &SnmpMessage,
        host: usize,
        now: f64,
        io: &mut Io,
        emit: &mut impl FnMut(Event),
    ) -> bool {
        let Some(gi) = self
            .groups
            .iter()
            .position(|g| !g.done && g.request_id == msg.request_id)
        else {
            return false;
        };
        let mut pg = std::mem::replace(
            &mut self.groups[gi],
            PendingGroup {
                group: 0,
                pending: Vec::new(),
                request_id: 0,
                datagram: Vec::new(),
                attempts: 0,
                deadline: 0.0,
                answered: false,
                done: true,
            },
        );
        pg.answered = true;
        let n = pg.pending.len();
        if msg.error_status != ErrorStatus::NoError {
            let idx = msg.error_index as usize;
            if (1..=n).contains(&idx) {
                // drop the offending variable and ask again for the rest
                let bad = pg.pending.remove(idx - 1);
                self.outcomes[bad] = Some(VarOutcome::Err(VarError::Status(msg.error_status)));
                if pg.pending.is_empty() {
                    pg.done = true;
                } else {
                    self.send_fresh(plan, &mut pg, host, now, io, emit);
                }
            } else {
                for i in pg.pending.drain(..) {
                    self.outcomes[i] = Some(VarOutcome::Err(VarError::Status(msg.error_status)));
                }
                pg.done = true;
            }
        } else {
            for (k, i) in pg.pending.drain(..).enumerate() {
                let outcome = match msg.varbinds.get(k) {
                    Some(vb) if vb.oid == plan.mibs[i].oid => match &vb.value {
                        Value::NoSuchObject => VarOutcome::Err(VarError::NoSuchObject),
                        Value::NoSuchInstance => VarOutcome::Err(VarError::NoSuchInstance),
                        Value::EndOfMibView => VarOutcome::Err(VarError::EndOfMibView),
                        v => match v.as_unsigned() {
                            Some(raw) => VarOutcome::Ok(raw),
                            None => VarOutcome::Err(VarError::BadType(v.type_name())),
                        },
                    },
                    _ => VarOutcome::Err(VarError::Missing),
                };
                self.outcomes[i] = Some(outcome);
            }
            pg.done = true;
        }
        self.groups[gi] = pg;
        true
    }

    /// Retries or gives up on requests whose deadline has passed.
    fn on_tick(
        &mut self,
        plan: &Plan,
        host: usize,
        now: f64,
        io: &mut Io,
        emit: &mut impl FnMut(Event),
    ) {
        for pg in self
            .groups
            .iter_mut()
            .filter(|g| !g.done && g.deadline <= now)
        {
            match plan.addr {
                Some(addr) if pg.attempts <= io.opts.retries => {
                    Self::transmit(pg, addr, host, now, io, emit)
                }
                _ => {
                    for i in pg.pending.drain(..) {
                        self.outcomes[i] = Some(VarOutcome::Err(VarError::NoResponse));
                    }
                    pg.done = true;
                }
            }
        }
    }

    fn next_deadline(&self) -> Option<f64> {
        self.groups
            .iter()
            .filter(|g| !g.done)
            .map(|g| g.deadline)
            .reduce(f64::min)
    }

    fn is_done(&self) -> bool {
        self.groups.iter().all(|g| g.done)
    }

    fn request_ids(&self) -> impl Iterator<Item = i32> + '_ {
        self.groups.iter().filter(|g| !g.done).map(|g| g.request_id)
    }

    fn into_result(self, plan: &Plan) -> PollResult {
        if !self.groups.iter().any(|g| g.answered) {
            return PollResult {
                host: plan.name.clone(),
                time: self.started,
                outcome: Outcome::Timeout,
                values: Vec::new(),
            };
        }
        PollResult {
            host: plan.name.clone(),
            time: self.started,
            outcome: Outcome::Responded,
            values: plan
                .mibs
                .iter()
                .zip(self.outcomes)
                .map(|(m, o)| {
                    (
                        m.id.clone(),
                        o.unwrap_or(VarOutcome::Err(VarError::NoResponse)),
                    )
                })
                .collect(),
        }
    }
}

fn decode_response(buf: &[u8]) -> Option<SnmpMessage> {
    decode_message(buf)
        .ok()
        .filter(|m| m.pdu_type == PduType::Response)
}

/// Polls one host once, blocking until it answers or times out.
pub fn poll_host(
    host: &HostConfig,
    opts: &CollectorOptions,
    transport: &mut dyn Transport,
    clock: &dyn Clock,
) -> io::Result<PollResult> {
    let mut plan = Plan::new(host);
    if plan.addr.is_none() {
        plan.addr = resolve(&plan.ip);
    }
    let stats = CollectorStats::default();
    let mut ids = RequestIds(0);
    let mut io = Io {
        transport,
        ids: &mut ids,
        stats: &stats,
        opts,
    };
    let now = clock.now();
    let mut ex = Exchange::start(&plan, 0, now, now, &mut io, |_| {});
    let mut buf = vec![0u8; 65_536];
    while !ex.is_done() {
        let now = clock.now();
        let wait = ex.next_deadline().map_or(0.0, |d| (d - now).max(0.0));
        if let Some((n, from)) = io.transport.recv(&mut buf, Duration::from_secs_f64(wait))? {
            if Some(from) == plan.addr {
                if let Some(msg) = decode_response(&buf[..n]) {
                    ex.on_response(&plan, &msg, 0, clock.now(), &mut io, &mut |_| {});
                }
            }
        }
        ex.on_tick(&plan, 0, clock.now(), &mut io, &mut |_| {});
    }
    Ok(ex.into_result(&plan))
}

struct HostRt {
    plan: Plan,
    polldelay: f64,
    next_due: f64,
    states: Vec<VarState>,
    rrd: Option<Rrd>,
    exchange: Option<Exchange>,
}

fn due_key(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

/// The polling loop. Sole writer of variable state, the status view and
/// the archives.
pub struct Collector {
    hosts: Vec<HostRt>,
    num_connections: usize,
    opts: CollectorOptions,
    transport: Box<dyn Transport>,
    clock: Arc<dyn Clock>,
    status: Arc<StatusView>,
    archives: Arc<ArchiveStore>,
    stats: Arc<CollectorStats>,
    observer: Option<Box<dyn Observer>>,
    ids: RequestIds,
    in_flight: Vec<usize>,
    by_request: HashMap<i32, usize>,
    queue: BinaryHeap<Reverse<(i64, usize)>>,
}

impl Collector {
    pub fn new(
        config: &MonitorConfig,
        opts: CollectorOptions,
        transport: Box<dyn Transport>,
        clock: Arc<dyn Clock>,
        status: Arc<StatusView>,
        archives: Arc<ArchiveStore>,
    ) -> Collector {
        let hosts = config
            .hosts
            .iter()
            .enumerate()
            .map(|(i, h)| HostRt {
                plan: Plan::new(h),
                polldelay: h.polldelay as f64,
                next_due: 0.0,
                states: vec![VarState::default(); h.mibs.len()],
                rrd: archives.get(i).map(|r| (*r).clone()),
                exchange: None,
            })
            .collect();
        Collector {
            hosts,
            num_connections: config.num_connections.max(1),
            opts,
            transport,
            clock,
            status,
            archives,
            stats: Arc::new(CollectorStats::default()),
            observer: None,
            ids: RequestIds(0),
            in_flight: Vec::new(),
            by_request: HashMap::new(),
            queue: BinaryHeap::new(),
        }
    }

    pub fn set_observer(&mut self, observer: Box<dyn Observer>) {
        self.observer = Some(observer);
    }

    pub fn stats(&self) -> Arc<CollectorStats> {
        self.stats.clone()
    }

    /// Runs until `stop` is set. Polls still in flight at that point are
    /// abandoned.
    pub fn run(&mut self, stop: &AtomicBool) -> Result<(), CollectorError> {
        let start = self.clock.now();
        for (i, h) in self.hosts.iter_mut().enumerate() {
            if h.plan.mibs.is_empty() {
                continue;
            }
            h.next_due = start;
            self.queue.push(Reverse((due_key(start), i)));
        }
        info!(
            "collector started: {} hosts, at most {} in flight",
            self.queue.len(),
            self.num_connections
        );
        let mut buf = vec![0u8; 65_536];
        while !stop.load(Ordering::Relaxed) {
            let now = self.clock.now();
            self.start_due(now);

            let mut wake = now + MAX_WAIT;
            for &h in &self.in_flight {
                if let Some(d) = self.hosts[h]
                    .exchange
                    .as_ref()
                    .and_then(Exchange::next_deadline)
                {
                    wake = wake.min(d);
                }
            }
            if self.in_flight.len() < self.num_connections {
                if let Some(Reverse((due, _))) = self.queue.peek() {
                    wake = wake.min(*due as f64 / 1e6);
                }
            }
            let wait = Duration::from_secs_f64((wake - now).max(0.0));
            if let Some((n, from)) = self.transport.recv(&mut buf, wait)? {
                self.on_datagram(&buf[..n], from);
            }
            let now = self.clock.now();
            self.tick(now);
        }
        for h in std::mem::take(&mut self.in_flight) {
            self.hosts[h].exchange = None;
        }
        self.by_request.clear();
        info!("collector stopped");
        Ok(())
    }

    fn emit(observer: &mut Option<Box<dyn Observer>>, e: Event) {
        if let Some(o) = observer {
            o.event(&e);
        }
    }

    fn start_due(&mut self, now: f64) {
        while self.in_flight.len() < self.num_connections {
            let Some(Reverse((due, idx))) = self.queue.peek().copied() else {
                break;
            };
            if due > due_key(now) {
                break;
            }
            self.queue.pop();
            let h = &mut self.hosts[idx];
            let scheduled = h.next_due;
            h.next_due += h.polldelay;
            if h.next_due <= now {
                let missed = ((now - h.next_due) / h.polldelay).floor() as u64 + 1;
                h.next_due += missed as f64 * h.polldelay;
                CollectorStats::add(&self.stats.missed_cycles, missed);
                Self::emit(
                    &mut self.observer,
                    Event::Missed {
                        host: idx,
                        cycles: missed,
                    },
                );
            }
            if h.plan.addr.is_none() {
                h.plan.addr = resolve(&h.plan.ip);
            }
            self.in_flight.push(idx);
            Self::emit(
                &mut self.observer,
                Event::PollStarted {
                    host: idx,
                    scheduled,
                    at: now,
                    in_flight: self.in_flight.len(),
                },
            );
            let mut io = Io {
                transport: &mut *self.transport,
                ids: &mut self.ids,
                stats: &self.stats,
                opts: &self.opts,
            };
            let observer = &mut self.observer;
            let ex = Exchange::start(&h.plan, idx, scheduled, now, &mut io, |e| {
                Self::emit(observer, e)
            });
            for rid in ex.request_ids() {
                self.by_request.insert(rid, idx);
            }
            h.exchange = Some(ex);
            if h.exchange.as_ref().is_some_and(Exchange::is_done) {
                self.finish(idx, now);
            }
        }
    }

    fn on_datagram(&mut self, bytes: &[u8], from: SocketAddr) {
        CollectorStats::add(&self.stats.datagrams_received, 1);
        CollectorStats::add(&self.stats.bytes_received, bytes.len() as u64);
        let Some(msg) = decode_response(bytes) else {
            CollectorStats::add(&self.stats.malformed_responses, 1);
            Self::emit(&mut self.observer, Event::Dropped { bytes: bytes.len() });
            return;
        };
        let host = match self.by_request.get(&msg.request_id) {
            Some(&h) if self.hosts[h].plan.addr == Some(from) => h,
            _ => {
                CollectorStats::add(&self.stats.unknown_responses, 1);
                Self::emit(&mut self.observer, Event::Dropped { bytes: bytes.len() });
                return;
            }
        };
        Self::emit(
            &mut self.observer,
            Event::Received {
                host,
                bytes: bytes.len(),
            },
        );
        let now = self.clock.now();
        let h = &mut self.hosts[host];
        let Some(ex) = h.exchange.as_mut() else {
            return;
        };
        self.by_request.remove(&msg.request_id);
        let mut io = Io {
            transport: &mut *self.transport,
            ids: &mut self.ids,
            stats: &self.stats,
            opts: &self.opts,
        };
        let observer = &mut self.observer;
        ex.on_response(&h.plan, &msg, host, now, &mut io, &mut |e| {
            Self::emit(observer, e)
        });
        for rid in ex.request_ids() {
            self.by_request.insert(rid, host);
        }
        if ex.is_done() {
            self.finish(host, now);
        }
    }

    fn tick(&mut self, now: f64) {
        let mut finished = Vec::new();
        for &idx in &self.in_flight {
            let h = &mut self.hosts[idx];
            let Some(ex) = h.exchange.as_mut() else {
                continue;
            };
            if ex.next_deadline().is_some_and(|d| d <= now) {
                let mut io = Io {
                    transport: &mut *self.transport,
                    ids: &mut self.ids,
                    stats: &self.stats,
                    opts: &self.opts,
                };
                let observer = &mut self.observer;
                ex.on_tick(&h.plan, idx, now, &mut io, &mut |e| Self::emit(observer, e));
            }
            if ex.is_done() {
                finished.push(idx);
            }
        }
        for idx in finished {
            self.finish(idx, now);
        }
    }

    /// Applies a completed poll and requeues the host.
    fn finish(&mut self, idx: usize, now: f64) {
        let h = &mut self.hosts[idx];
        let Some(ex) = h.exchange.take() else {
            return;
        };
        self.in_flight.retain(|i| *i != idx);
        self.by_request.retain(|_, host| *host != idx);
        let scheduled = ex.scheduled;
        let result = ex.into_result(&h.plan);

        CollectorStats::add(&self.stats.polls, 1);
        let processed: Vec<Option<f64>> = match result.outcome {
            Outcome::Timeout => {
                CollectorStats::add(&self.stats.timeouts, 1);
                debug!("{}: timeout", h.plan.name);
                vec![None; h.plan.mibs.len()]
            }
            Outcome::Responded => result
                .values
                .iter()
                .enumerate()
                .map(|(i, (_, o))| match o {
                    VarOutcome::Ok(raw) => {
                        process_value(&h.plan.mibs[i], *raw, &mut h.states[i], result.time)
                    }
                    VarOutcome::Err(e) => {
                        debug!("{}: {}: {e}", h.plan.name, h.plan.mibs[i].id);
                        None
                    }
                })
                .collect(),
        };
        if let (Some(rrd), Outcome::Responded) = (h.rrd.as_mut(), result.outcome) {
            match rrd.update(scheduled, &processed) {
                Ok(_) => self.archives.publish(idx, rrd.clone()),
                Err(e) => warn!("{}: archive update rejected: {e}", h.plan.name),
            }
        }
        if let Err(e) = self.status.apply_poll_result(&result, &processed) {
            warn!("{e}");
        }
        Self::emit(
            &mut self.observer,
            Event::PollFinished {
                host: idx,
                scheduled,
                at: now,
                outcome: result.outcome,
                in_flight: self.in_flight.len(),
            },
        );
        self.queue.push(Reverse((due_key(h.next_due), idx)));
    }
}
