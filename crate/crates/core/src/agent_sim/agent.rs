use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentScript, Evaluator, Faults, SimError};
use crate::snmp::{
    decode_message, ErrorStatus, Oid, PduType, SnmpMessage, Value, VarBind, Version,
};

const POLL_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq)]
pub enum Fault {
    Silent(bool),
    DropProbability(f64),
    ErrorOid(Oid),
    /// Back to normal behavior.
    Clear,
}

#[derive(Debug, Default)]
pub struct AgentStats {
    pub requests: AtomicU64,
    pub responses: AtomicU64,
    pub dropped: AtomicU64,
    pub bytes_in: AtomicU64,
    pub bytes_out: AtomicU64,
}

struct Shared {
    faults: Mutex<Faults>,
    stop: AtomicBool,
    stats: AgentStats,
}

/// A running simulated agent. Stops when dropped.
pub struct Agent {
    addr: SocketAddr,
    shared: Arc<Shared>,
    thread: Option<JoinHandle<()>>,
}

/// The response an agent gives to `req` at time `t`, or `None` when it
/// stays silent.
pub fn answer(
    req: &SnmpMessage,
    community: &[u8],
    eval: &Evaluator,
    faults: &Faults,
    t: f64,
) -> Option<SnmpMessage> {
    if req.pdu_type != PduType::GetRequest || req.community != community {
        return None;
    }
    let lookup = |oid: &Oid| {
        if faults.error_oids.contains(oid) {
            None
        } else {
            eval.position(oid)
        }
    };
    match req.version {
        Version::V1 => {
            for (i, vb) in req.varbinds.iter().enumerate() {
                if lookup(&vb.oid).is_none() {
                    return Some(req.response(
                        ErrorStatus::NoSuchName,
                        i as u32 + 1,
                        req.varbinds.clone(),
                    ));
                }
            }
            let vbs = req
                .varbinds
                .iter()
                .map(|vb| VarBind {
                    oid: vb.oid.clone(),
                    value: eval.value(lookup(&vb.oid).expect("checked"), t),
                })
                .collect();
            Some(req.response(ErrorStatus::NoError, 0, vbs))
        }
        Version::V2c => {
            let vbs = req
                .varbinds
                .iter()
                .map(|vb| VarBind {
                    oid: vb.oid.clone(),
                    value: lookup(&vb.oid).map_or(Value::NoSuchObject, |i| eval.value(i, t)),
                })
                .collect();
            Some(req.response(ErrorStatus::NoError, 0, vbs))
        }
    }
}

fn encode_answer(req: &SnmpMessage, resp: SnmpMessage) -> Option<Vec<u8>> {
    match resp.encode() {
        Ok(b) => Some(b),
        Err(_) => req
            .response(ErrorStatus::TooBig, 0, Vec::new())
            .encode()
            .ok(),
    }
}

impl Agent {
    /// Binds `127.0.0.1:<script.port>` and starts answering.
    pub fn start(script: &AgentScript, seed: u64) -> Result<Agent, SimError> {
        script.validate()?;
        let bind = |source| SimError::Bind {
            port: script.port,
            source,
        };
        let socket = UdpSocket::bind(("127.0.0.1", script.port)).map_err(bind)?;
        socket.set_read_timeout(Some(POLL_INTERVAL)).map_err(bind)?;
        let addr = socket.local_addr().map_err(bind)?;
        let shared = Arc::new(Shared {
            faults: Mutex::new(script.faults.clone()),
            stop: AtomicBool::new(false),
            stats: AgentStats::default(),
        });
        let eval = Evaluator::new(&script.variables, seed);
        let community = script.community.as_bytes().to_vec();
        let wall_clock = script.wall_clock;
        let sh = shared.clone();
        let thread = thread::Builder::new()
            .name(format!("agent-{}", addr.port()))
            .spawn(move || run(socket, sh, eval, community, wall_clock, seed))
            .map_err(bind)?;
        Ok(Agent {
            addr,
            shared,
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn inject_fault(&self, fault: Fault) {
        let mut f = self.shared.faults.lock().unwrap_or_else(|e| e.into_inner());
        match fault {
            Fault::Silent(s) => f.silent = s,
            Fault::DropProbability(p) => f.drop_probability = p.clamp(0.0, 1.0),
            Fault::ErrorOid(oid) => {
                f.error_oids.insert(oid);
            }
            Fault::Clear => *f = Faults::default(),
        }
    }

    pub fn faults(&self) -> Faults {
        self.shared
            .faults
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn stats(&self) -> &AgentStats {
        &self.shared.stats
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Agent {
    fn drop(&mut self) {
        self.halt();
    }
}

fn run(
    socket: UdpSocket,
    shared: Arc<Shared>,
    eval: Evaluator,
    community: Vec<u8>,
    wall_clock: bool,
    seed: u64,
) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d409);
    let mut buf = vec![0u8; 65_536];
    let stats = &shared.stats;
    while !shared.stop.load(Ordering::Relaxed) {
        let (n, from) = match socket.recv_from(&mut buf) {
            Ok(x) => x,
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                continue
            }
            Err(e) => {
                debug!("agent {}: {e}", socket.local_addr().map_or(0, |a| a.port()));
                continue;
            }
        };
        stats.requests.fetch_add(1, Ordering::Relaxed);
        stats.bytes_in.fetch_add(n as u64, Ordering::Relaxed);
        let t = if wall_clock {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64())
        } else {
            started.elapsed().as_secs_f64()
        };
        let reply = {
            let faults = shared.faults.lock().unwrap_or_else(|e| e.into_inner());
            let dropped = faults.silent
                || (faults.drop_probability > 0.0 && rng.gen::<f64>() < faults.drop_probability);
            match decode_message(&buf[..n]) {
                Ok(req) if !dropped => {
                    answer(&req, &community, &eval, &faults, t).and_then(|r| encode_answer(&req, r))
                }
                _ => None,
            }
        };
        match reply {
            Some(bytes) => {
                if socket.send_to(&bytes, from).is_ok() {
                    stats.responses.fetch_add(1, Ordering::Relaxed);
                    stats
                        .bytes_out
                        .fetch_add(bytes.len() as u64, Ordering::Relaxed);
                }
            }
            None => {
                stats.dropped.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}
