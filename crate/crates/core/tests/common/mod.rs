//! Independent reference implementations shared by the integration tests
//! and the acceptance suite.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::Rng;

use clustermon::agent_sim::{answer, AgentScript, Evaluator, Faults};
use clustermon::collector::{Clock, Transport};

use clustermon::rrd::{Cf, RraSpec, RrdSpec, SeriesRow, VarKind, Variable};
use clustermon::snmp::{decode_message, ErrorStatus, Oid, SnmpMessage, Value, VarBind, Version};

/// BER encoding of an OBJECT IDENTIFIER, written from the X.690 rules
/// without touching the library codec.
pub fn ber_oid_oracle(arcs: &[u32]) -> Vec<u8> {
    let mut subids: Vec<u64> = vec![arcs[0] as u64 * 40 + arcs[1] as u64];
    subids.extend(arcs[2..].iter().map(|a| *a as u64));
    let mut content = Vec::new();
    for mut s in subids {
        let mut groups = vec![(s & 0x7f) as u8];
        s >>= 7;
        while s > 0 {
            groups.push((s & 0x7f) as u8 | 0x80);
            s >>= 7;
        }
        groups.reverse();
        content.extend(groups);
    }
    let mut out = vec![0x06];
    if content.len() < 128 {
        out.push(content.len() as u8);
    } else {
        let len_bytes: Vec<u8> = (content.len() as u64)
            .to_be_bytes()
            .into_iter()
            .skip_while(|b| *b == 0)
            .collect();
        out.push(0x80 | len_bytes.len() as u8);
        out.extend(len_bytes);
    }
    out.extend(content);
    out
}

/// Counter increase by modular arithmetic over the width implied by the
/// previous reading.
pub fn counter_oracle(prev: u64, raw: u64) -> u128 {
    let modulus: i128 = if prev <= u32::MAX as u64 {
        1 << 32
    } else {
        1 << 64
    };
    ((raw as i128 - prev as i128).rem_euclid(modulus)) as u128
}

fn consolidate(cf: Cf, known: &[f64], per_row: usize, xff: f64) -> Option<f64> {
    if known.is_empty() || (known.len() as f64 / per_row as f64) < xff {
        return None;
    }
    Some(match cf {
        Cf::Average => known.iter().sum::<f64>() / known.len() as f64,
        Cf::Min => known.iter().copied().fold(f64::INFINITY, f64::min),
        Cf::Max => known.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Cf::Last => *known.last().unwrap(),
    })
}

/// Expected contents of every archive (oldest row first) after feeding
/// `samples` to a database created at `start`, recomputed from scratch:
/// one PDP per step-wide bin taken from the last sample in it, a bin
/// committed once a later bin has a sample, and each row consolidating
/// the PDPs of its aligned window.
pub fn rrd_oracle(
    spec: &RrdSpec,
    start: f64,
    samples: &[(f64, Vec<Option<f64>>)],
) -> Vec<Vec<SeriesRow>> {
    let step = spec.step as i64;
    let bin_of = |t: f64| (t.floor() as i64).div_euclid(step);
    let bin0 = bin_of(start);
    let mut pdp: BTreeMap<i64, Vec<Option<f64>>> = BTreeMap::new();
    for (t, v) in samples {
        pdp.insert(
            bin_of(*t),
            v.iter().map(|x| x.filter(|x| x.is_finite())).collect(),
        );
    }
    let cur_bin = samples.last().map_or(bin0, |s| bin_of(s.0));
    let committed_end = cur_bin * step;
    let nvars = spec.variables.len();

    spec.archives
        .iter()
        .map(|a| {
            let g = a.granularity as i64;
            let rows = a.rows();
            let per_row = (a.granularity / spec.step) as usize;
            let first_end = (bin0 * step).div_euclid(g) * g;
            let mut emitted: BTreeMap<i64, Vec<Option<f64>>> = BTreeMap::new();
            let mut e = first_end + g;
            // only the newest `rows` windows can survive
            let last_e = if committed_end >= first_end + g {
                first_end + (committed_end - first_end) / g * g
            } else {
                first_end
            };
            if last_e > first_end {
                e = e.max(last_e - (rows as i64 - 1) * g);
            }
            while e <= committed_end {
                let values = (0..nvars)
                    .map(|v| {
                        let known: Vec<f64> = ((e - g) / step..e / step)
                            .filter(|b| *b >= bin0)
                            .filter_map(|b| pdp.get(&b).and_then(|vals| vals[v]))
                            .collect();
                        consolidate(a.cf, &known, per_row, a.xff)
                    })
                    .collect();
                emitted.insert(e, values);
                e += g;
            }
            (0..rows)
                .map(|k| {
                    let back = (rows - 1 - k) as i64;
                    let time = last_e - back * g;
                    SeriesRow {
                        time,
                        values: emitted
                            .get(&time)
                            .cloned()
                            .unwrap_or_else(|| vec![None; nvars]),
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact for MIN/MAX/LAST, relative 1e-9 for AVERAGE.
pub fn rows_match(cf: Cf, got: &[SeriesRow], want: &[SeriesRow]) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("{} rows, expected {}", got.len(), want.len()));
    }
    for (g, w) in got.iter().zip(want) {
        if g.time != w.time {
            return Err(format!("row time {} expected {}", g.time, w.time));
        }
        for (i, (a, b)) in g.values.iter().zip(&w.values).enumerate() {
            let ok = match (a, b) {
                (None, None) => true,
                (Some(a), Some(b)) if cf == Cf::Average => {
                    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
                }
                (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
                _ => false,
            };
            if !ok {
                return Err(format!("row {} var {i}: got {a:?}, expected {b:?}", g.time));
            }
        }
    }
    Ok(())
}

/// A random database layout and update stream: random gaps (some longer
/// than whole archives), unknown values and several samples per bin.
pub fn random_rrd_case(rng: &mut impl Rng) -> (RrdSpec, f64, Vec<(f64, Vec<Option<f64>>)>) {
    let step = [1u64, 5, 10, 30, 60][rng.gen_range(0..5)];
    let nvars = rng.gen_range(1..=3);
    let narch = rng.gen_range(2..=4);
    let archives = (0..narch)
        .map(|i| {
            let cf = if i < 4 && rng.gen_bool(0.6) {
                Cf::ALL[i]
            } else {
                Cf::ALL[rng.gen_range(0..4)]
            };
            let granularity = step * rng.gen_range(1..=8u64);
            let rows = rng.gen_range(1..=24u64);
            RraSpec {
                cf,
                xff: [0.0, 0.5, 0.8, 1.0][rng.gen_range(0..4)],
                granularity,
                expire: (granularity * (rows - 1) + rng.gen_range(1..=granularity))
                    .max(granularity),
            }
        })
        .collect();
    let spec = RrdSpec {
        step,
        variables: (0..nvars)
            .map(|i| Variable {
                id: format!("v{i}"),
                kind: VarKind::Gauge,
                min: None,
                max: None,
            })
            .collect(),
        archives,
    };
    let start = rng.gen_range(1_000_000_000i64..1_100_000_000) as f64 + rng.gen_range(0.0..1.0);
    let mut t = start;
    let n = rng.gen_range(0..300);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let s = step as f64;
        let gap = match rng.gen_range(0..100) {
            0..=29 => rng.gen_range(0.001..s * 0.5),
            30..=89 => rng.gen_range(s * 0.5..s * 2.5),
            90..=97 => rng.gen_range(s * 2.5..s * 40.0),
            _ => rng.gen_range(s * 40.0..s * 400.0),
        };
        t += gap;
        let values = (0..nvars)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    None
                } else {
                    Some((rng.gen_range(-1.0e6..1.0e6) * 1000.0_f64).round() / 1000.0)
                }
            })
            .collect();
        samples.push((t, values));
    }
    (spec, start, samples)
}

pub fn random_oid(rng: &mut impl Rng) -> Oid {
    let first = rng.gen_range(0..=2u32);
    let second = if first == 2 {
        rng.gen_range(0..=u32::MAX - 80)
    } else {
        rng.gen_range(0..40)
    };
    let mut arcs = vec![first, second];
    let n = rng.gen_range(0..20);
    for _ in 0..n {
        arcs.push(match rng.gen_range(0..4) {
            0 => rng.gen_range(0..128),
            1 => rng.gen_range(128..16384),
            _ => rng.gen(),
        });
    }
    Oid::new(arcs).unwrap()
}

pub fn random_value(rng: &mut impl Rng, version: Version) -> Value {
    let n = if version == Version::V1 { 9 } else { 12 };
    match rng.gen_range(0..n) {
        0 => Value::Integer(rng.gen()),
        1 => Value::OctetString((0..rng.gen_range(0..64)).map(|_| rng.gen()).collect()),
        2 => Value::Null,
        3 => Value::ObjectId(random_oid(rng)),
        4 => Value::Counter32(rng.gen()),
        5 => Value::Gauge32(rng.gen()),
        6 => Value::TimeTicks(rng.gen()),
        7 => Value::Counter64(rng.gen()),
        8 => Value::Other {
            tag: [0x40, 0x44][rng.gen_range(0..2)],
            content: (0..rng.gen_range(0..8)).map(|_| rng.gen()).collect(),
        },
        9 => Value::NoSuchObject,
        10 => Value::NoSuchInstance,
        _ => Value::EndOfMibView,
    }
}

/// A random well-formed request or response.
pub fn random_message(rng: &mut impl Rng) -> SnmpMessage {
    let version = if rng.gen_bool(0.5) {
        Version::V1
    } else {
        Version::V2c
    };
    let community: Vec<u8> = (0..rng.gen_range(1..24)).map(|_| rng.gen()).collect();
    let nvb = rng.gen_range(1..=30);
    let oids: Vec<Oid> = (0..nvb).map(|_| random_oid(rng)).collect();
    let req = SnmpMessage::get_request(version, &community, rng.gen(), oids.clone());
    if rng.gen_bool(0.3) {
        return req;
    }
    let status = ErrorStatus::from_code(if rng.gen_bool(0.7) {
        0
    } else {
        rng.gen_range(0..19)
    })
    .unwrap();
    let index = if status == ErrorStatus::NoError {
        0
    } else {
        rng.gen_range(0..=nvb as u32)
    };
    let vbs = oids
        .into_iter()
        .map(|oid| VarBind {
            oid,
            value: random_value(rng, version),
        })
        .collect();
    req.response(status, index, vbs)
}

/// A clock that only moves when told to.
pub struct ManualClock(Mutex<f64>);

impl ManualClock {
    pub fn new(t: f64) -> Arc<ManualClock> {
        Arc::new(ManualClock(Mutex::new(t)))
    }

    pub fn set(&self, t: f64) {
        let mut g = self.0.lock().unwrap();
        *g = g.max(t);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        *self.0.lock().unwrap()
    }
}

/// Behaviour of one simulated agent on a [`SimNet`].
pub struct SimHost {
    pub eval: Evaluator,
    pub community: Vec<u8>,
    pub faults: Faults,
    /// Seconds between request and reply.
    pub latency: f64,
    /// Requests to ignore before answering.
    pub drop_next: u32,
    pub requests: u64,
}

impl SimHost {
    pub fn new(script: &AgentScript, seed: u64, latency: f64) -> SimHost {
        SimHost {
            eval: Evaluator::new(&script.variables, seed),
            community: script.community.as_bytes().to_vec(),
            faults: script.faults.clone(),
            latency,
            drop_next: 0,
            requests: 0,
        }
    }
}

#[derive(Default)]
pub struct SimNetState {
    pub hosts: HashMap<SocketAddr, SimHost>,
    queue: BinaryHeap<Reverse<(i64, u64, SocketAddr, Vec<u8>)>>,
    seq: u64,
}

/// In-memory datagram network driven by a [`ManualClock`]: waiting in
/// `recv` advances the clock, so polling runs as fast as the CPU allows
/// and every timing is exact.
#[derive(Clone)]
pub struct SimNet {
    pub clock: Arc<ManualClock>,
    pub state: Arc<Mutex<SimNetState>>,
}

impl SimNet {
    pub fn new(clock: Arc<ManualClock>) -> SimNet {
        SimNet {
            clock,
            state: Arc::new(Mutex::new(SimNetState::default())),
        }
    }

    pub fn add(&self, addr: SocketAddr, host: SimHost) {
        self.state.lock().unwrap().hosts.insert(addr, host);
    }

    pub fn with_host<R>(&self, addr: SocketAddr, f: impl FnOnce(&mut SimHost) -> R) -> R {
        f(self
            .state
            .lock()
            .unwrap()
            .hosts
            .get_mut(&addr)
            .expect("known host"))
    }

    pub fn inject(&self, at: f64, from: SocketAddr, bytes: Vec<u8>) {
        let mut s = self.state.lock().unwrap();
        let seq = s.seq;
        s.seq += 1;
        s.queue
            .push(Reverse(((at * 1e6).round() as i64, seq, from, bytes)));
    }
}

impl Transport for SimNet {
    fn send_to(&mut self, buf: &[u8], addr: SocketAddr) -> io::Result<()> {
        let now = self.clock.now();
        let mut s = self.state.lock().unwrap();
        let Some(h) = s.hosts.get_mut(&addr) else {
            return Ok(());
        };
        h.requests += 1;
        if h.drop_next > 0 {
            h.drop_next -= 1;
            return Ok(());
        }
        if h.faults.silent {
            return Ok(());
        }
        let Ok(req) = decode_message(buf) else {
            return Ok(());
        };
        let Some(resp) = answer(&req, &h.community, &h.eval, &h.faults, now) else {
            return Ok(());
        };
        let at = ((now + h.latency) * 1e6).round() as i64;
        let bytes = resp.encode().expect("response fits");
        let seq = s.seq;
        s.seq += 1;
        s.queue.push(Reverse((at, seq, addr, bytes)));
        Ok(())
    }

    fn recv(
        &mut self,
        buf: &mut [u8],
        timeout: Duration,
    ) -> io::Result<Option<(usize, SocketAddr)>> {
        let now = self.clock.now();
        let limit = ((now + timeout.as_secs_f64()) * 1e6).round() as i64;
        let mut s = self.state.lock().unwrap();
        match s.queue.peek() {
            Some(Reverse((at, ..))) if *at <= limit => {
                let Reverse((at, _, from, bytes)) = s.queue.pop().unwrap();
                self.clock.set(at as f64 / 1e6);
                buf[..bytes.len()].copy_from_slice(&bytes);
                Ok(Some((bytes.len(), from)))
            }
            _ => {
                self.clock.set(limit as f64 / 1e6);
                Ok(None)
            }
        }
    }
}

/// Address of the `i`-th host on a [`SimNet`].
pub fn sim_addr(i: usize) -> SocketAddr {
    SocketAddr::from(([10, (i / 250) as u8, (i % 250) as u8, 1], 161))
}

/// A configuration with `n` hosts polling the variables of `script`,
/// addressed by [`sim_addr`].
pub fn sim_config(
    n: usize,
    script: &AgentScript,
    polldelay: u64,
    num_connections: usize,
    version: Version,
) -> String {
    let v = match version {
        Version::V1 => "1",
        Version::V2c => "2c",
    };
    let mut out = format!("<monitor pmc-num-connections=\"{num_connections}\">\n");
    for i in 0..n {
        out += &format!(
            "<host name=\"node{i:04}\" ip=\"{}\" polldelay=\"{polldelay}\" snmpversion=\"{v}\"><miblist>\n",
            sim_addr(i)
        );
        for var in &script.variables {
            out += &format!(
                "<mib id=\"{}\" name=\"{}\" type=\"{}\" community=\"{}\"/>\n",
                var.id,
                var.oid,
                var.kind().as_str(),
                script.community
            );
        }
        out += &format!(
            "</miblist><archives><rra granularity=\"{polldelay}\" expire=\"{}\"/></archives><graphs/></host>\n",
            polldelay * 100
        );
    }
    out + "</monitor>\n"
}

pub const FIG3_VALUES: [(&str, f64); 11] = [
    ("net2Out", 534717280.0),
    ("net1Out", 13811037.0),
    ("net2In", 1741169408.0),
    ("net1In", 13811037.0),
    ("availSwap", 530104.0),
    ("totalSwap", 530104.0),
    ("totalMem", 261724.0),
    ("cachedMem", 35376.0),
    ("bufferMem", 14600.0),
    ("sharedMem", 0.0),
    ("freeMem", 97824.0),
];

/// The single-host example document, with a closing `</hosts>` and the
/// microseconds of the epoch part zero-padded like the clock part.
pub const FIG3_DOCUMENT: &str = r#"<?xml version="1.0"?>
<hosts>
  <host name="bbr-farm002" tag="farm1,client" status="OK">
    <mibs>
      <mib id="net2Out" lastUpdated="1018016032">534717280.000000</mib>
      <mib id="net1Out" lastUpdated="1018016032">13811037.000000</mib>
      <mib id="net2In" lastUpdated="1018016032">1741169408.000000</mib>
      <mib id="net1In" lastUpdated="1018016032">13811037.000000</mib>
      <mib id="availSwap" lastUpdated="1018016032">530104.000000</mib>
      <mib id="totalSwap" lastUpdated="1018016032">530104.000000</mib>
      <mib id="totalMem" lastUpdated="1018016032">261724.000000</mib>
      <mib id="cachedMem" lastUpdated="1018016032">35376.000000</mib>
      <mib id="bufferMem" lastUpdated="1018016032">14600.000000</mib>
      <mib id="sharedMem" lastUpdated="1018016032">0.000000</mib>
      <mib id="freeMem" lastUpdated="1018016032">97824.000000</mib>
    </mibs>
    <graphs>
      <graph id="hourly.png" title="Hourly data"/>
    </graphs>
    <notifications>
      <msg ts="1017937775.090771 18:29:35.090771" severity="CRITICAL">Timeout</msg>
    </notifications>
  </host>
</hosts>
"#;

/// Configuration of the example host.
pub fn fig3_config() -> String {
    let mut mibs = String::new();
    for (i, (id, _)) in FIG3_VALUES.iter().enumerate() {
        mibs += &format!(
            "<mib id=\"{id}\" name=\".1.3.6.1.4.1.2021.99.{}.0\"/>",
            i + 1
        );
    }
    format!(
        r#"<monitor><host name="bbr-farm002" ip="127.0.0.1" polldelay="30" tag="farm1,client">
<miblist>{mibs}</miblist><archives><rra granularity="30" expire="3600"/></archives>
<graphs><rrdgraph id="hourly.png" title="Hourly data" seconds="-1h"><line>DEF:f=freeMem:AVERAGE</line><line>LINE2:f#00FF00:free</line></rrdgraph></graphs>
</host></monitor>"#
    )
}

/// Drives a status view through the example: one timed-out poll, then a
/// poll answering every variable. Returns the document rendered at UTC+2.
pub fn fig3_scenario() -> String {
    use clustermon::collector::{Outcome, PollResult, VarOutcome};
    use clustermon::status::{serialize_hosts, StatusView};

    let config = clustermon::config::parse_config(&fig3_config()).expect("example config");
    let view = StatusView::new(&config);
    let host = "bbr-farm002".to_string();
    view.apply_poll_result(
        &PollResult {
            host: host.clone(),
            time: 1017937775.090771,
            outcome: Outcome::Timeout,
            values: Vec::new(),
        },
        &[None; 11],
    )
    .expect("known host");
    let processed: Vec<Option<f64>> = FIG3_VALUES.iter().map(|(_, v)| Some(*v)).collect();
    view.apply_poll_result(
        &PollResult {
            host,
            time: 1018016032.25,
            outcome: Outcome::Responded,
            values: FIG3_VALUES
                .iter()
                .map(|(id, v)| (id.to_string(), VarOutcome::Ok(*v as u64)))
                .collect(),
        },
        &processed,
    )
    .expect("known host");
    let snap = view.snapshot();
    let cest = chrono::FixedOffset::east_opt(2 * 3600).unwrap();
    serialize_hosts(snap.hosts.iter().map(|h| &**h), &cest)
}

pub const IDENTITY_XSL: &str = r#"<?xml version="1.0"?>
<xsl:stylesheet version="1.0" xmlns:xsl="http://www.w3.org/1999/XSL/Transform">
  <xsl:output method="xml"/>
  <xsl:template match="@*|node()">
    <xsl:copy><xsl:apply-templates select="@*|node()"/></xsl:copy>
  </xsl:template>
</xsl:stylesheet>
"#;

const LXML_SHIM: &str = "import sys; from lxml import etree; \
t = etree.XSLT(etree.parse(sys.argv[1])); \
sys.stdout.buffer.write(bytes(t(etree.parse(sys.stdin.buffer))))";

fn runs(program: &str, args: &[&str]) -> bool {
    std::process::Command::new(program)
        .args(args)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

/// An installed XSLT processor command: xsltproc, or python3 with lxml.
pub fn xslt_processor() -> Option<String> {
    if runs("xsltproc", &["--version"]) {
        return Some(clustermon::http::DEFAULT_XSLT_PROCESSOR.to_string());
    }
    if runs("python3", &["-c", "import lxml.etree"]) {
        return Some(format!("python3 -c '{LXML_SHIM}' {{xsl}}"));
    }
    None
}

/// `(name, attributes, trimmed text)` for every element, in order.
pub fn xml_tree(xml: &str) -> Vec<(String, Vec<(String, String)>, String)> {
    let doc = roxmltree::Document::parse(xml).expect("well-formed XML");
    doc.root()
        .descendants()
        .filter(|n| n.is_element())
        .map(|n| {
            let attrs = n
                .attributes()
                .map(|a| (a.name().to_string(), a.value().to_string()))
                .collect();
            let text: String = n
                .children()
                .filter(|c| c.is_text())
                .filter_map(|c| c.text())
                .collect();
            (
                n.tag_name().name().to_string(),
                attrs,
                text.trim().to_string(),
            )
        })
        .collect()
}

pub const SECRET: &str = "TOPSECRET-0xfeed";

/// An HTTP context over a temporary tree:
/// `html/` (index.html, style.css, sub/index.html, link -> ../secret.txt),
/// `xsl/identity.xsl`, `secret.txt`, and host `localhost` with graphs
/// `cpu.png` and `cpu.svg` over four hours of data.
pub struct HttpFixture {
    pub dir: tempfile::TempDir,
    pub ctx: clustermon::http::HttpContext,
    pub now: f64,
}

pub fn http_fixture(filter: Option<&str>, xslt: Option<String>) -> HttpFixture {
    use clustermon::collector::{Outcome, PollResult, VarOutcome};
    use clustermon::http::HttpContext;
    use clustermon::rrd::{ArchiveReader, ArchiveStore, Rrd};
    use clustermon::status::{StatusReader, StatusView};

    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::create_dir_all(root.join("html/sub")).unwrap();
    std::fs::create_dir_all(root.join("xsl")).unwrap();
    std::fs::write(
        root.join("html/index.html"),
        "<html><body>cluster index</body></html>\n",
    )
    .unwrap();
    std::fs::write(root.join("html/style.css"), "body { color: black }\n").unwrap();
    std::fs::write(root.join("html/sub/index.html"), "<p>sub page</p>\n").unwrap();
    std::fs::write(root.join("secret.txt"), SECRET).unwrap();
    #[cfg(unix)]
    std::os::unix::fs::symlink(root.join("secret.txt"), root.join("html/link")).unwrap();
    std::fs::write(root.join("xsl/identity.xsl"), IDENTITY_XSL).unwrap();

    let filter_attrs = match filter {
        Some(cmd) => format!(r#" http-filter="{cmd}" http-filter-extensions=".html""#),
        None => String::new(),
    };
    let xml = format!(
        r#"<monitor http-html-dir="{html}" pmc-xslt-dir="{xsl}" pmc-rrd-dir="{rrd}"{filter_attrs}>
<host name="localhost" ip="127.0.0.1" polldelay="30" tag="farm1">
<miblist><mib id="cpu" name=".1.3.6.1.4.1.2021.10.1.5.1"/><mib id="mem" name=".1.3.6.1.4.1.2021.4.6.0"/></miblist>
<archives><rra granularity="30" expire="86400"/><rra cf="MAX" granularity="300" expire="86400"/></archives>
<graphs>
<rrdgraph id="cpu.png" title="CPU load"><line>DEF:c=cpu:AVERAGE</line><line>CDEF:p=c,100,/</line><line>AREA:p#00FF00:load</line></rrdgraph>
<rrdgraph id="cpu.svg" title="CPU load" width="300" height="100" seconds="-1h"><line>DEF:c=cpu:AVERAGE</line><line>LINE1:c#FF0000:load</line></rrdgraph>
</graphs></host></monitor>"#,
        html = root.join("html").display(),
        xsl = root.join("xsl").display(),
        rrd = root.join("rrd").display(),
    );
    let config = clustermon::config::parse_config(&xml).expect("fixture config");
    let now = 1_500_000_000.0;
    let host = &config.hosts[0];
    let mut rrd = Rrd::create(host.rrd_spec(), now - 4.0 * 3600.0).unwrap();
    let mut t = now - 4.0 * 3600.0 + 30.0;
    while t <= now {
        let x = (t / 600.0).sin() * 40.0 + 60.0;
        rrd.update(t, &[Some(x), Some(1000.0 + x)]).unwrap();
        t += 30.0;
    }
    let status = Arc::new(StatusView::new(&config));
    status
        .apply_poll_result(
            &PollResult {
                host: "localhost".into(),
                time: now,
                outcome: Outcome::Responded,
                values: vec![
                    ("cpu".into(), VarOutcome::Ok(42)),
                    ("mem".into(), VarOutcome::Ok(1042)),
                ],
            },
            &[Some(42.0), Some(1042.0)],
        )
        .unwrap();
    let archives = Arc::new(ArchiveStore::from_parts(vec![(
        "localhost".into(),
        config.rrd_path("localhost"),
        Some(rrd),
    )]));
    let ctx = HttpContext {
        config: Arc::new(config),
        status: StatusReader::new(status),
        archives: ArchiveReader::new(archives),
        clock: ManualClock::new(now),
        xslt_processor: xslt.unwrap_or_else(|| "false {xsl}".into()),
    };
    HttpFixture { dir, ctx, now }
}

/// Width and height from a PNG header.
pub fn png_size(bytes: &[u8]) -> Option<(u32, u32)> {
    if bytes.len() < 24 || &bytes[..8] != b"\x89PNG\r\n\x1a\n" || &bytes[12..16] != b"IHDR" {
        return None;
    }
    Some((
        u32::from_be_bytes(bytes[16..20].try_into().ok()?),
        u32::from_be_bytes(bytes[20..24].try_into().ok()?),
    ))
}
