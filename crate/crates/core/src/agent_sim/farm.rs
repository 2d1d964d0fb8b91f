use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentScript, Generator, SimError, SimVar, Syntax};
use crate::rrd::{Cf, RraSpec};
use crate::snmp::{Oid, Version};
use crate::xml::escape_attr;

/// Many agents sharing one script, each with its own derived seed.
pub struct Farm {
    pub agents: Vec<Agent>,
    pub script: AgentScript,
}

pub fn spawn_farm(n: usize, template: &AgentScript, seed: u64) -> Result<Farm, SimError> {
    if n == 0 {
        return Err(SimError::EmptyFarm);
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut script = template.clone();
    script.port = 0;
    let agents = (0..n)
        .map(|_| Agent::start(&script, seeds.gen()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Farm { agents, script })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentOptions {
    /// Hosts are named `<prefix><index>`, index zero-padded to 4 digits.
    pub name_prefix: String,
    pub polldelay: u64,
    pub version: Version,
    pub rras: Vec<RraSpec>,
}

impl Default for FragmentOptions {
    /// 30 s polling with AVERAGE and MAX kept at one minute for a week,
    /// one hour for a month and one day for a year.
    fn default() -> Self {
        let mut rras = Vec::new();
        for cf in [Cf::Average, Cf::Max] {
            for (granularity, expire) in [
                (60, 7 * 86_400),
                (3_600, 31 * 86_400),
                (86_400, 365 * 86_400),
            ] {
                rras.push(RraSpec {
                    cf,
                    xff: 0.8,
                    granularity,
                    expire,
                });
            }
        }
        FragmentOptions {
            name_prefix: "node".into(),
            polldelay: 30,
            version: Version::V2c,
            rras,
        }
    }
}

impl Farm {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn host_name(opts: &FragmentOptions, i: usize) -> String {
        format!("{}{:04}", opts.name_prefix, i)
    }

    /// `<host>` elements for every agent, in farm order.
    pub fn config_fragment(&self, opts: &FragmentOptions) -> String {
        let mut out = String::new();
        let version = match opts.version {
            Version::V1 => "1",
            Version::V2c => "2c",
        };
        let community = escape_attr(&self.script.community);
        for (i, a) in self.agents.iter().enumerate() {
            let _ = writeln!(
                out,
                "  <host name=\"{}\" ip=\"{}\" polldelay=\"{}\" snmpversion=\"{version}\">",
                Self::host_name(opts, i),
                a.local_addr(),
                opts.polldelay
            );
            out.push_str("    <miblist>\n");
            for v in &self.script.variables {
                let _ = writeln!(
                    out,
                    "      <mib id=\"{}\" name=\"{}\" type=\"{}\" community=\"{community}\"/>",
                    escape_attr(&v.id),
                    v.oid,
                    v.kind().as_str()
                );
            }
            out.push_str("    </miblist>\n    <archives>\n");
            for r in &opts.rras {
                let _ = writeln!(
                    out,
                    "      <rra cf=\"{}\" xff=\"{}\" granularity=\"{}\" expire=\"{}\"/>",
                    r.cf.as_str(),
                    r.xff,
                    r.granularity,
                    r.expire
                );
            }
            out.push_str("    </archives>\n    <graphs/>\n  </host>\n");
        }
        out
    }

    /// A complete configuration. `monitor_attrs` go on the root element
    /// verbatim (already escaped).
    pub fn config_document(
        &self,
        opts: &FragmentOptions,
        monitor_attrs: &[(&str, String)],
    ) -> String {
        let mut out = String::from("<?xml version=\"1.0\"?>\n<monitor");
        for (k, v) in monitor_attrs {
            let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
        }
        out.push_str(">\n");
        out.push_str(&self.config_fragment(opts));
        out.push_str("</monitor>\n");
        out
    }
}

fn oid(arcs: &[u32]) -> Oid {
    Oid::new(arcs.to_vec()).expect("valid template OID")
}

/// Output line `line` of a string-indexed agent extension, the way
/// site-specific scripts are exported (`nsExtendOutLine."<name>".<line>`).
pub fn extension_oid(name: &str, line: u32) -> Oid {
    let mut arcs = vec![1, 3, 6, 1, 4, 1, 8072, 1, 3, 2, 4, 1, 2, name.len() as u32];
    arcs.extend(name.bytes().map(u32::from));
    arcs.push(line);
    oid(&arcs)
}

fn ucd(tail: &[u32]) -> Oid {
    let mut arcs = vec![1, 3, 6, 1, 4, 1, 2021];
    arcs.extend_from_slice(tail);
    oid(&arcs)
}

/// The 25 stored quantities of a farm node: board and CPU temperatures,
/// memory, disk I/O, network traffic, file-system space and load
/// averages. Sensors, disk I/O and network counters come from agent
/// extensions.
pub fn table1_template(community: &str) -> AgentScript {
    let sine = |mean, amplitude, period| Generator::Sine {
        mean,
        amplitude,
        period,
    };
    let c32 = |rate| Generator::Counter { rate, width: 32 };
    let sensors = "lm-sensors-temperature-celsius";
    let disk = "proc-stat-disk-io-blocks-counters";
    let net = "proc-net-dev-eth0-octet-counters";
    let vars = vec![
        SimVar::new(
            "tempMBoard",
            extension_oid(sensors, 1),
            sine(38.0, 2.0, 1800.0),
        ),
        SimVar::new(
            "tempCpu1",
            extension_oid(sensors, 2),
            sine(52.0, 6.0, 600.0),
        ),
        SimVar::new(
            "tempCpu2",
            extension_oid(sensors, 3),
            sine(50.0, 6.0, 600.0),
        ),
        SimVar::new(
            "memFree",
            ucd(&[4, 11, 0]),
            sine(262_144.0, 65_536.0, 3600.0),
        ),
        SimVar::new("memShared", ucd(&[4, 13, 0]), Generator::Constant(12_288.0)),
        SimVar::new(
            "memBuffer",
            ucd(&[4, 14, 0]),
            sine(65_536.0, 8_192.0, 7200.0),
        ),
        SimVar::new(
            "memCached",
            ucd(&[4, 15, 0]),
            sine(393_216.0, 32_768.0, 5400.0),
        ),
        SimVar::new(
            "memTotal",
            ucd(&[4, 5, 0]),
            Generator::Constant(1_048_576.0),
        ),
        SimVar::new(
            "swapTotal",
            ucd(&[4, 3, 0]),
            Generator::Constant(2_097_152.0),
        ),
        SimVar::new(
            "swapAvail",
            ucd(&[4, 4, 0]),
            sine(2_000_000.0, 40_000.0, 7200.0),
        ),
        SimVar::new("diskRead", extension_oid(disk, 1), c32(900.0)),
        SimVar::new("diskWritten", extension_oid(disk, 2), c32(400.0)),
        SimVar::new("disk1Read", extension_oid(disk, 3), c32(500.0)),
        SimVar::new("disk1Written", extension_oid(disk, 4), c32(250.0)),
        SimVar::new("netIn", extension_oid(net, 1), c32(120_000.0)),
        SimVar::new("netOut", extension_oid(net, 2), c32(45_000.0)),
        SimVar::new("tmpUsed", ucd(&[9, 1, 8, 1]), Generator::Ramp(0.5)),
        SimVar::new(
            "tmpAvail",
            ucd(&[9, 1, 7, 1]),
            Generator::Constant(1_800_000.0),
        ),
        SimVar::new("varUsed", ucd(&[9, 1, 8, 2]), Generator::Ramp(0.2)),
        SimVar::new(
            "varAvail",
            ucd(&[9, 1, 7, 2]),
            Generator::Constant(3_600_000.0),
        ),
        SimVar::new(
            "usrUsed",
            ucd(&[9, 1, 8, 3]),
            Generator::Constant(4_200_000.0),
        ),
        SimVar::new(
            "usrAvail",
            ucd(&[9, 1, 7, 3]),
            Generator::Constant(5_300_000.0),
        ),
        SimVar::new("load1", ucd(&[10, 1, 5, 1]), sine(120.0, 80.0, 900.0))
            .with_syntax(Syntax::Integer),
        SimVar::new("load5", ucd(&[10, 1, 5, 2]), sine(110.0, 50.0, 1800.0))
            .with_syntax(Syntax::Integer),
        SimVar::new("load15", ucd(&[10, 1, 5, 3]), sine(100.0, 30.0, 3600.0))
            .with_syntax(Syntax::Integer),
    ];
    AgentScript::new(community, vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent_sim::Evaluator;
    use crate::snmp::{encode_get_request, SnmpMessage, VarBind};

    #[test]
    fn template_datagram_sizes() {
        let s = table1_template("public");
        assert_eq!(s.variables.len(), 25);
        let oids: Vec<Oid> = s.variables.iter().map(|v| v.oid.clone()).collect();
        let req = encode_get_request(Version::V2c, b"public", 123_456, &oids).unwrap();
        assert!(
            (600..=1000).contains(&req.len()),
            "request {} bytes",
            req.len()
        );

        let eval = Evaluator::new(&s.variables, 1);
        let msg = SnmpMessage::get_request(Version::V2c, b"public", 123_456, oids.clone());
        let vbs = oids
            .iter()
            .enumerate()
            .map(|(i, o)| VarBind {
                oid: o.clone(),
                value: eval.value(i, 1000.0),
            })
            .collect();
        let resp = msg
            .response(crate::snmp::ErrorStatus::NoError, 0, vbs)
            .encode()
            .unwrap();
        assert!(
            (700..=1400).contains(&resp.len()),
            "response {} bytes",
            resp.len()
        );
    }

    #[test]
    fn extension_oid_layout() {
        assert_eq!(
            extension_oid("ab", 3).to_string(),
            ".1.3.6.1.4.1.8072.1.3.2.4.1.2.2.97.98.3"
        );
    }
}
