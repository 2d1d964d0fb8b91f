use std::fmt;
use std::str::FromStr;

use super::ber::{self, Tlv};
use super::SnmpError;

/// An OBJECT IDENTIFIER: at least two arcs, first arc in 0..=2, second arc
/// below 40 unless the first is 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Oid(Vec<u32>);

impl Oid {
    pub fn new(arcs: Vec<u32>) -> Result<Self, SnmpError> {
        if arcs.len() < 2 {
            return Err(SnmpError::InvalidOid("fewer than two arcs".into()));
        }
        if arcs[0] > 2 {
            return Err(SnmpError::InvalidOid(format!("first arc {} > 2", arcs[0])));
        }
        if arcs[0] < 2 && arcs[1] >= 40 {
            return Err(SnmpError::InvalidOid(format!(
                "second arc {} >= 40 under arc {}",
                arcs[1], arcs[0]
            )));
        }
        Ok(Oid(arcs))
    }

    pub fn arcs(&self) -> &[u32] {
        &self.0
    }

    pub fn starts_with(&self, prefix: &Oid) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Returns a new OID with `suffix` appended.
    pub fn child(&self, suffix: &[u32]) -> Oid {
        let mut arcs = self.0.clone();
        arcs.extend_from_slice(suffix);
        Oid(arcs)
    }

    /// Content octets of the BER encoding (no tag/length).
    pub fn content(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.0.len() + 4);
        let first = self.0[0] as u64 * 40 + self.0[1] as u64;
        push_base128(&mut out, first);
        for arc in &self.0[2..] {
            push_base128(&mut out, *arc as u64);
        }
        out
    }

    pub(crate) fn from_tlv(tlv: &Tlv<'_>) -> Result<Oid, SnmpError> {
        decode_oid_content(tlv.content).map_err(|reason| SnmpError::Malformed {
            offset: tlv.offset,
            reason,
        })
    }
}

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for arc in &self.0 {
            write!(f, ".{arc}")?;
        }
        Ok(())
    }
}

impl FromStr for Oid {
    type Err = SnmpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_oid(s)
    }
}

fn push_base128(out: &mut Vec<u8>, mut value: u64) {
    let mut tmp = [0u8; 10];
    let mut n = 0;
    loop {
        tmp[n] = (value & 0x7F) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let cont = if i > 0 { 0x80 } else { 0 };
        out.push(tmp[i] | cont);
    }
}

/// Full OBJECT IDENTIFIER TLV.
pub fn encode_oid(oid: &Oid) -> Vec<u8> {
    let content = oid.content();
    let mut out = Vec::with_capacity(content.len() + 2);
    ber::write_tlv(&mut out, ber::TAG_OID, &content);
    out
}

/// Decodes a full OBJECT IDENTIFIER TLV.
pub fn decode_oid(bytes: &[u8]) -> Result<Oid, SnmpError> {
    let mut r = ber::Reader::new(bytes);
    let tlv = r.expect(ber::TAG_OID, "expected OBJECT IDENTIFIER")?;
    if !r.is_empty() {
        return Err(SnmpError::Malformed {
            offset: r.offset(),
            reason: "trailing bytes after OBJECT IDENTIFIER",
        });
    }
    Oid::from_tlv(&tlv)
}

fn decode_oid_content(content: &[u8]) -> Result<Oid, &'static str> {
    if content.is_empty() {
        return Err("empty OBJECT IDENTIFIER");
    }
    let mut subids = Vec::with_capacity(content.len() + 1);
    let mut acc: u64 = 0;
    let mut in_progress = false;
    for (i, b) in content.iter().enumerate() {
        if !in_progress && *b == 0x80 {
            return Err("non-minimal sub-identifier");
        }
        acc = (acc << 7) | (*b & 0x7F) as u64;
        // first sub-identifier carries two arcs, so it may exceed 32 bits
        let limit = if subids.is_empty() {
            u32::MAX as u64 + 80
        } else {
            u32::MAX as u64
        };
        if acc > limit {
            return Err("sub-identifier overflow");
        }
        if *b & 0x80 != 0 {
            in_progress = true;
            if i == content.len() - 1 {
                return Err("truncated sub-identifier");
            }
        } else {
            subids.push(acc);
            acc = 0;
            in_progress = false;
        }
    }
    let first = subids[0];
    let mut arcs = Vec::with_capacity(subids.len() + 1);
    if first < 40 {
        arcs.extend([0, first as u32]);
    } else if first < 80 {
        arcs.extend([1, (first - 40) as u32]);
    } else {
        arcs.extend([2, (first - 80) as u32]);
    }
    arcs.extend(subids[1..].iter().map(|v| *v as u32));
    Ok(Oid(arcs))
}

/// Parses dotted-decimal (`.1.3.6.1.2.1.1.3.0`) or symbolic
/// (`system.sysUpTime.0`, `UCD-SNMP-MIB::memAvailReal.0`) notation.
///
/// Symbolic segments resolve through a compiled-in table. Each symbolic
/// segment must name a descendant of what precedes it; numeric segments
/// append arcs.
pub fn parse_oid(text: &str) -> Result<Oid, SnmpError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SnmpError::BadArc(String::new()));
    }
    let text = match text.split_once("::") {
        Some((_module, rest)) => rest,
        None => text,
    };
    let body = text.strip_prefix('.').unwrap_or(text);
    let mut arcs: Vec<u32> = Vec::new();
    for seg in body.split('.') {
        if seg.is_empty() {
            return Err(SnmpError::BadArc(text.to_string()));
        }
        if seg.as_bytes()[0].is_ascii_digit() {
            let arc: u32 = seg
                .parse()
                .map_err(|_| SnmpError::BadArc(seg.to_string()))?;
            arcs.push(arc);
            continue;
        }
        let resolved =
            super::mib::lookup(seg).ok_or_else(|| SnmpError::UnknownName(seg.to_string()))?;
        if !resolved.starts_with(&arcs) {
            return Err(SnmpError::UnknownName(format!(
                "{seg} is not below {}",
                Oid(arcs.clone())
            )));
        }
        arcs = resolved.to_vec();
    }
    Oid::new(arcs)
}
