//! The subset of ASN.1 BER used by SNMP v1/v2c: single-octet tags,
//! definite lengths, INTEGER, OCTET STRING, NULL, OBJECT IDENTIFIER,
//! SEQUENCE and the SMI application types.

use super::SnmpError;

pub const TAG_INTEGER: u8 = 0x02;
pub const TAG_OCTET_STRING: u8 = 0x04;
pub const TAG_NULL: u8 = 0x05;
pub const TAG_OID: u8 = 0x06;
pub const TAG_SEQUENCE: u8 = 0x30;

pub const TAG_IP_ADDRESS: u8 = 0x40;
pub const TAG_COUNTER32: u8 = 0x41;
pub const TAG_GAUGE32: u8 = 0x42;
pub const TAG_TIMETICKS: u8 = 0x43;
pub const TAG_OPAQUE: u8 = 0x44;
pub const TAG_COUNTER64: u8 = 0x46;

pub const TAG_NO_SUCH_OBJECT: u8 = 0x80;
pub const TAG_NO_SUCH_INSTANCE: u8 = 0x81;
pub const TAG_END_OF_MIB_VIEW: u8 = 0x82;

pub const TAG_GET_REQUEST: u8 = 0xA0;
pub const TAG_RESPONSE: u8 = 0xA2;

/// Appends a definite-form length.
pub fn write_length(out: &mut Vec<u8>, len: usize) {
    if len < 0x80 {
        out.push(len as u8);
        return;
    }
    let bytes = (len as u64).to_be_bytes();
    let skip = bytes.iter().take_while(|b| **b == 0).count();
    out.push(0x80 | (8 - skip) as u8);
    out.extend_from_slice(&bytes[skip..]);
}

/// Number of octets `write_length` produces for `len`.
pub fn length_len(len: usize) -> usize {
    if len < 0x80 {
        1
    } else {
        1 + (8 - (len as u64).leading_zeros() as usize / 8)
    }
}

pub fn write_tlv(out: &mut Vec<u8>, tag: u8, content: &[u8]) {
    out.push(tag);
    write_length(out, content.len());
    out.extend_from_slice(content);
}

/// Minimal two's-complement content octets.
pub fn signed_content(value: i64) -> Vec<u8> {
    let bytes = value.to_be_bytes();
    let mut start = 0;
    while start < 7 {
        let b = bytes[start];
        let next_high = bytes[start + 1] & 0x80;
        if (b == 0x00 && next_high == 0) || (b == 0xFF && next_high != 0) {
            start += 1;
        } else {
            break;
        }
    }
    bytes[start..].to_vec()
}

/// Minimal content octets for a non-negative value, with a leading zero
/// when the top bit would otherwise read as a sign.
pub fn unsigned_content(value: u64) -> Vec<u8> {
    let bytes = value.to_be_bytes();
    let skip = bytes.iter().take_while(|b| **b == 0).count().min(7);
    let mut out = Vec::with_capacity(9 - skip);
    if bytes[skip] & 0x80 != 0 {
        out.push(0);
    }
    out.extend_from_slice(&bytes[skip..]);
    out
}

pub fn write_signed(out: &mut Vec<u8>, tag: u8, value: i64) {
    write_tlv(out, tag, &signed_content(value));
}

pub fn write_unsigned(out: &mut Vec<u8>, tag: u8, value: u64) {
    write_tlv(out, tag, &unsigned_content(value));
}

/// One decoded TLV: tag, content octets, and the absolute offset of the tag.
#[derive(Debug, Clone, Copy)]
pub struct Tlv<'a> {
    pub tag: u8,
    pub content: &'a [u8],
    pub offset: usize,
    pub content_offset: usize,
}

/// Cursor over a byte slice. Offsets reported in errors are absolute
/// positions in the original datagram.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader {
            buf,
            pos: 0,
            base: 0,
        }
    }

    pub fn nested(tlv: &Tlv<'a>) -> Self {
        Reader {
            buf: tlv.content,
            pos: 0,
            base: tlv.content_offset,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    pub fn offset(&self) -> usize {
        self.base + self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn malformed(&self, at: usize, reason: &'static str) -> SnmpError {
        SnmpError::Malformed {
            offset: self.base + at,
            reason,
        }
    }

    pub fn read_tlv(&mut self) -> Result<Tlv<'a>, SnmpError> {
        let start = self.pos;
        let tag = *self
            .buf
            .get(self.pos)
            .ok_or_else(|| self.malformed(start, "truncated tag"))?;
        if tag & 0x1F == 0x1F {
            return Err(self.malformed(start, "multi-octet tags are not supported"));
        }
        self.pos += 1;
        let first = *self
            .buf
            .get(self.pos)
            .ok_or_else(|| self.malformed(self.pos, "truncated length"))?;
        self.pos += 1;
        let len = if first < 0x80 {
            first as usize
        } else if first == 0x80 {
            return Err(self.malformed(self.pos - 1, "indefinite length"));
        } else {
            let n = (first & 0x7F) as usize;
            if n > 4 {
                return Err(self.malformed(self.pos - 1, "length field too wide"));
            }
            if self.remaining() < n {
                return Err(self.malformed(self.pos, "truncated length"));
            }
            let mut len = 0usize;
            for b in &self.buf[self.pos..self.pos + n] {
                len = (len << 8) | *b as usize;
            }
            self.pos += n;
            len
        };
        if len > self.remaining() {
            return Err(self.malformed(self.pos, "length exceeds remaining input"));
        }
        let content_offset = self.base + self.pos;
        let content = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(Tlv {
            tag,
            content,
            offset: self.base + start,
            content_offset,
        })
    }

    pub fn expect(&mut self, tag: u8, what: &'static str) -> Result<Tlv<'a>, SnmpError> {
        let at = self.pos;
        let tlv = self.read_tlv()?;
        if tlv.tag != tag {
            return Err(self.malformed(at, what));
        }
        Ok(tlv)
    }
}

pub fn decode_signed(tlv: &Tlv<'_>) -> Result<i64, SnmpError> {
    let c = tlv.content;
    if c.is_empty() || c.len() > 8 {
        return Err(SnmpError::Malformed {
            offset: tlv.offset,
            reason: "bad INTEGER length",
        });
    }
    let mut v: i64 = if c[0] & 0x80 != 0 { -1 } else { 0 };
    for b in c {
        v = (v << 8) | *b as i64;
    }
    Ok(v)
}

/// Decodes an unsigned application integer that must fit `bits`.
pub fn decode_unsigned(tlv: &Tlv<'_>, bits: u32) -> Result<u64, SnmpError> {
    let bad = |reason| SnmpError::Malformed {
        offset: tlv.offset,
        reason,
    };
    let c = tlv.content;
    if c.is_empty() {
        return Err(bad("empty integer"));
    }
    // a leading 0x00 is allowed to clear the sign bit
    let digits = if c[0] == 0 && c.len() > 1 { &c[1..] } else { c };
    if digits.len() > 8 {
        return Err(bad("integer too wide"));
    }
    if c[0] & 0x80 != 0 {
        return Err(bad("negative unsigned integer"));
    }
    let mut v: u64 = 0;
    for b in digits {
        v = (v << 8) | *b as u64;
    }
    if bits < 64 && v >> bits != 0 {
        return Err(bad("integer out of range"));
    }
    Ok(v)
}
