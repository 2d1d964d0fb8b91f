//! SNMP v1/v2c message codec: multi-varbind GetRequest encoding and
//! Response decoding over BER.

pub mod ber;
pub mod message;
pub mod mib;
pub mod oid;

pub use message::{
    decode_message, encode_get_request, ErrorStatus, PduType, SnmpMessage, Value, VarBind, Version,
    MAX_DATAGRAM,
};
pub use oid::{decode_oid, encode_oid, parse_oid, Oid};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnmpError {
    #[error("malformed message at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: &'static str },
    #[error("unsupported SNMP version {0}")]
    UnsupportedVersion(i64),
    #[error("encoded message is {0} bytes, larger than one UDP datagram")]
    TooLarge(usize),
    #[error("unknown MIB name `{0}`")]
    UnknownName(String),
    #[error("bad OID arc `{0}`")]
    BadArc(String),
    #[error("invalid OID: {0}")]
    InvalidOid(String),
    #[error("{0}")]
    Usage(&'static str),
}
