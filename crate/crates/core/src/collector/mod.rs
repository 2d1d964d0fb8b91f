//! SNMP polling: scheduling under the connection cap, request/response
//! matching, retries, and GAUGE/COUNTER/DERIVE conversion.

mod engine;
mod process;
mod transport;

use std::fmt;

pub use engine::{
    poll_host, Collector, CollectorError, CollectorOptions, CollectorStats, Event, Observer,
};
pub use process::{counter_delta, process_value, VarState};
pub use transport::{Clock, SystemClock, Transport};

use crate::snmp::ErrorStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Responded,
    Timeout,
}

/// Why a single variable has no value in an otherwise answered poll.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarError {
    NoSuchObject,
    NoSuchInstance,
    EndOfMibView,
    /// The agent flagged this variable (or the whole request) with a
    /// non-zero error-status.
    Status(ErrorStatus),
    /// The value's syntax is not numeric, or is a negative INTEGER.
    BadType(&'static str),
    /// Missing from the response or answered with a different OID.
    Missing,
    /// This variable's community got no answer while another did.
    NoResponse,
}

impl fmt::Display for VarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarError::NoSuchObject => f.write_str("noSuchObject"),
            VarError::NoSuchInstance => f.write_str("noSuchInstance"),
            VarError::EndOfMibView => f.write_str("endOfMibView"),
            VarError::Status(s) => f.write_str(s.name()),
            VarError::BadType(t) => write!(f, "BadType ({t})"),
            VarError::Missing => f.write_str("missing from response"),
            VarError::NoResponse => f.write_str("Timeout"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarOutcome {
    Ok(u64),
    Err(VarError),
}

/// One poll of one host. `values` follows the host's mib order and is
/// empty on timeout.
#[derive(Debug, Clone, PartialEq)]
pub struct PollResult {
    pub host: String,
    /// When the request went out.
    pub time: f64,
    pub outcome: Outcome,
    pub values: Vec<(String, VarOutcome)>,
}
