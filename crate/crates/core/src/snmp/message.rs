use super::ber::{self, Reader, Tlv};
use super::oid::Oid;
use super::SnmpError;

/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65507;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Version {
    V1,
    V2c,
}

impl Version {
    pub fn wire(self) -> i64 {
        match self {
            Version::V1 => 0,
            Version::V2c => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PduType {
    GetRequest,
    Response,
}

impl PduType {
    fn tag(self) -> u8 {
        match self {
            PduType::GetRequest => ber::TAG_GET_REQUEST,
            PduType::Response => ber::TAG_RESPONSE,
        }
    }
}

/// SNMP error-status codes (RFC 1157 for 0..=5, RFC 3416 beyond).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorStatus {
    NoError = 0,
    TooBig = 1,
    NoSuchName = 2,
    BadValue = 3,
    ReadOnly = 4,
    GenErr = 5,
    NoAccess = 6,
    WrongType = 7,
    WrongLength = 8,
    WrongEncoding = 9,
    WrongValue = 10,
    NoCreation = 11,
    InconsistentValue = 12,
    ResourceUnavailable = 13,
    CommitFailed = 14,
    UndoFailed = 15,
    AuthorizationError = 16,
    NotWritable = 17,
    InconsistentName = 18,
}

impl ErrorStatus {
    const ALL: [ErrorStatus; 19] = [
        ErrorStatus::NoError,
        ErrorStatus::TooBig,
        ErrorStatus::NoSuchName,
        ErrorStatus::BadValue,
        ErrorStatus::ReadOnly,
        ErrorStatus::GenErr,
        ErrorStatus::NoAccess,
        ErrorStatus::WrongType,
        ErrorStatus::WrongLength,
        ErrorStatus::WrongEncoding,
        ErrorStatus::WrongValue,
        ErrorStatus::NoCreation,
        ErrorStatus::InconsistentValue,
        ErrorStatus::ResourceUnavailable,
        ErrorStatus::CommitFailed,
        ErrorStatus::UndoFailed,
        ErrorStatus::AuthorizationError,
        ErrorStatus::NotWritable,
        ErrorStatus::InconsistentName,
    ];

    pub fn from_code(code: i64) -> Option<Self> {
        usize::try_from(code)
            .ok()
            .and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorStatus::NoError => "noError",
            ErrorStatus::TooBig => "tooBig",
            ErrorStatus::NoSuchName => "noSuchName",
            ErrorStatus::BadValue => "badValue",
            ErrorStatus::ReadOnly => "readOnly",
            ErrorStatus::GenErr => "genErr",
            ErrorStatus::NoAccess => "noAccess",
            ErrorStatus::WrongType => "wrongType",
            ErrorStatus::WrongLength => "wrongLength",
            ErrorStatus::WrongEncoding => "wrongEncoding",
            ErrorStatus::WrongValue => "wrongValue",
            ErrorStatus::NoCreation => "noCreation",
            ErrorStatus::InconsistentValue => "inconsistentValue",
            ErrorStatus::ResourceUnavailable => "resourceUnavailable",
            ErrorStatus::CommitFailed => "commitFailed",
            ErrorStatus::UndoFailed => "undoFailed",
            ErrorStatus::AuthorizationError => "authorizationError",
            ErrorStatus::NotWritable => "notWritable",
            ErrorStatus::InconsistentName => "inconsistentName",
        }
    }
}

/// A variable-binding value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Integer(i32),
    OctetString(Vec<u8>),
    Null,
    ObjectId(Oid),
    Counter32(u32),
    Gauge32(u32),
    TimeTicks(u32),
    Counter64(u64),
    NoSuchObject,
    NoSuchInstance,
    EndOfMibView,
    /// Any other tag, kept verbatim.
    Other {
        tag: u8,
        content: Vec<u8>,
    },
}

impl Value {
    pub fn is_exception(&self) -> bool {
        matches!(
            self,
            Value::NoSuchObject | Value::NoSuchInstance | Value::EndOfMibView
        )
    }

    /// Numeric view of counter-like and integer values. Negative integers
    /// and non-numeric syntaxes give `None`.
    pub fn as_unsigned(&self) -> Option<u64> {
        match self {
            Value::Integer(v) => u64::try_from(*v).ok(),
            Value::Counter32(v) | Value::Gauge32(v) | Value::TimeTicks(v) => Some(*v as u64),
            Value::Counter64(v) => Some(*v),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Integer(_) => "INTEGER",
            Value::OctetString(_) => "OCTET STRING",
            Value::Null => "NULL",
            Value::ObjectId(_) => "OBJECT IDENTIFIER",
            Value::Counter32(_) => "Counter32",
            Value::Gauge32(_) => "Gauge32",
            Value::TimeTicks(_) => "TimeTicks",
            Value::Counter64(_) => "Counter64",
            Value::NoSuchObject => "noSuchObject",
            Value::NoSuchInstance => "noSuchInstance",
            Value::EndOfMibView => "endOfMibView",
            Value::Other { .. } => "opaque",
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            Value::Integer(v) => ber::write_signed(out, ber::TAG_INTEGER, *v as i64),
            Value::OctetString(b) => ber::write_tlv(out, ber::TAG_OCTET_STRING, b),
            Value::Null => ber::write_tlv(out, ber::TAG_NULL, &[]),
            Value::ObjectId(oid) => ber::write_tlv(out, ber::TAG_OID, &oid.content()),
            Value::Counter32(v) => ber::write_unsigned(out, ber::TAG_COUNTER32, *v as u64),
            Value::Gauge32(v) => ber::write_unsigned(out, ber::TAG_GAUGE32, *v as u64),
            Value::TimeTicks(v) => ber::write_unsigned(out, ber::TAG_TIMETICKS, *v as u64),
            Value::Counter64(v) => ber::write_unsigned(out, ber::TAG_COUNTER64, *v),
            Value::NoSuchObject => ber::write_tlv(out, ber::TAG_NO_SUCH_OBJECT, &[]),
            Value::NoSuchInstance => ber::write_tlv(out, ber::TAG_NO_SUCH_INSTANCE, &[]),
            Value::EndOfMibView => ber::write_tlv(out, ber::TAG_END_OF_MIB_VIEW, &[]),
            Value::Other { tag, content } => ber::write_tlv(out, *tag, content),
        }
    }

    fn decode(tlv: &Tlv<'_>) -> Result<Value, SnmpError> {
        let empty = |v: Value| {
            if tlv.content.is_empty() {
                Ok(v)
            } else {
                Err(SnmpError::Malformed {
                    offset: tlv.offset,
                    reason: "non-empty NULL-like value",
                })
            }
        };
        Ok(match tlv.tag {
            ber::TAG_INTEGER => {
                let v = ber::decode_signed(tlv)?;
                Value::Integer(i32::try_from(v).map_err(|_| SnmpError::Malformed {
                    offset: tlv.offset,
                    reason: "INTEGER out of 32-bit range",
                })?)
            }
            ber::TAG_OCTET_STRING => Value::OctetString(tlv.content.to_vec()),
            ber::TAG_NULL => empty(Value::Null)?,
            ber::TAG_OID => Value::ObjectId(Oid::from_tlv(tlv)?),
            ber::TAG_COUNTER32 => Value::Counter32(ber::decode_unsigned(tlv, 32)? as u32),
            ber::TAG_GAUGE32 => Value::Gauge32(ber::decode_unsigned(tlv, 32)? as u32),
            ber::TAG_TIMETICKS => Value::TimeTicks(ber::decode_unsigned(tlv, 32)? as u32),
            ber::TAG_COUNTER64 => Value::Counter64(ber::decode_unsigned(tlv, 64)?),
            ber::TAG_NO_SUCH_OBJECT => empty(Value::NoSuchObject)?,
            ber::TAG_NO_SUCH_INSTANCE => empty(Value::NoSuchInstance)?,
            ber::TAG_END_OF_MIB_VIEW => empty(Value::EndOfMibView)?,
            tag => Value::Other {
                tag,
                content: tlv.content.to_vec(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBind {
    pub oid: Oid,
    pub value: Value,
}

impl VarBind {
    pub fn null(oid: Oid) -> Self {
        VarBind {
            oid,
            value: Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnmpMessage {
    pub version: Version,
    pub community: Vec<u8>,
    pub pdu_type: PduType,
    pub request_id: i32,
    pub error_status: ErrorStatus,
    pub error_index: u32,
    pub varbinds: Vec<VarBind>,
}

impl SnmpMessage {
    pub fn get_request(
        version: Version,
        community: &[u8],
        request_id: i32,
        oids: impl IntoIterator<Item = Oid>,
    ) -> Self {
        SnmpMessage {
            version,
            community: community.to_vec(),
            pdu_type: PduType::GetRequest,
            request_id,
            error_status: ErrorStatus::NoError,
            error_index: 0,
            varbinds: oids.into_iter().map(VarBind::null).collect(),
        }
    }

    /// Builds the Response to `self` carrying `varbinds`.
    pub fn response(
        &self,
        error_status: ErrorStatus,
        error_index: u32,
        varbinds: Vec<VarBind>,
    ) -> Self {
        SnmpMessage {
            version: self.version,
            community: self.community.clone(),
            pdu_type: PduType::Response,
            request_id: self.request_id,
            error_status,
            error_index,
            varbinds,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, SnmpError> {
        if self.error_index as usize > self.varbinds.len() {
            return Err(SnmpError::Usage("error_index beyond varbind list"));
        }
        let mut list = Vec::with_capacity(self.varbinds.len() * 24);
        let mut vb = Vec::with_capacity(64);
        for bind in &self.varbinds {
            vb.clear();
            ber::write_tlv(&mut vb, ber::TAG_OID, &bind.oid.content());
            bind.value.encode(&mut vb);
            ber::write_tlv(&mut list, ber::TAG_SEQUENCE, &vb);
        }
        let mut pdu = Vec::with_capacity(list.len() + 24);
        ber::write_signed(&mut pdu, ber::TAG_INTEGER, self.request_id as i64);
        ber::write_signed(&mut pdu, ber::TAG_INTEGER, self.error_status as i64);
        ber::write_signed(&mut pdu, ber::TAG_INTEGER, self.error_index as i64);
        ber::write_tlv(&mut pdu, ber::TAG_SEQUENCE, &list);

        let mut msg = Vec::with_capacity(pdu.len() + self.community.len() + 16);
        ber::write_signed(&mut msg, ber::TAG_INTEGER, self.version.wire());
        ber::write_tlv(&mut msg, ber::TAG_OCTET_STRING, &self.community);
        ber::write_tlv(&mut msg, self.pdu_type.tag(), &pdu);

        let mut out = Vec::with_capacity(msg.len() + 6);
        ber::write_tlv(&mut out, ber::TAG_SEQUENCE, &msg);
        if out.len() > MAX_DATAGRAM {
            return Err(SnmpError::TooLarge(out.len()));
        }
        Ok(out)
    }
}

/// Encodes a GetRequest asking for every OID in one datagram.
pub fn encode_get_request(
    version: Version,
    community: &[u8],
    request_id: i32,
    oids: &[Oid],
) -> Result<Vec<u8>, SnmpError> {
    if oids.is_empty() {
        return Err(SnmpError::Usage("GetRequest needs at least one OID"));
    }
    if community.is_empty() {
        return Err(SnmpError::Usage("community must not be empty"));
    }
    SnmpMessage::get_request(version, community, request_id, oids.iter().cloned()).encode()
}

fn trailing(r: &Reader<'_>) -> Result<(), SnmpError> {
    if r.is_empty() {
        Ok(())
    } else {
        Err(SnmpError::Malformed {
            offset: r.offset(),
            reason: "trailing bytes",
        })
    }
}

pub fn decode_message(bytes: &[u8]) -> Result<SnmpMessage, SnmpError> {
    let mut outer = Reader::new(bytes);
    let seq = outer.expect(ber::TAG_SEQUENCE, "expected message SEQUENCE")?;
    trailing(&outer)?;
    let mut r = Reader::nested(&seq);

    let vtlv = r.expect(ber::TAG_INTEGER, "expected version INTEGER")?;
    let version = match ber::decode_signed(&vtlv)? {
        0 => Version::V1,
        1 => Version::V2c,
        other => return Err(SnmpError::UnsupportedVersion(other)),
    };
    let community = r
        .expect(ber::TAG_OCTET_STRING, "expected community OCTET STRING")?
        .content
        .to_vec();

    let pdu_at = r.offset();
    let pdu = r.read_tlv()?;
    let pdu_type = match pdu.tag {
        ber::TAG_GET_REQUEST => PduType::GetRequest,
        ber::TAG_RESPONSE => PduType::Response,
        _ => {
            return Err(SnmpError::Malformed {
                offset: pdu_at,
                reason: "unsupported PDU type",
            })
        }
    };
    trailing(&r)?;

    let mut p = Reader::nested(&pdu);
    let rid = p.expect(ber::TAG_INTEGER, "expected request-id")?;
    let request_id =
        i32::try_from(ber::decode_signed(&rid)?).map_err(|_| SnmpError::Malformed {
            offset: rid.offset,
            reason: "request-id out of range",
        })?;
    let es = p.expect(ber::TAG_INTEGER, "expected error-status")?;
    let error_status =
        ErrorStatus::from_code(ber::decode_signed(&es)?).ok_or(SnmpError::Malformed {
            offset: es.offset,
            reason: "undefined error-status",
        })?;
    let ei = p.expect(ber::TAG_INTEGER, "expected error-index")?;
    let error_index =
        u32::try_from(ber::decode_signed(&ei)?).map_err(|_| SnmpError::Malformed {
            offset: ei.offset,
            reason: "negative error-index",
        })?;
    let list = p.expect(ber::TAG_SEQUENCE, "expected varbind list")?;
    trailing(&p)?;

    let mut l = Reader::nested(&list);
    let mut varbinds = Vec::new();
    while !l.is_empty() {
        let vb = l.expect(ber::TAG_SEQUENCE, "expected VarBind SEQUENCE")?;
        let mut v = Reader::nested(&vb);
        let oid_tlv = v.expect(ber::TAG_OID, "expected VarBind name")?;
        let oid = Oid::from_tlv(&oid_tlv).and_then(|o| {
            Oid::new(o.arcs().to_vec()).map_err(|_| SnmpError::Malformed {
                offset: oid_tlv.offset,
                reason: "invalid OBJECT IDENTIFIER",
            })
        })?;
        let value_tlv = v.read_tlv()?;
        let value = Value::decode(&value_tlv)?;
        trailing(&v)?;
        if value.is_exception() && version == Version::V1 {
            return Err(SnmpError::Malformed {
                offset: value_tlv.offset,
                reason: "exception value in SNMPv1 message",
            });
        }
        varbinds.push(VarBind { oid, value });
    }
    if error_index as usize > varbinds.len() {
        return Err(SnmpError::Malformed {
            offset: ei.offset,
            reason: "error-index beyond varbind list",
        });
    }

    Ok(SnmpMessage {
        version,
        community,
        pdu_type,
        request_id,
        error_status,
        error_index,
        varbinds,
    })
}
