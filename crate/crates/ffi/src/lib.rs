//! C interface to the configuration loader, round-robin archives and the
//! SNMP codec. Every object crosses the boundary as an opaque pointer and
//! every fallible call returns a `CmStatus`; `cm_last_error` describes the
//! most recent failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use clustermon::collector::counter_delta;
use clustermon::config::{load_config, MonitorConfig};
use clustermon::rrd::{self, Cf, Rrd, RrdError};
use clustermon::snmp::{decode_message, encode_get_request, parse_oid, SnmpMessage, Value, Version};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Archive = 4,
    Codec = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    NotNumeric = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmCf {
    Average = 0,
    Min = 1,
    Max = 2,
    Last = 3,
}

impl From<CmCf> for Cf {
    fn from(c: CmCf) -> Cf {
        match c {
            CmCf::Average => Cf::Average,
            CmCf::Min => Cf::Min,
            CmCf::Max => Cf::Max,
            CmCf::Last => Cf::Last,
        }
    }
}

/// Opaque parsed configuration.
pub struct CmConfig(MonitorConfig);
/// Opaque round-robin database.
pub struct CmRrd(Rrd);
/// Opaque decoded SNMP message.
pub struct CmMessage(SnmpMessage);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(CmStatus, String);

impl Failure {
    fn new(status: CmStatus, message: impl ToString) -> Failure {
        Failure(status, message.to_string())
    }
}

impl From<RrdError> for Failure {
    fn from(e: RrdError) -> Failure {
        Failure::new(CmStatus::Archive, e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CmStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (CmStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(_) => (CmStatus::Panic, "internal panic".to_string()),
    };
    LAST_ERROR.with(|l| *l.borrow_mut() = message);
    status
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(CmStatus::NullArgument, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CmStatus::InvalidUtf8, "string is not UTF-8"))
}

unsafe fn obj<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(CmStatus::NullArgument, "null handle"))
}

fn non_null<T>(p: *mut T) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(CmStatus::NullArgument, "null output pointer"))
    } else {
        Ok(())
    }
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns its full length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cm_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|l| {
        let msg = l.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads and validates a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_config_load(path: *const c_char, out: *mut *mut CmConfig) -> CmStatus {
    guard(|| {
        non_null(out)?;
        let path = text(path)?;
        let c = load_config(Path::new(path)).map_err(|e| Failure::new(CmStatus::Config, e))?;
        *out = Box::into_raw(Box::new(CmConfig(c)));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from `cm_config_load`.
#[no_mangle]
pub unsafe extern "C" fn cm_config_host_count(config: *const CmConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.hosts.len())
}

/// # Safety
/// `config` must be null or a handle from `cm_config_load`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_config_free(config: *mut CmConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Creates an empty database laid out for host `host_index` of `config`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_create_for_host(
    config: *const CmConfig,
    host_index: usize,
    start: f64,
    out: *mut *mut CmRrd,
) -> CmStatus {
    guard(|| {
        non_null(out)?;
        let c = obj(config)?;
        let h = c
            .0
            .hosts
            .get(host_index)
            .ok_or_else(|| Failure::new(CmStatus::OutOfRange, "no such host"))?;
        let r = Rrd::create(h.rrd_spec(), start)?;
        *out = Box::into_raw(Box::new(CmRrd(r)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_load(path: *const c_char, out: *mut *mut CmRrd) -> CmStatus {
    guard(|| {
        non_null(out)?;
        let r = rrd::load(Path::new(text(path)?))?;
        *out = Box::into_raw(Box::new(CmRrd(r)));
        Ok(())
    })
}

/// Writes the database atomically.
///
/// # Safety
/// `db` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_save(db: *const CmRrd, path: *const c_char) -> CmStatus {
    guard(|| {
        let r = obj(db)?;
        rrd::save(&r.0, Path::new(text(path)?))?;
        Ok(())
    })
}

/// # Safety
/// `db` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_var_count(db: *const CmRrd) -> usize {
    db.as_ref().map_or(0, |r| r.0.spec().variables.len())
}

/// # Safety
/// `db` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_last_update(db: *const CmRrd) -> f64 {
    db.as_ref().map_or(f64::NAN, |r| r.0.last_update())
}

/// Records one sample of `n` values; NaN marks a value as unknown.
///
/// # Safety
/// `db` must be a live handle; `values` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_update(db: *mut CmRrd, time: f64, values: *const f64, n: usize) -> CmStatus {
    guard(|| {
        non_null(db)?;
        if values.is_null() && n > 0 {
            return Err(Failure::new(CmStatus::NullArgument, "null values"));
        }
        let vals: Vec<Option<f64>> = (0..n)
            .map(|i| Some(*values.add(i)).filter(|v| !v.is_nan()))
            .collect();
        (*db).0.update(time, &vals)?;
        Ok(())
    })
}

/// Fetches variable `var` between `start` and `end` from the finest
/// archive with consolidation `cf`. Up to `cap` values go to `out`
/// (NaN for unknown); `*rows` receives the full row count, `*first` the
/// end time of the first row and `*step` the row spacing. Returns
/// `BufferTooSmall` when `cap < *rows`.
///
/// # Safety
/// `db` must be a live handle; `out` must have room for `cap` doubles;
/// `rows`, `first` and `step` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_fetch(
    db: *const CmRrd,
    cf: CmCf,
    start: i64,
    end: i64,
    var: usize,
    out: *mut f64,
    cap: usize,
    rows: *mut usize,
    first: *mut i64,
    step: *mut u64,
) -> CmStatus {
    guard(|| {
        let r = obj(db)?;
        non_null(rows)?;
        non_null(first)?;
        non_null(step)?;
        if var >= r.0.spec().variables.len() {
            return Err(Failure::new(CmStatus::OutOfRange, "no such variable"));
        }
        let s = r.0.fetch(cf.into(), start as f64, end as f64)?;
        *rows = s.rows.len();
        *first = s.rows.first().map_or(0, |row| row.time);
        *step = s.granularity;
        if cap < s.rows.len() {
            return Err(Failure::new(CmStatus::BufferTooSmall, "output buffer too small"));
        }
        if !s.rows.is_empty() {
            non_null(out)?;
        }
        for (i, row) in s.rows.iter().enumerate() {
            *out.add(i) = row.values[var].unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// # Safety
/// `db` must be null or a live handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_rrd_free(db: *mut CmRrd) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Encodes a GetRequest for `n` dotted OIDs into `buf`. `version` is 1 or
/// 2 (for v2c). `*len` receives the encoded size, also when the buffer
/// is too small.
///
/// # Safety
/// `community` and each of the `n` entries of `oids` must be
/// NUL-terminated strings; `buf` must have room for `cap` bytes; `len`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_snmp_encode_get(
    version: u32,
    community: *const c_char,
    request_id: i32,
    oids: *const *const c_char,
    n: usize,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> CmStatus {
    guard(|| {
        non_null(len)?;
        let version = match version {
            1 => Version::V1,
            2 => Version::V2c,
            _ => return Err(Failure::new(CmStatus::OutOfRange, "version must be 1 or 2")),
        };
        if oids.is_null() && n > 0 {
            return Err(Failure::new(CmStatus::NullArgument, "null OID list"));
        }
        let parsed = (0..n)
            .map(|i| parse_oid(text(*oids.add(i))?).map_err(|e| Failure::new(CmStatus::Codec, e)))
            .collect::<Result<Vec<_>, _>>()?;
        let bytes = encode_get_request(version, text(community)?.as_bytes(), request_id, &parsed)
            .map_err(|e| Failure::new(CmStatus::Codec, e))?;
        *len = bytes.len();
        if cap < bytes.len() {
            return Err(Failure::new(CmStatus::BufferTooSmall, "output buffer too small"));
        }
        non_null(buf)?;
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// # Safety
/// `buf` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_snmp_decode(buf: *const u8, len: usize, out: *mut *mut CmMessage) -> CmStatus {
    guard(|| {
        non_null(out)?;
        if buf.is_null() {
            return Err(Failure::new(CmStatus::NullArgument, "null buffer"));
        }
        let m = decode_message(std::slice::from_raw_parts(buf, len)).map_err(|e| Failure::new(CmStatus::Codec, e))?;
        *out = Box::into_raw(Box::new(CmMessage(m)));
        Ok(())
    })
}

/// # Safety
/// `msg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_message_request_id(msg: *const CmMessage) -> i32 {
    msg.as_ref().map_or(0, |m| m.0.request_id)
}

/// # Safety
/// `msg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_message_error_status(msg: *const CmMessage) -> i32 {
    msg.as_ref().map_or(-1, |m| m.0.error_status as i32)
}

/// # Safety
/// `msg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_message_varbind_count(msg: *const CmMessage) -> usize {
    msg.as_ref().map_or(0, |m| m.0.varbinds.len())
}

/// Numeric value of varbind `i`. Strings, OIDs, exceptions and negative
/// integers give `NotNumeric`.
///
/// # Safety
/// `msg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_message_varbind_u64(msg: *const CmMessage, i: usize, out: *mut u64) -> CmStatus {
    guard(|| {
        non_null(out)?;
        let m = obj(msg)?;
        let vb = m
            .0
            .varbinds
            .get(i)
            .ok_or_else(|| Failure::new(CmStatus::OutOfRange, "no such varbind"))?;
        match &vb.value {
            v @ (Value::NoSuchObject | Value::NoSuchInstance | Value::EndOfMibView) => {
                Err(Failure::new(CmStatus::NotNumeric, v.type_name()))
            }
            v => {
                *out = v
                    .as_unsigned()
                    .ok_or_else(|| Failure::new(CmStatus::NotNumeric, v.type_name()))?;
                Ok(())
            }
        }
    })
}

/// # Safety
/// `msg` must be null or a live handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_message_free(msg: *mut CmMessage) {
    if !msg.is_null() {
        drop(Box::from_raw(msg));
    }
}

/// Increase of a counter from `prev` to `raw`, assuming at most one wrap
/// (at 2^32 when `prev` fits in 32 bits, else at 2^64).
#[no_mangle]
pub extern "C" fn cm_counter_delta(prev: u64, raw: u64) -> f64 {
    counter_delta(prev, raw)
}
