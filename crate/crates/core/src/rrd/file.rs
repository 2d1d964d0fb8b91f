//! On-disk layout, all little-endian:
//!
//! ```text
//! "RRDB"  u32 version
//! u64 step  u32 nvars  { u16 id_len, id, u8 kind, f64 min, f64 max }*
//! u32 narchives  { u8 cf, f64 xff, u64 granularity, u64 expire, u64 rows }*
//! f64 last_update  i64 cur_bin  f64 pending[nvars]  { f64 value, i64 bin_time }[nvars]
//! per archive: i64 last_row_end  u64 head
//!              { u64 known, f64 sum, f64 min, f64 max, f64 last }[nvars]
//!              f64 rows[rows * nvars]
//! u32 crc32 of everything above
//! ```
//!
//! Unknown is NaN; absent min/max are NaN. The length depends only on the
//! spec.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::archive::{Archive, ChunkedValues, Scratch};
use super::{Cf, RraSpec, Rrd, RrdError, RrdSpec, VarKind, Variable};

pub const MAGIC: &[u8; 4] = b"RRDB";
pub const FORMAT_VERSION: u32 = 1;

/// File length for a database built from `spec`.
pub fn serialized_len(spec: &RrdSpec) -> u64 {
    let n = spec.variables.len() as u64;
    let mut len = 4 + 4 + 8 + 4;
    len += spec
        .variables
        .iter()
        .map(|v| 2 + v.id.len() as u64 + 1 + 16)
        .sum::<u64>();
    len += 4 + spec.archives.len() as u64 * (1 + 8 + 8 + 8 + 8);
    len += 8 + 8 + n * 8 + n * 16;
    for a in &spec.archives {
        len += 16 + n * 40 + a.rows() as u64 * n * 8;
    }
    len + 4
}

struct CrcWriter<W: Write> {
    inner: W,
    hasher: crc32fast::Hasher,
}

impl<W: Write> CrcWriter<W> {
    fn put(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)
    }
    fn u8(&mut self, v: u8) -> io::Result<()> {
        self.put(&[v])
    }
    fn u16(&mut self, v: u16) -> io::Result<()> {
        self.put(&v.to_le_bytes())
    }
    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.put(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> io::Result<()> {
        self.put(&v.to_le_bytes())
    }
    fn i64(&mut self, v: i64) -> io::Result<()> {
        self.put(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> io::Result<()> {
        self.put(&v.to_le_bytes())
    }
}

fn write_rrd<W: Write>(rrd: &Rrd, inner: W) -> io::Result<W> {
    let mut w = CrcWriter {
        inner,
        hasher: crc32fast::Hasher::new(),
    };
    w.put(MAGIC)?;
    w.u32(FORMAT_VERSION)?;
    let spec = &rrd.spec;
    w.u64(spec.step)?;
    w.u32(spec.variables.len() as u32)?;
    for v in &spec.variables {
        w.u16(v.id.len() as u16)?;
        w.put(v.id.as_bytes())?;
        w.u8(v.kind as u8)?;
        w.f64(v.min.unwrap_or(f64::NAN))?;
        w.f64(v.max.unwrap_or(f64::NAN))?;
    }
    w.u32(spec.archives.len() as u32)?;
    for a in &spec.archives {
        w.u8(a.cf.code())?;
        w.f64(a.xff)?;
        w.u64(a.granularity)?;
        w.u64(a.expire)?;
        w.u64(a.rows() as u64)?;
    }
    w.f64(rrd.last_update)?;
    w.i64(rrd.cur_bin)?;
    for v in &rrd.pending {
        w.f64(*v)?;
    }
    for (v, t) in &rrd.last_known {
        w.f64(*v)?;
        w.i64(*t)?;
    }
    for a in &rrd.archives {
        w.i64(a.last_row_end)?;
        w.u64(a.head as u64)?;
        for s in &a.scratch {
            w.u64(s.known)?;
            w.f64(s.sum)?;
            w.f64(s.min)?;
            w.f64(s.max)?;
            w.f64(s.last)?;
        }
        let mut buf = Vec::with_capacity(8 * 1024);
        for v in a.data.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
            if buf.len() >= 8 * 1024 {
                w.put(&buf)?;
                buf.clear();
            }
        }
        w.put(&buf)?;
    }
    let crc = w.hasher.finalize();
    w.inner.write_all(&crc.to_le_bytes())?;
    Ok(w.inner)
}

/// Writes `rrd` to `path` through a temporary sibling file and a rename,
/// so readers see either the old or the new file.
pub fn save(rrd: &Rrd, path: &Path) -> Result<(), RrdError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> io::Result<()> {
        let file = File::create(&tmp)?;
        let file = write_rrd(rrd, BufWriter::with_capacity(1 << 16, file))?
            .into_inner()
            .map_err(|e| e.into_error())?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(RrdError::from)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RrdError> {
        if self.buf.len() - self.pos < n {
            return Err(corrupt("unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn arr<const N: usize>(&mut self) -> Result<[u8; N], RrdError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8, RrdError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, RrdError> {
        Ok(u16::from_le_bytes(self.arr()?))
    }
    fn u32(&mut self) -> Result<u32, RrdError> {
        Ok(u32::from_le_bytes(self.arr()?))
    }
    fn u64(&mut self) -> Result<u64, RrdError> {
        Ok(u64::from_le_bytes(self.arr()?))
    }
    fn i64(&mut self) -> Result<i64, RrdError> {
        Ok(i64::from_le_bytes(self.arr()?))
    }
    fn f64(&mut self) -> Result<f64, RrdError> {
        Ok(f64::from_le_bytes(self.arr()?))
    }
}

fn corrupt(msg: impl Into<String>) -> RrdError {
    RrdError::CorruptFile(msg.into())
}

fn opt(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

/// Parses a database image, verifying magic, version and checksum.
pub fn from_bytes(bytes: &[u8]) -> Result<Rrd, RrdError> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let (payload, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(payload) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
        return Err(corrupt("checksum mismatch"));
    }
    let mut c = Cursor {
        buf: payload,
        pos: 4,
    };
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }
    let step = c.u64()?;
    let nvars = c.u32()? as usize;
    let mut variables = Vec::with_capacity(nvars.min(payload.len()));
    for _ in 0..nvars {
        let len = c.u16()? as usize;
        let id = String::from_utf8(c.take(len)?.to_vec()).map_err(|_| corrupt("bad id"))?;
        let kind = *VarKind::ALL
            .get(c.u8()? as usize)
            .ok_or_else(|| corrupt("bad variable kind"))?;
        let min = opt(c.f64()?);
        let max = opt(c.f64()?);
        variables.push(Variable { id, kind, min, max });
    }
    let narch = c.u32()? as usize;
    let mut archives = Vec::with_capacity(narch.min(payload.len()));
    let mut rows = Vec::with_capacity(narch.min(payload.len()));
    for _ in 0..narch {
        let cf = Cf::from_code(c.u8()?).ok_or_else(|| corrupt("bad consolidation function"))?;
        let spec = RraSpec {
            cf,
            xff: c.f64()?,
            granularity: c.u64()?,
            expire: c.u64()?,
        };
        rows.push(c.u64()?);
        archives.push(spec);
    }
    let spec = RrdSpec {
        step,
        variables,
        archives,
    };
    spec.validate().map_err(|e| corrupt(e.to_string()))?;
    if spec
        .archives
        .iter()
        .zip(&rows)
        .any(|(a, r)| a.rows() as u64 != *r)
    {
        return Err(corrupt("row count does not match archive spec"));
    }
    if serialized_len(&spec) != bytes.len() as u64 {
        return Err(corrupt("file length does not match spec"));
    }

    let last_update = c.f64()?;
    let cur_bin = c.i64()?;
    let pending = (0..nvars).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?;
    let last_known = (0..nvars)
        .map(|_| Ok((c.f64()?, c.i64()?)))
        .collect::<Result<Vec<_>, RrdError>>()?;
    let mut built = Vec::with_capacity(spec.archives.len());
    for a in &spec.archives {
        let mut archive = Archive::new(*a, step, nvars, 0);
        archive.last_row_end = c.i64()?;
        let head = c.u64()?;
        if head >= archive.rows as u64 {
            return Err(corrupt("archive head out of range"));
        }
        archive.head = head as usize;
        for s in archive.scratch.iter_mut() {
            *s = Scratch {
                known: c.u64()?,
                sum: c.f64()?,
                min: c.f64()?,
                max: c.f64()?,
                last: c.f64()?,
            };
        }
        let mut data = ChunkedValues::new(archive.rows * nvars);
        let raw = c.take(archive.rows * nvars * 8)?;
        for (i, chunk) in raw.chunks_exact(8).enumerate() {
            data.set(i, f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
        archive.data = data;
        built.push(archive);
    }
    Ok(Rrd {
        spec,
        last_update,
        cur_bin,
        pending,
        last_known,
        archives: built,
    })
}

pub fn to_bytes(rrd: &Rrd) -> Vec<u8> {
    write_rrd(rrd, Vec::with_capacity(serialized_len(&rrd.spec) as usize))
        .expect("Vec writes cannot fail")
}

pub fn load(path: &Path) -> Result<Rrd, RrdError> {
    from_bytes(&fs::read(path)?)
}

/// Human-readable listing of a database: header, then every archive row.
pub fn dump(rrd: &Rrd, out: &mut dyn Write) -> io::Result<()> {
    let spec = &rrd.spec;
    writeln!(out, "step: {}", spec.step)?;
    writeln!(out, "last_update: {}", rrd.last_update)?;
    let ids: Vec<&str> = spec.variables.iter().map(|v| v.id.as_str()).collect();
    writeln!(out, "variables: {}", ids.join(" "))?;
    for (i, a) in spec.archives.iter().enumerate() {
        writeln!(
            out,
            "archive {i}: cf={} xff={} granularity={} expire={} rows={}",
            a.cf,
            a.xff,
            a.granularity,
            a.expire,
            a.rows()
        )?;
        for row in rrd.archive_rows(i) {
            write!(out, "{}:", row.time)?;
            for v in &row.values {
                match v {
                    Some(v) => write!(out, " {v:.6}")?,
                    None => write!(out, " U")?,
                }
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
