//! Constant-size round-robin time-series database.
//!
//! One database holds every variable of a host. Samples are snapped to
//! `step`-wide bins (`floor(t / step)`); each bin yields one primary data
//! point (PDP) per variable, unknown when no sample landed in it. Archives
//! consolidate `granularity / step` PDPs into one row with AVERAGE, MIN,
//! MAX or LAST.
//!
//! `xff` is the minimum fraction of known PDPs a window needs for its row
//! to be known. This is the complement of the classic RRDtool meaning
//! (maximum unknown fraction). A window with no known PDP is unknown for
//! every consolidation function, even with `xff = 0`.
//!
//! A bin's PDP is committed when the first sample of a later bin arrives;
//! until then later samples in the same bin replace it.

mod archive;
mod file;
mod store;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use archive::Archive;

pub use file::{dump, from_bytes, load, save, serialized_len, to_bytes, FORMAT_VERSION, MAGIC};
pub use store::{ArchiveReader, ArchiveStore, StoreError};

/// Seconds since the epoch, possibly fractional.
pub type Timestamp = f64;

/// Upper bound on rows a single fetch may materialize.
pub const MAX_FETCH_ROWS: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cf {
    Average,
    Min,
    Max,
    Last,
}

impl Cf {
    pub const ALL: [Cf; 4] = [Cf::Average, Cf::Min, Cf::Max, Cf::Last];

    pub fn as_str(self) -> &'static str {
        match self {
            Cf::Average => "AVERAGE",
            Cf::Min => "MIN",
            Cf::Max => "MAX",
            Cf::Last => "LAST",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Cf> {
        Cf::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Cf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cf {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Cf::ALL
            .into_iter()
            .find(|cf| cf.as_str() == s)
            .ok_or_else(|| format!("unknown consolidation function `{s}`"))
    }
}

/// How raw SNMP readings turn into stored values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Gauge,
    Derive,
    Counter,
}

impl VarKind {
    pub const ALL: [VarKind; 3] = [VarKind::Gauge, VarKind::Derive, VarKind::Counter];

    pub fn as_str(self) -> &'static str {
        match self {
            VarKind::Gauge => "GAUGE",
            VarKind::Derive => "DERIVE",
            VarKind::Counter => "COUNTER",
        }
    }
}

impl FromStr for VarKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VarKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown variable type `{s}`"))
    }
}

/// One round-robin archive definition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RraSpec {
    pub cf: Cf,
    pub xff: f64,
    pub granularity: u64,
    pub expire: u64,
}

impl RraSpec {
    pub fn rows(&self) -> usize {
        self.expire.div_ceil(self.granularity.max(1)).max(1) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub id: String,
    pub kind: VarKind,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrdSpec {
    pub step: u64,
    pub variables: Vec<Variable>,
    pub archives: Vec<RraSpec>,
}

impl RrdSpec {
    pub fn validate(&self) -> Result<(), RrdError> {
        let bad = |m: String| Err(RrdError::BadSpec(m));
        if self.step == 0 {
            return bad("step must be positive".into());
        }
        if self.variables.len() > u16::MAX as usize {
            return bad("too many variables".into());
        }
        for (i, v) in self.variables.iter().enumerate() {
            if v.id.is_empty() || v.id.len() > u16::MAX as usize {
                return bad(format!("variable {i} has an invalid id"));
            }
            if self.variables[..i].iter().any(|o| o.id == v.id) {
                return bad(format!("duplicate variable id `{}`", v.id));
            }
        }
        for a in &self.archives {
            if a.granularity == 0 || a.granularity % self.step != 0 {
                return bad(format!(
                    "granularity {} is not a positive multiple of step {}",
                    a.granularity, self.step
                ));
            }
            if a.expire < a.granularity {
                return bad(format!(
                    "expire {} shorter than granularity {}",
                    a.expire, a.granularity
                ));
            }
            if !(0.0..=1.0).contains(&a.xff) {
                return bad(format!("xff {} outside [0,1]", a.xff));
            }
            if a.rows() > (1 << 32) {
                return bad(format!("archive with {} rows is too large", a.rows()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RrdError {
    #[error("bad database spec: {0}")]
    BadSpec(String),
    #[error("sample time {time} is not after last update {last_update}")]
    NonMonotonicTime {
        time: Timestamp,
        last_update: Timestamp,
    },
    #[error("expected {expected} values, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("no archive with consolidation function {0}")]
    NoSuchCf(Cf),
    #[error("fetch window is empty")]
    EmptyWindow,
    #[error("fetch would return {0} rows")]
    RangeTooLarge(i64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("corrupt database file: {0}")]
    CorruptFile(String),
}

/// A fetched or stored row. `time` is the end of the row's window.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub time: i64,
    pub values: Vec<Option<f64>>,
}

/// Rows from one archive.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub granularity: u64,
    pub rows: Vec<SeriesRow>,
}

/// Emitted whenever an update completes a consolidation window.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidationEvent {
    pub archive: usize,
    pub time: i64,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct Rrd {
    spec: RrdSpec,
    last_update: Timestamp,
    cur_bin: i64,
    /// PDP for `cur_bin`, not yet fed to the archives.
    pending: Vec<f64>,
    /// Most recent known PDP per variable and the start time of its bin.
    last_known: Vec<(f64, i64)>,
    archives: Vec<Archive>,
}

impl PartialEq for Rrd {
    fn eq(&self, o: &Rrd) -> bool {
        self.spec == o.spec
            && self.last_update.to_bits() == o.last_update.to_bits()
            && self.cur_bin == o.cur_bin
            && self.pending.len() == o.pending.len()
            && self
                .pending
                .iter()
                .zip(&o.pending)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.last_known.len() == o.last_known.len()
            && self
                .last_known
                .iter()
                .zip(&o.last_known)
                .all(|(a, b)| a.0.to_bits() == b.0.to_bits() && a.1 == b.1)
            && self.archives.len() == o.archives.len()
            && self
                .archives
                .iter()
                .zip(&o.archives)
                .all(|(a, b)| a.bits_eq(b))
    }
}

fn clean(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NAN
    }
}

impl Rrd {
    /// New database with every row unknown; `last_update` is `start`
    /// aligned down to the step.
    pub fn create(spec: RrdSpec, start: Timestamp) -> Result<Rrd, RrdError> {
        spec.validate()?;
        if !start.is_finite() {
            return Err(RrdError::BadSpec("start time is not finite".into()));
        }
        let step = spec.step as i64;
        let cur_bin = (start.floor() as i64).div_euclid(step);
        let aligned = cur_bin * step;
        let nvars = spec.variables.len();
        let archives = spec
            .archives
            .iter()
            .map(|a| Archive::new(*a, spec.step, nvars, aligned))
            .collect();
        Ok(Rrd {
            last_update: aligned as f64,
            cur_bin,
            pending: vec![f64::NAN; nvars],
            last_known: vec![(f64::NAN, 0); nvars],
            archives,
            spec,
        })
    }

    pub fn spec(&self) -> &RrdSpec {
        &self.spec
    }

    pub fn last_update(&self) -> Timestamp {
        self.last_update
    }

    pub fn step(&self) -> u64 {
        self.spec.step
    }

    pub fn var_index(&self, id: &str) -> Option<usize> {
        self.spec.variables.iter().position(|v| v.id == id)
    }

    /// Records one sample. Unknown values are `None`.
    pub fn update(
        &mut self,
        time: Timestamp,
        values: &[Option<f64>],
    ) -> Result<Vec<ConsolidationEvent>, RrdError> {
        let nvars = self.spec.variables.len();
        if values.len() != nvars {
            return Err(RrdError::WrongArity {
                expected: nvars,
                got: values.len(),
            });
        }
        if !time.is_finite() || time <= self.last_update {
            return Err(RrdError::NonMonotonicTime {
                time,
                last_update: self.last_update,
            });
        }
        let step = self.spec.step as i64;
        let bin = (time.floor() as i64).div_euclid(step);
        let mut events = Vec::new();
        if bin > self.cur_bin {
            let pending = std::mem::replace(&mut self.pending, vec![f64::NAN; nvars]);
            self.feed_known(self.cur_bin, &pending, &mut events);
            self.feed_unknown(self.cur_bin + 1, bin - self.cur_bin - 1, &mut events);
            self.cur_bin = bin;
        }
        for (i, v) in values.iter().enumerate() {
            let v = v.map(clean).unwrap_or(f64::NAN);
            self.pending[i] = v;
            if !v.is_nan() {
                self.last_known[i] = (v, bin * step);
            }
        }
        self.last_update = time;
        Ok(events)
    }

    fn feed_known(&mut self, bin: i64, values: &[f64], events: &mut Vec<ConsolidationEvent>) {
        let step = self.spec.step as i64;
        let end = (bin + 1) * step;
        for (idx, a) in self.archives.iter_mut().enumerate() {
            a.accumulate(values);
            if end.rem_euclid(a.granularity()) == 0 {
                let values = a.emit(end);
                events.push(ConsolidationEvent {
                    archive: idx,
                    time: end,
                    values,
                });
            }
        }
    }

    /// Feeds `count` unknown PDPs starting at bin `first`.
    fn feed_unknown(&mut self, first: i64, count: i64, events: &mut Vec<ConsolidationEvent>) {
        if count <= 0 {
            return;
        }
        let step = self.spec.step as i64;
        let stop = first + count;
        for (idx, a) in self.archives.iter_mut().enumerate() {
            let g = a.granularity();
            let per_row = a.pdps_per_row as i64;
            let mut bin = first;
            // close the window that is already open
            let window_end_bin = ((bin * step).div_euclid(g) + 1) * g / step;
            if window_end_bin > stop {
                continue;
            }
            if bin != window_end_bin - per_row || a.scratch.iter().any(|s| s.known > 0) {
                let values = a.emit(window_end_bin * step);
                events.push(ConsolidationEvent {
                    archive: idx,
                    time: window_end_bin * step,
                    values,
                });
                bin = window_end_bin;
            }
            // whole unknown windows; only the newest `rows` of them matter
            let whole = (stop - bin) / per_row;
            let skip = (whole - a.rows as i64).max(0);
            bin += skip * per_row;
            for _ in skip..whole {
                bin += per_row;
                a.emit_unknown(bin * step);
                events.push(ConsolidationEvent {
                    archive: idx,
                    time: bin * step,
                    values: vec![None; a.nvars],
                });
            }
        }
    }

    /// Latest known PDP per variable with the start time of its bin.
    pub fn last_values(&self) -> Vec<Option<(f64, i64)>> {
        self.last_known
            .iter()
            .map(|(v, t)| (!v.is_nan()).then_some((*v, *t)))
            .collect()
    }

    /// Every stored row of archive `index`, oldest first.
    pub fn archive_rows(&self, index: usize) -> Vec<SeriesRow> {
        let a = &self.archives[index];
        let g = a.granularity();
        (0..a.rows)
            .map(|back| {
                let back = a.rows - 1 - back;
                let slot = (a.head + a.rows - back) % a.rows;
                SeriesRow {
                    time: a.last_row_end - back as i64 * g,
                    values: (0..a.nvars).map(|v| a.value(slot, v)).collect(),
                }
            })
            .collect()
    }

    /// Picks the archive for `cf` with the finest granularity whose stored
    /// span reaches back to `start`; if none does, the one reaching
    /// furthest back.
    fn select_archive(&self, cf: Cf, start: i64) -> Result<usize, RrdError> {
        let mut candidates: Vec<usize> = (0..self.archives.len())
            .filter(|i| self.archives[*i].spec.cf == cf)
            .collect();
        if candidates.is_empty() {
            return Err(RrdError::NoSuchCf(cf));
        }
        candidates.sort_by_key(|i| (self.archives[*i].granularity(), *i));
        if let Some(i) = candidates
            .iter()
            .find(|i| self.archives[**i].oldest_start() <= start)
        {
            return Ok(*i);
        }
        Ok(*candidates
            .iter()
            .min_by_key(|i| {
                (
                    self.archives[**i].oldest_start(),
                    -self.archives[**i].granularity(),
                )
            })
            .expect("non-empty"))
    }

    /// Rows whose windows intersect `[start, end]`, oldest first. Windows
    /// outside the stored range or older than `expire` come back unknown.
    pub fn fetch(&self, cf: Cf, start: Timestamp, end: Timestamp) -> Result<Series, RrdError> {
        if !(start < end) {
            return Err(RrdError::EmptyWindow);
        }
        let start_s = start.floor() as i64;
        let end_s = end.ceil() as i64;
        let idx = self.select_archive(cf, start_s)?;
        let a = &self.archives[idx];
        let g = a.granularity();
        let first_start = start_s.div_euclid(g) * g;
        // windows [ws, ws+g) with ws < end and ws+g > start
        let count = (end_s - first_start + g - 1).div_euclid(g);
        if count > MAX_FETCH_ROWS {
            return Err(RrdError::RangeTooLarge(count));
        }
        let expired_before = self.last_update - a.spec.expire as f64;
        let mut rows = Vec::with_capacity(count.max(0) as usize);
        for k in 0..count {
            let time = first_start + (k + 1) * g;
            let values = match a.row_at(time) {
                Some(slot) if time as f64 >= expired_before => {
                    (0..a.nvars).map(|v| a.value(slot, v)).collect()
                }
                _ => vec![None; a.nvars],
            };
            rows.push(SeriesRow { time, values });
        }
        Ok(Series {
            granularity: g as u64,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(step: u64, archives: Vec<RraSpec>) -> RrdSpec {
        RrdSpec {
            step,
            variables: vec![Variable {
                id: "x".into(),
                kind: VarKind::Gauge,
                min: None,
                max: None,
            }],
            archives,
        }
    }

    fn rra(cf: Cf, xff: f64, granularity: u64, expire: u64) -> RraSpec {
        RraSpec {
            cf,
            xff,
            granularity,
            expire,
        }
    }

    #[test]
    fn create_sizes_rows() {
        let rrd = Rrd::create(spec(30, vec![rra(Cf::Average, 0.8, 60, 600)]), 1000.0).unwrap();
        let rows = rrd.archive_rows(0);
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.values[0].is_none()));
        assert_eq!(rrd.last_update(), 990.0);
    }

    #[test]
    fn granularity_must_be_multiple_of_step() {
        assert!(matches!(
            Rrd::create(spec(30, vec![rra(Cf::Average, 0.8, 45, 600)]), 0.0),
            Err(RrdError::BadSpec(_))
        ));
    }

    /// Feeds one PDP per bin for bins 3..6 (times 30, 40, 50) and then one
    /// sample in bin 6 to commit them.
    fn three_pdps(cf: Cf, xff: f64, pdps: [Option<f64>; 3]) -> Rrd {
        let mut rrd = Rrd::create(spec(10, vec![rra(cf, xff, 30, 300)]), 0.0).unwrap();
        for (i, v) in pdps.iter().enumerate() {
            rrd.update(30.0 + 10.0 * i as f64, &[*v]).unwrap();
        }
        rrd.update(61.0, &[None]).unwrap();
        rrd
    }

    #[test]
    fn average_of_three() {
        let rrd = three_pdps(Cf::Average, 0.8, [Some(1.0), Some(2.0), Some(3.0)]);
        let last = rrd.archive_rows(0).pop().unwrap();
        assert_eq!(last.time, 60);
        assert_eq!(last.values[0], Some(2.0));
        let fetched = rrd.fetch(Cf::Average, 30.0, 60.0).unwrap();
        assert_eq!(fetched.rows.len(), 1);
        assert_eq!(fetched.rows[0].values[0], Some(2.0));
    }

    #[test]
    fn xff_is_minimum_known_fraction() {
        let rrd = three_pdps(Cf::Average, 0.8, [Some(1.0), None, Some(3.0)]);
        assert_eq!(rrd.archive_rows(0).pop().unwrap().values[0], None);
        let rrd = three_pdps(Cf::Max, 0.5, [None, Some(2.0), Some(3.0)]);
        assert_eq!(rrd.archive_rows(0).pop().unwrap().values[0], Some(3.0));
    }

    #[test]
    fn all_unknown_window_is_unknown_even_with_zero_xff() {
        for cf in Cf::ALL {
            let rrd = three_pdps(cf, 0.0, [None, None, None]);
            assert_eq!(rrd.archive_rows(0).pop().unwrap().values[0], None, "{cf}");
        }
    }

    #[test]
    fn last_write_wins_within_bin() {
        let mut rrd = Rrd::create(spec(10, vec![rra(Cf::Last, 0.0, 10, 100)]), 0.0).unwrap();
        rrd.update(11.0, &[Some(1.0)]).unwrap();
        rrd.update(15.0, &[Some(5.0)]).unwrap();
        rrd.update(21.0, &[Some(7.0)]).unwrap();
        assert_eq!(rrd.archive_rows(0).pop().unwrap().values[0], Some(5.0));
    }

    #[test]
    fn non_monotonic_rejected_unchanged() {
        let mut rrd = Rrd::create(spec(10, vec![rra(Cf::Last, 0.0, 10, 100)]), 0.0).unwrap();
        rrd.update(11.0, &[Some(1.0)]).unwrap();
        let before = rrd.clone();
        assert!(matches!(
            rrd.update(11.0, &[Some(2.0)]),
            Err(RrdError::NonMonotonicTime { .. })
        ));
        assert!(rrd.update(5.0, &[Some(2.0)]).is_err());
        assert_eq!(rrd, before);
    }

    #[test]
    fn fetch_missing_cf() {
        let rrd = Rrd::create(spec(10, vec![rra(Cf::Average, 0.5, 10, 100)]), 0.0).unwrap();
        assert!(matches!(
            rrd.fetch(Cf::Min, 0.0, 10.0),
            Err(RrdError::NoSuchCf(Cf::Min))
        ));
    }

    #[test]
    fn fetch_picks_finest_covering_archive() {
        let s = spec(
            60,
            vec![
                rra(Cf::Average, 0.5, 60, 3600),
                rra(Cf::Average, 0.5, 3600, 86400),
            ],
        );
        let t0 = 1_000_000_000.0 - 86400.0;
        let mut rrd = Rrd::create(s, t0).unwrap();
        let mut t = t0 + 60.0;
        while t <= 1_000_000_000.0 {
            rrd.update(t, &[Some(t)]).unwrap();
            t += 60.0;
        }
        let now = rrd.last_update();
        let recent = rrd.fetch(Cf::Average, now - 1800.0, now).unwrap();
        assert_eq!(recent.granularity, 60);
        let day = rrd.fetch(Cf::Average, now - 6.0 * 3600.0, now).unwrap();
        assert_eq!(day.granularity, 3600);
    }

    #[test]
    fn last_values_keep_previous_known() {
        let mut rrd = Rrd::create(spec(10, vec![rra(Cf::Last, 0.0, 10, 100)]), 0.0).unwrap();
        assert_eq!(rrd.last_values(), vec![None]);
        rrd.update(12.0, &[Some(97824.0)]).unwrap();
        assert_eq!(rrd.last_values(), vec![Some((97824.0, 10))]);
        rrd.update(25.0, &[None]).unwrap();
        assert_eq!(rrd.last_values(), vec![Some((97824.0, 10))]);
    }

    #[test]
    fn long_gap_fast_forwards() {
        let mut rrd = Rrd::create(spec(10, vec![rra(Cf::Average, 0.0, 20, 100)]), 0.0).unwrap();
        rrd.update(5.0, &[Some(1.0)]).unwrap();
        rrd.update(1e9, &[Some(2.0)]).unwrap();
        let rows = rrd.archive_rows(0);
        assert_eq!(rows.last().unwrap().time, 1_000_000_000);
        assert!(rows.iter().all(|r| r.values[0].is_none()));
    }
}
