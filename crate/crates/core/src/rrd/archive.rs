use std::sync::Arc;

use super::{Cf, RraSpec};

/// Values per storage chunk. Snapshots share chunks; the writer copies a
/// chunk only when it touches one still held by a reader.
const CHUNK: usize = 4096;

/// Dense `f64` store split into reference-counted chunks. NaN marks unknown.
#[derive(Debug, Clone)]
pub(crate) struct ChunkedValues {
    len: usize,
    chunks: Vec<Arc<Vec<f64>>>,
}

impl ChunkedValues {
    pub fn new(len: usize) -> Self {
        let mut chunks = Vec::with_capacity(len.div_ceil(CHUNK));
        let mut left = len;
        while left > 0 {
            let n = left.min(CHUNK);
            chunks.push(Arc::new(vec![f64::NAN; n]));
            left -= n;
        }
        ChunkedValues { len, chunks }
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.chunks[i / CHUNK][i % CHUNK]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        Arc::make_mut(&mut self.chunks[i / CHUNK])[i % CHUNK] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.chunks.iter().flat_map(|c| c.iter().copied())
    }

    pub fn bits_eq(&self, other: &Self) -> bool {
        self.len == other.len
            && self
                .iter()
                .zip(other.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Accumulator for one variable over the current consolidation window.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scratch {
    pub known: u64,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
    pub last: f64,
}

impl Scratch {
    pub const EMPTY: Scratch = Scratch {
        known: 0,
        sum: 0.0,
        min: f64::NAN,
        max: f64::NAN,
        last: f64::NAN,
    };

    fn add(&mut self, v: f64) {
        if self.known == 0 {
            self.min = v;
            self.max = v;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
        self.known += 1;
        self.sum += v;
        self.last = v;
    }

    fn consolidate(&self, cf: Cf, xff: f64, pdps_per_row: u64) -> f64 {
        if self.known == 0 || (self.known as f64 / pdps_per_row as f64) < xff {
            return f64::NAN;
        }
        match cf {
            Cf::Average => self.sum / self.known as f64,
            Cf::Min => self.min,
            Cf::Max => self.max,
            Cf::Last => self.last,
        }
    }

    pub fn bits_eq(&self, o: &Scratch) -> bool {
        self.known == o.known
            && self.sum.to_bits() == o.sum.to_bits()
            && self.min.to_bits() == o.min.to_bits()
            && self.max.to_bits() == o.max.to_bits()
            && self.last.to_bits() == o.last.to_bits()
    }
}

/// One round-robin archive: `rows` consolidated rows for every variable.
#[derive(Debug, Clone)]
pub(crate) struct Archive {
    pub spec: RraSpec,
    pub rows: usize,
    pub pdps_per_row: u64,
    pub nvars: usize,
    /// End time of the newest row.
    pub last_row_end: i64,
    /// Slot of the newest row.
    pub head: usize,
    pub scratch: Vec<Scratch>,
    pub data: ChunkedValues,
}

impl Archive {
    pub fn new(spec: RraSpec, step: u64, nvars: usize, start: i64) -> Self {
        let rows = spec.rows();
        let g = spec.granularity as i64;
        Archive {
            spec,
            rows,
            pdps_per_row: spec.granularity / step,
            nvars,
            last_row_end: start.div_euclid(g) * g,
            head: rows - 1,
            scratch: vec![Scratch::EMPTY; nvars],
            data: ChunkedValues::new(rows * nvars),
        }
    }

    pub fn granularity(&self) -> i64 {
        self.spec.granularity as i64
    }

    /// Start of the oldest stored window.
    pub fn oldest_start(&self) -> i64 {
        self.last_row_end - self.rows as i64 * self.granularity()
    }

    pub fn accumulate(&mut self, values: &[f64]) {
        for (s, v) in self.scratch.iter_mut().zip(values) {
            if !v.is_nan() {
                s.add(*v);
            }
        }
    }

    /// Closes the current window, writing its consolidated row.
    pub fn emit(&mut self, end_time: i64) -> Vec<Option<f64>> {
        self.head = (self.head + 1) % self.rows;
        self.last_row_end = end_time;
        let base = self.head * self.nvars;
        let mut out = Vec::with_capacity(self.nvars);
        for i in 0..self.nvars {
            let v = self.scratch[i].consolidate(self.spec.cf, self.spec.xff, self.pdps_per_row);
            self.data.set(base + i, v);
            out.push((!v.is_nan()).then_some(v));
            self.scratch[i] = Scratch::EMPTY;
        }
        out
    }

    /// Writes an all-unknown row without touching the scratch state.
    pub fn emit_unknown(&mut self, end_time: i64) {
        self.head = (self.head + 1) % self.rows;
        self.last_row_end = end_time;
        let base = self.head * self.nvars;
        for i in 0..self.nvars {
            self.data.set(base + i, f64::NAN);
        }
    }

    /// Row whose window ends at `end_time`, if it is still stored.
    pub fn row_at(&self, end_time: i64) -> Option<usize> {
        let g = self.granularity();
        if end_time > self.last_row_end || end_time <= self.oldest_start() {
            return None;
        }
        if (self.last_row_end - end_time) % g != 0 {
            return None;
        }
        let back = ((self.last_row_end - end_time) / g) as usize;
        Some((self.head + self.rows - back) % self.rows)
    }

    pub fn value(&self, slot: usize, var: usize) -> Option<f64> {
        let v = self.data.get(slot * self.nvars + var);
        (!v.is_nan()).then_some(v)
    }

    pub fn bits_eq(&self, o: &Archive) -> bool {
        self.spec == o.spec
            && self.rows == o.rows
            && self.pdps_per_row == o.pdps_per_row
            && self.nvars == o.nvars
            && self.last_row_end == o.last_row_end
            && self.head == o.head
            && self.scratch.len() == o.scratch.len()
            && self
                .scratch
                .iter()
                .zip(&o.scratch)
                .all(|(a, b)| a.bits_eq(b))
            && self.data.bits_eq(&o.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_copy_on_write() {
        let mut a = ChunkedValues::new(CHUNK * 2 + 3);
        a.set(0, 1.0);
        let snapshot = a.clone();
        a.set(CHUNK + 1, 2.0);
        assert!(snapshot.get(CHUNK + 1).is_nan());
        assert_eq!(a.get(CHUNK + 1), 2.0);
        // untouched chunks stay shared
        assert!(Arc::ptr_eq(&a.chunks[0], &snapshot.chunks[0]));
        assert!(!Arc::ptr_eq(&a.chunks[1], &snapshot.chunks[1]));
        assert_eq!(a.len(), CHUNK * 2 + 3);
    }
}
