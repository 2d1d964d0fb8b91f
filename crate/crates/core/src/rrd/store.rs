use std::path::PathBuf;
use std::sync::Arc;

use arc_swap::ArcSwapOption;

use super::{load, save, Rrd, RrdError};
use crate::config::MonitorConfig;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: archive layout differs from the configuration for host `{host}`; move the file away or restore the old configuration")]
    SpecMismatch { host: String, path: PathBuf },
    #[error("{path}: {source}")]
    Archive {
        path: PathBuf,
        #[source]
        source: RrdError,
    },
}

/// Latest published database per host, in config order. Hosts without
/// variables have none.
pub struct ArchiveStore {
    names: Vec<String>,
    paths: Vec<PathBuf>,
    slots: Vec<ArcSwapOption<Rrd>>,
}

impl ArchiveStore {
    /// Loads `<rrd_dir>/<host>.rrd` for every host, creating missing
    /// files in memory. A file whose spec differs from the config is an
    /// error.
    pub fn open(config: &MonitorConfig, now: f64) -> Result<ArchiveStore, StoreError> {
        let mut names = Vec::new();
        let mut paths = Vec::new();
        let mut slots = Vec::new();
        for h in &config.hosts {
            let path = config.rrd_path(&h.name);
            let rrd = if h.mibs.is_empty() {
                None
            } else {
                let spec = h.rrd_spec();
                let wrap = |source| StoreError::Archive {
                    path: path.clone(),
                    source,
                };
                Some(if path.exists() {
                    let rrd = load(&path).map_err(wrap)?;
                    if *rrd.spec() != spec {
                        return Err(StoreError::SpecMismatch {
                            host: h.name.clone(),
                            path,
                        });
                    }
                    rrd
                } else {
                    Rrd::create(spec, now).map_err(wrap)?
                })
            };
            names.push(h.name.clone());
            paths.push(path);
            slots.push(ArcSwapOption::new(rrd.map(Arc::new)));
        }
        Ok(ArchiveStore {
            names,
            paths,
            slots,
        })
    }

    /// A store holding the given databases, for hosts `names`.
    pub fn from_parts(entries: Vec<(String, PathBuf, Option<Rrd>)>) -> ArchiveStore {
        let mut s = ArchiveStore {
            names: Vec::new(),
            paths: Vec::new(),
            slots: Vec::new(),
        };
        for (n, p, r) in entries {
            s.names.push(n);
            s.paths.push(p);
            s.slots.push(ArcSwapOption::new(r.map(Arc::new)));
        }
        s
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn index(&self, host: &str) -> Option<usize> {
        self.names.iter().position(|n| n == host)
    }

    pub fn get(&self, idx: usize) -> Option<Arc<Rrd>> {
        self.slots.get(idx)?.load_full()
    }

    pub fn get_by_name(&self, host: &str) -> Option<Arc<Rrd>> {
        self.get(self.index(host)?)
    }

    pub fn publish(&self, idx: usize, rrd: Rrd) {
        self.slots[idx].store(Some(Arc::new(rrd)));
    }

    /// Saves every database atomically; returns the failures.
    pub fn flush(&self) -> Vec<StoreError> {
        let mut errors = Vec::new();
        for (i, slot) in self.slots.iter().enumerate() {
            if let Some(rrd) = slot.load_full() {
                if let Some(dir) = self.paths[i].parent() {
                    let _ = std::fs::create_dir_all(dir);
                }
                if let Err(source) = save(&rrd, &self.paths[i]) {
                    errors.push(StoreError::Archive {
                        path: self.paths[i].clone(),
                        source,
                    });
                }
            }
        }
        errors
    }
}

/// Read-only access to the published databases.
#[derive(Clone)]
pub struct ArchiveReader(Arc<ArchiveStore>);

impl ArchiveReader {
    pub fn new(store: Arc<ArchiveStore>) -> ArchiveReader {
        ArchiveReader(store)
    }

    pub fn get_by_name(&self, host: &str) -> Option<Arc<Rrd>> {
        self.0.get_by_name(host)
    }
}
