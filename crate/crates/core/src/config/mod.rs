//! The XML configuration file: parsing, structural validation against the
//! `monitor` DTD, defaults, and canonical re-serialization.

mod parse;
mod write;

use std::fmt;
use std::path::{Path, PathBuf};

use crate::grapher::{AtTime, GraphProgram, ImageFormat};
use crate::rrd::{RraSpec, RrdSpec, VarKind, Variable};
use crate::snmp::{Oid, Version};

pub use parse::{parse_config, parse_config_with_base};

pub const DEFAULT_NUM_CONNECTIONS: usize = 50;
pub const DEFAULT_VERBOSITY: u8 = 3;
pub const DEFAULT_HTTP_PORT: u16 = 8001;
pub const DEFAULT_COMMUNITY: &str = "public";
pub const DEFAULT_XFF: f64 = 0.8;
pub const DEFAULT_GRAPH_WIDTH: u32 = 400;
pub const DEFAULT_GRAPH_HEIGHT: u32 = 180;
pub const DEFAULT_GRAPH_START: &str = "-3h";

/// Upper bound on stored values per host database (rows × variables).
pub const MAX_ARCHIVE_VALUES: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub num_connections: usize,
    pub pmc_logfile: Option<PathBuf>,
    /// 0 is the most verbose, 3 logs nothing.
    pub verbosity: u8,
    pub rrd_dir: PathBuf,
    pub xslt_dir: PathBuf,
    pub html_dir: PathBuf,
    pub http_port: u16,
    pub http_logfile: Option<PathBuf>,
    pub http_filter: Option<String>,
    /// Extensions without the leading dot.
    pub http_filter_extensions: Vec<String>,
    pub hosts: Vec<HostConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HostConfig {
    pub name: String,
    pub ip: String,
    pub polldelay: u64,
    pub tags: Vec<String>,
    pub snmp_version: Version,
    pub description: Option<String>,
    pub mailto: Option<String>,
    pub mibs: Vec<MibSpec>,
    pub rras: Vec<RraSpec>,
    pub graphs: Vec<GraphSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MibSpec {
    pub id: String,
    /// The name as written in the file.
    pub name: String,
    pub oid: Oid,
    pub kind: VarKind,
    pub community: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub seconds: AtTime,
    pub title: String,
    /// Instruction lines as written.
    pub body: Vec<String>,
    pub program: GraphProgram,
}

impl GraphSpec {
    pub fn format(&self) -> ImageFormat {
        ImageFormat::from_graph_id(&self.id).expect("checked at parse time")
    }
}

impl HostConfig {
    pub fn rrd_spec(&self) -> RrdSpec {
        RrdSpec {
            step: self.polldelay,
            variables: self
                .mibs
                .iter()
                .map(|m| Variable {
                    id: m.id.clone(),
                    kind: m.kind,
                    min: m.min,
                    max: m.max,
                })
                .collect(),
            archives: self.rras.clone(),
        }
    }

    pub fn mib(&self, id: &str) -> Option<&MibSpec> {
        self.mibs.iter().find(|m| m.id == id)
    }

    pub fn graph(&self, id: &str) -> Option<&GraphSpec> {
        self.graphs.iter().find(|g| g.id == id)
    }
}

impl MonitorConfig {
    pub fn host(&self, name: &str) -> Option<&HostConfig> {
        self.hosts.iter().find(|h| h.name == name)
    }

    /// `<rrd_dir>/<host>.rrd`
    pub fn rrd_path(&self, host: &str) -> PathBuf {
        self.rrd_dir.join(format!("{host}.rrd"))
    }

    /// Canonical XML with every attribute spelled out.
    pub fn to_xml(&self) -> String {
        write::to_xml(self)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: malformed XML: {message}")]
    WellFormedness { line: u32, message: String },
    #[error("line {line}: <{element}>: {message}")]
    SchemaViolation {
        line: u32,
        element: String,
        message: String,
    },
    #[error("line {line}: <{element}>: duplicate id `{id}`")]
    DuplicateId {
        line: u32,
        element: String,
        id: String,
    },
    #[error("line {line}: <{element}> {attribute}: {message}")]
    BadValue {
        line: u32,
        element: String,
        attribute: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn line(&self) -> Option<u32> {
        match self {
            ConfigError::WellFormedness { line, .. }
            | ConfigError::SchemaViolation { line, .. }
            | ConfigError::DuplicateId { line, .. }
            | ConfigError::BadValue { line, .. } => Some(*line),
            ConfigError::Io { .. } => None,
        }
    }
}

/// Every problem found in one document.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn base_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Reads and parses `path`; relative directories resolve against the
/// file's own directory.
pub fn load_config(path: &Path) -> Result<MonitorConfig, ConfigErrors> {
    let text = read(path).map_err(|e| ConfigErrors(vec![e]))?;
    parse_config_with_base(&text, Some(&base_dir(path)))
}

/// Validates `path`: an empty list means the file is accepted.
pub fn check_config(path: &Path) -> Result<Vec<ConfigError>, ConfigError> {
    let text = read(path)?;
    Ok(match parse_config_with_base(&text, Some(&base_dir(path))) {
        Ok(_) => Vec::new(),
        Err(ConfigErrors(list)) => list,
    })
}
