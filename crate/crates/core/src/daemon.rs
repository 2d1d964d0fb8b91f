//! Wiring of the long-running parts: archives, status view, collector
//! and HTTP server.

use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{error, info, warn};

use crate::collector::{
    Clock, Collector, CollectorError, CollectorOptions, CollectorStats, SystemClock,
};
use crate::config::MonitorConfig;
use crate::http::{serve, HttpContext, ServerError, ServerHandle, DEFAULT_XSLT_PROCESSOR};
use crate::rrd::{ArchiveReader, ArchiveStore, StoreError};
use crate::status::{StatusReader, StatusView};

#[derive(Debug, Clone)]
pub struct DaemonOptions {
    pub collector: CollectorOptions,
    pub xslt_processor: String,
    /// How often archives are written to disk while running.
    pub flush_interval: Duration,
    /// Listen address; defaults to all interfaces on the configured port.
    pub http_addr: Option<SocketAddr>,
}

impl Default for DaemonOptions {
    fn default() -> Self {
        DaemonOptions {
            collector: CollectorOptions::default(),
            xslt_processor: DEFAULT_XSLT_PROCESSOR.into(),
            flush_interval: Duration::from_secs(300),
            http_addr: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DaemonError {
    #[error(transparent)]
    Archive(#[from] StoreError),
    #[error(transparent)]
    Http(#[from] ServerError),
    #[error("cannot open SNMP socket: {0}")]
    Socket(io::Error),
}

impl DaemonError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            DaemonError::Http(ServerError::Bind { .. }) | DaemonError::Socket(_) => 2,
            _ => 1,
        }
    }
}

pub struct Daemon {
    stop: Arc<AtomicBool>,
    status: Arc<StatusView>,
    archives: Arc<ArchiveStore>,
    stats: Arc<CollectorStats>,
    http: ServerHandle,
    collector: JoinHandle<Result<(), CollectorError>>,
    flusher: JoinHandle<()>,
}

impl Daemon {
    pub fn start(config: MonitorConfig, opts: DaemonOptions) -> Result<Daemon, DaemonError> {
        let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
        let config = Arc::new(config);
        let archives = Arc::new(ArchiveStore::open(&config, clock.now())?);
        let status = Arc::new(StatusView::new(&config));

        let ctx = Arc::new(HttpContext {
            config: config.clone(),
            status: StatusReader::new(status.clone()),
            archives: ArchiveReader::new(archives.clone()),
            clock: clock.clone(),
            xslt_processor: opts.xslt_processor.clone(),
        });
        let addr = opts
            .http_addr
            .unwrap_or_else(|| SocketAddr::from(([0, 0, 0, 0], config.http_port)));
        let http = serve(ctx, addr)?;

        let socket = UdpSocket::bind(("0.0.0.0", 0)).map_err(DaemonError::Socket)?;
        let mut collector = Collector::new(
            &config,
            opts.collector,
            Box::new(socket),
            clock,
            status.clone(),
            archives.clone(),
        );
        let stats = collector.stats();
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let collector = thread::Builder::new()
            .name("collector".into())
            .spawn(move || collector.run(&flag))
            .map_err(DaemonError::Socket)?;

        let (flag, store, every) = (stop.clone(), archives.clone(), opts.flush_interval);
        let flusher = thread::Builder::new()
            .name("flush".into())
            .spawn(move || {
                let mut last = Instant::now();
                while !flag.load(Ordering::Relaxed) {
                    thread::sleep(Duration::from_millis(100));
                    if last.elapsed() >= every {
                        last = Instant::now();
                        for e in store.flush() {
                            warn!("{e}");
                        }
                    }
                }
            })
            .map_err(DaemonError::Socket)?;
        Ok(Daemon {
            stop,
            status,
            archives,
            stats,
            http,
            collector,
            flusher,
        })
    }

    pub fn http_addr(&self) -> SocketAddr {
        self.http.local_addr()
    }

    pub fn status(&self) -> StatusReader {
        StatusReader::new(self.status.clone())
    }

    pub fn stats(&self) -> Arc<CollectorStats> {
        self.stats.clone()
    }

    /// Stops polling, writes every archive, then stops the server.
    /// Returns the archives that could not be written.
    pub fn shutdown(self) -> Vec<StoreError> {
        self.stop.store(true, Ordering::SeqCst);
        match self.collector.join() {
            Ok(Err(e)) => error!("collector: {e}"),
            Err(_) => error!("collector thread panicked"),
            Ok(Ok(())) => {}
        }
        let _ = self.flusher.join();
        let errors = self.archives.flush();
        self.http.shutdown();
        info!("shutdown complete");
        errors
    }
}
