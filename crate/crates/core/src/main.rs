use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::{error, info, LevelFilter};

use clustermon::agent_sim::{spawn_farm, table1_template, FragmentOptions};
use clustermon::collector::CollectorOptions;
use clustermon::config::{check_config, load_config, MonitorConfig};
use clustermon::daemon::{Daemon, DaemonOptions};
use clustermon::http::DEFAULT_XSLT_PROCESSOR;
use clustermon::rrd;
use clustermon::snmp::Version;

#[derive(Parser)]
#[command(name = "clustermon", version, about = "SNMP cluster monitor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Poll the configured hosts and serve status pages until terminated.
    Run(RunArgs),
    /// Validate a configuration file.
    Check {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Print the contents of an archive file.
    RrdDump { file: PathBuf },
    /// Run simulated SNMP agents until terminated.
    Simfarm(SimfarmArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Only validate the configuration.
    #[arg(long)]
    check: bool,
    /// Seconds to wait for each SNMP response.
    #[arg(long, default_value_t = 5.0, value_parser = positive_seconds)]
    timeout: f64,
    /// Extra attempts after an unanswered request.
    #[arg(long, default_value_t = 1)]
    retries: u32,
    /// XSLT processor command; `{xsl}` is replaced by the stylesheet path,
    /// the document arrives on standard input.
    #[arg(long, default_value = DEFAULT_XSLT_PROCESSOR)]
    xslt_processor: String,
    /// Seconds between archive writes while running.
    #[arg(long, default_value_t = 300)]
    flush_interval: u64,
    /// Listen address for the HTTP server, overriding the configured port.
    #[arg(long)]
    listen: Option<std::net::SocketAddr>,
}

#[derive(Args)]
struct SimfarmArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Where to write a configuration listing the agents (default: stdout).
    #[arg(long)]
    config_out: Option<PathBuf>,
    #[arg(long, default_value = "public")]
    community: String,
    #[arg(long, default_value_t = 30)]
    polldelay: u64,
    #[arg(long, default_value = "2c")]
    snmpversion: String,
    #[arg(long, default_value_t = 50)]
    num_connections: usize,
    #[arg(long, default_value_t = 8001)]
    http_port: u16,
    #[arg(long)]
    rrd_dir: Option<PathBuf>,
    /// Exit after this many seconds instead of waiting for a signal.
    #[arg(long)]
    duration: Option<f64>,
}

fn positive_seconds(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number of seconds")),
    }
}

/// 0 is the most talkative level, 3 the quietest.
fn level(verbosity: u8) -> LevelFilter {
    match verbosity {
        0 => LevelFilter::Debug,
        1 => LevelFilter::Info,
        2 => LevelFilter::Warn,
        _ => LevelFilter::Error,
    }
}

fn init_logging(verbosity: u8, file: Option<&Path>) -> io::Result<()> {
    let mut b = env_logger::Builder::new();
    b.filter_level(level(verbosity)).format_timestamp_secs();
    if let Some(path) = file {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        b.target(env_logger::Target::Pipe(Box::new(f)));
    }
    let _ = b.try_init();
    Ok(())
}

fn termination_flag() -> io::Result<Arc<AtomicBool>> {
    let stop = Arc::new(AtomicBool::new(false));
    for sig in [
        signal_hook::consts::SIGTERM,
        signal_hook::consts::SIGINT,
        signal_hook::consts::SIGHUP,
    ] {
        signal_hook::flag::register(sig, stop.clone())?;
    }
    Ok(stop)
}

fn load(path: &Path) -> Result<MonitorConfig, ExitCode> {
    load_config(path).map_err(|errs| {
        for e in &errs.0 {
            eprintln!("{}: {e}", path.display());
        }
        ExitCode::from(1)
    })
}

fn check(path: &Path) -> ExitCode {
    match check_config(path) {
        Ok(errs) if errs.is_empty() => {
            println!("{}: ok", path.display());
            ExitCode::SUCCESS
        }
        Ok(errs) => {
            for e in &errs {
                eprintln!("{}: {e}", path.display());
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            ExitCode::from(1)
        }
    }
}

fn run(args: RunArgs) -> ExitCode {
    if args.check {
        return check(&args.config);
    }
    let config = match load(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Err(e) = init_logging(config.verbosity, config.pmc_logfile.as_deref()) {
        eprintln!("cannot open log file: {e}");
        return ExitCode::from(1);
    }
    let stop = match termination_flag() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot install signal handlers: {e}");
            return ExitCode::from(1);
        }
    };
    let opts = DaemonOptions {
        collector: CollectorOptions {
            timeout: args.timeout,
            retries: args.retries,
        },
        xslt_processor: args.xslt_processor,
        flush_interval: Duration::from_secs(args.flush_interval.max(1)),
        http_addr: args.listen,
    };
    let daemon = match Daemon::start(config, opts) {
        Ok(d) => d,
        Err(e) => {
            error!("{e}");
            eprintln!("clustermon: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    info!("serving on http://{}/status.html", daemon.http_addr());
    while !stop.load(Ordering::Relaxed) {
        thread::sleep(Duration::from_millis(100));
    }
    info!("termination requested");
    let errors = daemon.shutdown();
    for e in &errors {
        error!("{e}");
        eprintln!("clustermon: {e}");
    }
    if errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn rrd_dump(file: &Path) -> ExitCode {
    let r = match rrd::load(file) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            return ExitCode::from(1);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match rrd::dump(&r, &mut out).and_then(|_| out.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}

fn simfarm(args: SimfarmArgs) -> ExitCode {
    let _ = env_logger::Builder::new()
        .filter_level(LevelFilter::Warn)
        .try_init();
    let version = match args.snmpversion.as_str() {
        "1" => Version::V1,
        "2c" => Version::V2c,
        other => {
            eprintln!("unsupported SNMP version `{other}`");
            return ExitCode::from(1);
        }
    };
    let stop = match termination_flag() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot install signal handlers: {e}");
            return ExitCode::from(1);
        }
    };
    let farm = match spawn_farm(args.count, &table1_template(&args.community), args.seed) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("simfarm: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = FragmentOptions {
        polldelay: args.polldelay,
        version,
        ..FragmentOptions::default()
    };
    let mut attrs = vec![
        ("pmc-num-connections", args.num_connections.to_string()),
        ("http-port", args.http_port.to_string()),
    ];
    if let Some(dir) = &args.rrd_dir {
        attrs.push(("pmc-rrd-dir", dir.display().to_string()));
    }
    let doc = farm.config_document(&opts, &attrs);
    let written = match &args.config_out {
        Some(path) => std::fs::write(path, doc),
        None => io::stdout()
            .write_all(doc.as_bytes())
            .and_then(|_| io::stdout().flush()),
    };
    if let Err(e) = written {
        eprintln!("cannot write configuration: {e}");
        return ExitCode::from(1);
    }
    eprintln!("simfarm: {} agents running", farm.len());
    let started = std::time::Instant::now();
    while !stop.load(Ordering::Relaxed)
        && args
            .duration
            .is_none_or(|d| started.elapsed().as_secs_f64() < d)
    {
        thread::sleep(Duration::from_millis(100));
    }
    let (mut req, mut resp, mut bin, mut bout) = (0, 0, 0, 0);
    for a in &farm.agents {
        let s = a.stats();
        req += s.requests.load(Ordering::Relaxed);
        resp += s.responses.load(Ordering::Relaxed);
        bin += s.bytes_in.load(Ordering::Relaxed);
        bout += s.bytes_out.load(Ordering::Relaxed);
    }
    eprintln!("simfarm: {req} requests ({bin} bytes), {resp} responses ({bout} bytes)");
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(args),
        Command::Check { config } => check(&config),
        Command::RrdDump { file } => rrd_dump(&file),
        Command::Simfarm(args) => simfarm(args),
    }
}
