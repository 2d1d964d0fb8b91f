use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

/// Datagram I/O used by the collector.
pub trait Transport: Send {
    fn send_to(&mut self, buf: &[u8], addr: SocketAddr) -> io::Result<()>;
    /// Waits up to `timeout` for one datagram. `Ok(None)` on timeout.
    fn recv(
        &mut self,
        buf: &mut [u8],
        timeout: Duration,
    ) -> io::Result<Option<(usize, SocketAddr)>>;
}

impl Transport for UdpSocket {
    fn send_to(&mut self, buf: &[u8], addr: SocketAddr) -> io::Result<()> {
        UdpSocket::send_to(self, buf, addr).map(|_| ())
    }

    fn recv(
        &mut self,
        buf: &mut [u8],
        timeout: Duration,
    ) -> io::Result<Option<(usize, SocketAddr)>> {
        // a zero read timeout means "block forever" to the OS
        self.set_read_timeout(Some(timeout.max(Duration::from_micros(100))))?;
        match self.recv_from(buf) {
            Ok((n, from)) => Ok(Some((n, from))),
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                Ok(None)
            }
            // ICMP port-unreachable from an earlier send surfaces here on Linux
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Seconds since the epoch, never running backwards.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

/// Wall-clock time at construction plus monotonic elapsed time.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    epoch: f64,
    start: Instant,
}

impl SystemClock {
    pub fn new() -> SystemClock {
        SystemClock {
            epoch: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.epoch + self.start.elapsed().as_secs_f64()
    }
}
