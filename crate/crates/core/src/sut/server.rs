//! Loopback server exposing a built-in variant over a CRLF line protocol.

use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{Ipv4Addr, Ipv6Addr, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, info, warn};

use crate::automata::{MealyMachine, Symbol};

use super::{SutError, Variant};

pub const GREETING: &str = "220 ready";

/// How often idle connection threads look at the shutdown flag.
const POLL: Duration = Duration::from_millis(100);

/// Maps a request line to an abstract input. Anything that is not one of the
/// known verbs is a malformed message.
pub fn parse_request(line: &str) -> Symbol {
    let verb = line.split_whitespace().next().unwrap_or("").to_ascii_uppercase();
    match verb.as_str() {
        "USER" | "PASS" | "LIST" | "RNFR" | "RNTO" | "QUIT" => Symbol::new(&verb).expect("static verb"),
        _ => Symbol::malformed(),
    }
}

/// Concrete response line for an abstract output symbol.
pub fn render_response(output: &Symbol) -> String {
    let text = match output.as_str() {
        "R220" => "220 ready",
        "R331" => "331 Password required",
        "R230" => "230 Logged in",
        "R150" => "150 Listing follows",
        "R250" => "250 Rename successful",
        "R350" => "350 Ready for RNTO",
        "R503" => "503 Bad sequence of commands",
        "R530" => "530 Not logged in",
        "R500" => "500 unknown",
        "R221" => "221 Goodbye",
        "R421" => "421 Service not available",
        other => return format!("500 {other}"),
    };
    text.to_string()
}

/// A running server. Dropping the handle stops it.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting, waits for the accept loop, and lets open
    /// connections wind down on their next poll.
    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the blocking accept.
        let mut wake = self.addr;
        if wake.ip().is_unspecified() {
            wake.set_ip(match wake {
                SocketAddr::V4(_) => Ipv4Addr::LOCALHOST.into(),
                SocketAddr::V6(_) => Ipv6Addr::LOCALHOST.into(),
            });
        }
        let _ = TcpStream::connect_timeout(&wake, Duration::from_secs(1));
        if let Some(acceptor) = self.acceptor.take() {
            let _ = acceptor.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Serves `variant` on `endpoint` (`host:port`, port 0 picks a free port).
/// Each connection gets its own protocol state.
pub fn serve_builtin(variant: Variant, endpoint: &str) -> Result<ServerHandle, SutError> {
    let listener = TcpListener::bind(endpoint).map_err(|source| SutError::Bind {
        endpoint: endpoint.to_string(),
        source,
    })?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let model = Arc::new(variant.model());
    info!("serving {variant} on {addr}");

    let acceptor = {
        let stop = Arc::clone(&stop);
        thread::spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                match conn {
                    Ok(stream) => {
                        let model = Arc::clone(&model);
                        let stop = Arc::clone(&stop);
                        thread::spawn(move || {
                            let peer = stream.peer_addr().ok();
                            info!("connection from {peer:?}");
                            if let Err(e) = handle_client(stream, &model, &stop) {
                                debug!("connection {peer:?} ended: {e}");
                            }
                        });
                    }
                    Err(e) => warn!("accept failed: {e}"),
                }
            }
        })
    };
    Ok(ServerHandle {
        addr,
        stop,
        acceptor: Some(acceptor),
    })
}

fn handle_client(stream: TcpStream, model: &MealyMachine, stop: &AtomicBool) -> io::Result<()> {
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(POLL))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    writer.write_all(format!("{GREETING}\r\n").as_bytes())?;

    let mut state = model.initial_state();
    let mut line = Vec::new();
    loop {
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => return Ok(()),
            Ok(_) if line.last() != Some(&b'\n') => return Ok(()),
            Ok(_) => {
                let request = String::from_utf8_lossy(&line);
                let input = parse_request(request.trim_end_matches(['\r', '\n']));
                line.clear();
                let (next, output) = model.step(state, &input).expect("server alphabet covers every request");
                state = next;
                writer.write_all(format!("{}\r\n", render_response(output)).as_bytes())?;
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if stop.load(Ordering::SeqCst) {
                    return Ok(());
                }
            }
            Err(e) => return Err(e),
        }
    }
}
