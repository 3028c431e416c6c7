//! Line-based TCP adapter: maps abstract input symbols to concrete request
//! lines and classifies response lines back into abstract output symbols.

use std::collections::HashSet;
use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::automata::{symbols, Symbol};

use super::{SutDescriptor, SutError, SutSession};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputTemplate {
    pub symbol: Symbol,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputClassifier {
    pub prefix: String,
    pub symbol: Symbol,
}

/// Mapping between the abstract alphabet and concrete protocol lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractionConfig {
    pub inputs: Vec<InputTemplate>,
    /// Checked in order; the first matching prefix wins.
    pub classifiers: Vec<OutputClassifier>,
    pub default_output: Symbol,
    pub timeout_ms: u64,
    pub timeout_symbol: Symbol,
}

impl AbstractionConfig {
    /// The mapping understood by the built-in loopback server.
    pub fn identity() -> Self {
        let inputs = [
            ("USER", "USER u"),
            ("PASS", "PASS p"),
            ("LIST", "LIST"),
            ("RNFR", "RNFR a"),
            ("RNTO", "RNTO b"),
            ("QUIT", "QUIT"),
            ("MALFORMED", "XZ@#"),
        ]
        .into_iter()
        .map(|(symbol, template)| InputTemplate {
            symbol: Symbol::new(symbol).expect("static symbol"),
            template: template.to_string(),
        })
        .collect();
        let classifiers = symbols(&super::builtin::OUTPUTS)
            .into_iter()
            .map(|symbol| OutputClassifier {
                prefix: symbol.as_str()[1..].to_string(),
                symbol,
            })
            .collect();
        AbstractionConfig {
            inputs,
            classifiers,
            default_output: Symbol::new("UNCLASSIFIED").expect("static symbol"),
            timeout_ms: 2000,
            timeout_symbol: Symbol::new("TIMEOUT").expect("static symbol"),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SutError> {
        let cfg: AbstractionConfig =
            serde_json::from_str(text).map_err(|e| SutError::Config(format!("abstraction config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SutError> {
        let mut seen = HashSet::new();
        for input in &self.inputs {
            if !seen.insert(&input.symbol) {
                return Err(SutError::Config(format!("input symbol {} mapped twice", input.symbol)));
            }
            if input.template.contains(['\r', '\n']) {
                return Err(SutError::Config(format!(
                    "template for {} must be a single line",
                    input.symbol
                )));
            }
        }
        if self.timeout_ms == 0 {
            return Err(SutError::Config("timeout_ms must be positive".into()));
        }
        Ok(())
    }

    pub fn input_symbols(&self) -> Vec<Symbol> {
        self.inputs.iter().map(|i| i.symbol.clone()).collect()
    }

    pub fn template(&self, symbol: &Symbol) -> Option<&str> {
        self.inputs
            .iter()
            .find(|i| &i.symbol == symbol)
            .map(|i| i.template.as_str())
    }

    /// First-match classification of one response line.
    pub fn classify(&self, line: &str) -> Symbol {
        self.classifiers
            .iter()
            .find(|c| line.starts_with(&c.prefix))
            .map_or_else(|| self.default_output.clone(), |c| c.symbol.clone())
    }
}

struct Connection {
    reader: BufReader<TcpStream>,
    line: Vec<u8>,
}

enum LineRead {
    Line(String),
    TimedOut,
    Closed,
}

impl Connection {
    fn open(addrs: &[SocketAddr], timeout: Duration) -> io::Result<Self> {
        let stream = TcpStream::connect(addrs)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        Ok(Connection {
            reader: BufReader::new(stream),
            line: Vec::new(),
        })
    }

    fn send(&mut self, line: &str) -> io::Result<()> {
        let stream = self.reader.get_mut();
        stream.write_all(format!("{line}\r\n").as_bytes())
    }

    /// Reads one line; a partially received line survives a timeout.
    fn read_line(&mut self) -> io::Result<LineRead> {
        match self.reader.read_until(b'\n', &mut self.line) {
            Ok(0) => Ok(LineRead::Closed),
            Ok(_) if self.line.last() != Some(&b'\n') => Ok(LineRead::Closed),
            Ok(_) => {
                let text = String::from_utf8_lossy(&self.line).trim_end_matches(['\r', '\n']).to_string();
                self.line.clear();
                Ok(LineRead::Line(text))
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Ok(LineRead::TimedOut),
            Err(e) => Err(e),
        }
    }
}

/// A SUT reached over TCP. Every reset opens a new connection.
pub struct TcpSut {
    endpoint: String,
    addrs: Vec<SocketAddr>,
    config: AbstractionConfig,
    descriptor: SutDescriptor,
    conn: Option<Connection>,
    /// The current connection has not been queried yet, so reset can reuse it.
    fresh: bool,
}

impl std::fmt::Debug for TcpSut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TcpSut").field("endpoint", &self.endpoint).finish()
    }
}

impl TcpSut {
    fn timeout(&self) -> Duration {
        Duration::from_millis(self.config.timeout_ms)
    }

    fn connect(&mut self) -> Result<(), SutError> {
        self.conn = None;
        let mut conn = Connection::open(&self.addrs, self.timeout()).map_err(|source| SutError::Connect {
            endpoint: self.endpoint.clone(),
            source,
        })?;
        // Banner is optional; only an immediate close is an error.
        if let LineRead::Closed = conn.read_line()? {
            return Err(SutError::Disconnected);
        }
        self.conn = Some(conn);
        self.fresh = true;
        Ok(())
    }

    pub fn config(&self) -> &AbstractionConfig {
        &self.config
    }
}

/// Connects to `endpoint` (`host:port`) using `config` for message abstraction.
pub fn open_tcp(endpoint: &str, config: AbstractionConfig) -> Result<TcpSut, SutError> {
    config.validate()?;
    let addrs: Vec<SocketAddr> = endpoint
        .to_socket_addrs()
        .map_err(|source| SutError::Connect {
            endpoint: endpoint.to_string(),
            source,
        })?
        .collect();
    let mut sut = TcpSut {
        endpoint: endpoint.to_string(),
        addrs,
        descriptor: SutDescriptor {
            name: format!("tcp:{endpoint}"),
            inputs: config.input_symbols(),
        },
        config,
        conn: None,
        fresh: false,
    };
    sut.connect()?;
    Ok(sut)
}

impl SutSession for TcpSut {
    fn descriptor(&self) -> &SutDescriptor {
        &self.descriptor
    }

    fn reset(&mut self) -> Result<(), SutError> {
        if self.fresh && self.conn.is_some() {
            return Ok(());
        }
        self.connect()
    }

    fn query(&mut self, input: &Symbol) -> Result<Symbol, SutError> {
        let line = self
            .config
            .template(input)
            .ok_or_else(|| SutError::UnknownSymbol(input.clone()))?
            .to_string();
        self.fresh = false;
        let conn = self.conn.as_mut().ok_or(SutError::Disconnected)?;
        conn.send(&line)?;
        match conn.read_line()? {
            LineRead::Line(text) => Ok(self.config.classify(&text)),
            LineRead::TimedOut => Ok(self.config.timeout_symbol.clone()),
            LineRead::Closed => {
                self.conn = None;
                Err(SutError::Disconnected)
            }
        }
    }
}
