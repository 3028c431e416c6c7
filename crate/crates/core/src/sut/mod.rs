//! Query interface to systems under test, with reset semantics.

mod builtin;
mod server;
mod tcp;

use std::io;

use thiserror::Error;

use crate::automata::Symbol;

pub use builtin::{open_builtin, ModelSut, Variant, INPUTS as BUILTIN_INPUTS, OUTPUTS as BUILTIN_OUTPUTS};
pub use server::{parse_request, render_response, serve_builtin, ServerHandle, GREETING};
pub use tcp::{open_tcp, AbstractionConfig, InputTemplate, OutputClassifier, TcpSut};

#[derive(Debug, Error)]
pub enum SutError {
    #[error("unknown builtin variant {name:?} (valid: {valid})")]
    UnknownVariant { name: String, valid: String },
    #[error("input {0} is not accepted by this SUT")]
    UnknownSymbol(Symbol),
    #[error("cannot connect to {endpoint}: {source}")]
    Connect {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot bind {endpoint}: {source}")]
    Bind {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("connection closed by SUT")]
    Disconnected,
    #[error("trace aborted after {} outputs: {reason}", partial.len())]
    TraceAborted { partial: Vec<Symbol>, reason: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SutDescriptor {
    pub name: String,
    pub inputs: Vec<Symbol>,
}

/// A resettable, (assumed) deterministic system under test.
///
/// A session is driven by one owner at a time; open several sessions for
/// concurrent work.
pub trait SutSession: Send {
    fn descriptor(&self) -> &SutDescriptor;

    /// Returns the SUT to its initial state.
    fn reset(&mut self) -> Result<(), SutError>;

    fn query(&mut self, input: &Symbol) -> Result<Symbol, SutError>;

    /// Resets, then sends `inputs` in order and collects the outputs.
    ///
    /// Transport failures are reported as [`SutError::TraceAborted`] carrying
    /// the outputs received so far.
    fn run_trace(&mut self, inputs: &[Symbol]) -> Result<Vec<Symbol>, SutError> {
        let mut outputs = Vec::with_capacity(inputs.len());
        let abort = |partial: Vec<Symbol>, e: SutError| match e {
            SutError::UnknownSymbol(_) | SutError::TraceAborted { .. } => e,
            other => SutError::TraceAborted {
                partial,
                reason: other.to_string(),
            },
        };
        if let Err(e) = self.reset() {
            return Err(abort(outputs, e));
        }
        for input in inputs {
            match self.query(input) {
                Ok(out) => outputs.push(out),
                Err(e) => return Err(abort(outputs, e)),
            }
        }
        Ok(outputs)
    }
}

impl<S: SutSession + ?Sized> SutSession for Box<S> {
    fn descriptor(&self) -> &SutDescriptor {
        (**self).descriptor()
    }

    fn reset(&mut self) -> Result<(), SutError> {
        (**self).reset()
    }

    fn query(&mut self, input: &Symbol) -> Result<Symbol, SutError> {
        (**self).query(input)
    }

    fn run_trace(&mut self, inputs: &[Symbol]) -> Result<Vec<Symbol>, SutError> {
        (**self).run_trace(inputs)
    }
}

/// Opens a session from a target string: `builtin:<variant>` or
/// `tcp:<host:port>` (the latter requires an abstraction config).
pub fn open_target(target: &str, abstraction: Option<AbstractionConfig>) -> Result<Box<dyn SutSession>, SutError> {
    if let Some(name) = target.strip_prefix("builtin:") {
        Ok(Box::new(open_builtin(name)?))
    } else if let Some(endpoint) = target.strip_prefix("tcp:") {
        let cfg = abstraction.unwrap_or_else(AbstractionConfig::identity);
        Ok(Box::new(open_tcp(endpoint, cfg)?))
    } else {
        Err(SutError::Config(format!(
            "unknown SUT target {target:?}; expected builtin:<name> or tcp:<host:port>"
        )))
    }
}
