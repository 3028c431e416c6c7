//! Learning Mealy-machine models of stateful systems, actively (by querying
//! the system) or passively (from recorded traces), and putting those models
//! to work: state-coverage benchmarking of fuzzers and differential testing
//! of protocol implementations.

pub mod automata;
pub mod sut;
pub mod trace;
pub mod active;
pub mod passive;
pub mod fuzz;
pub mod analysis;
