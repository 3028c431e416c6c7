//! Putting models to use: state coverage of trace logs (fuzzer
//! benchmarking) and model differencing (differential testing).

mod coverage;
mod diff;

pub use coverage::{compare_fuzzers, coverage, coverage_dot, model_id, ComparisonVerdict, CoverageReport, FuzzerComparison};
pub use diff::{diff, AlphabetDiff, DiffReport, Witness};
