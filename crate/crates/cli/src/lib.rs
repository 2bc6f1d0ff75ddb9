//! Library half of the `l2gap` binary: chain-file parsing and report
//! assembly, exposed for integration tests.

pub mod input;
pub mod report;
