//! Library surface of the `qlin` binary: scenario configuration, the
//! built-in reference scenario, command implementations, and output writers.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;
