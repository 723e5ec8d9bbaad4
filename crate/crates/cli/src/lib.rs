//! File formats, reports and subcommands behind the `bcrecon` binary.

pub mod commands;
pub mod display;
pub mod files;
pub mod report;

/// Environment variable capping the worker thread count (0 = automatic).
pub const THREADS_ENV: &str = "BCRECON_THREADS";
