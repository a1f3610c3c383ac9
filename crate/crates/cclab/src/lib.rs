//! Scenario runner around `cclab-core`: scenario files, output formats,
//! parameter sweeps, and the bundled trace/preset corpus.

pub mod config;
pub mod corpus;
pub mod emit;
pub mod sweep;
