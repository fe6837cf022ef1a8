//! Command-line front end for `graphimpute`: configuration, checkpoints,
//! subcommands and the multi-seed benchmark.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod config;

pub use bench::{run_bench, BenchReport};
pub use config::RunConfig;
