//! Configuration, table formats and subcommands behind the `mlnd` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;
