//! File formats and subcommands behind the `cubic-moment` binary.

pub mod commands;
pub mod files;
