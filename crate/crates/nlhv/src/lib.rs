//! Experiment driver for the classical matrix model: configuration, artifact
//! files, run manifests and the subcommands behind the `nlhv` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
