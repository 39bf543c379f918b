//! Experiment runner behind the `dperm` binary.
//!
//! A run is described by a flat TOML file (see [`config::RunConfig`]); the
//! runner dispatches it to one of the drivers in [`experiments`], writes the
//! result rows and a manifest, and reports failed checks through its exit
//! code.

pub mod catalog;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::RunConfig;
pub use error::CliError;
