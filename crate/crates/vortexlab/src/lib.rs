//! Command-line front end for `vortexlab-core`: configuration files, curve and
//! particle-field formats, CSV/JSON outputs and the verification suites.

pub mod commands;
pub mod config;
pub mod formats;
pub mod verify;

pub use config::RunConfig;
