//! Command-line runner, CSV formats and thread-pool execution for
//! [`iforge_core`].
//!
//! Every command writes its artifacts into `<out>/<hash>/`, where the hash
//! covers the fully resolved configuration, and records that configuration in
//! `manifest.json` so `iforge replay` can reproduce the run byte for byte.

pub mod cli;
pub mod commands;
pub mod io;
pub mod manifest;
pub mod parallel;
pub mod plot;

pub use parallel::Parallel;
