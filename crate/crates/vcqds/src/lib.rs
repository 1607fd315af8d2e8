//! File formats, run plans and subcommands around [`vcqds_core`].
//!
//! The `vcqds` binary is a thin clap front end over [`commands`].

pub mod artifact;
pub mod commands;
mod error;
pub mod io;
pub mod plan;

pub use error::{CliError, Result};
pub use vcqds_core as engine;
