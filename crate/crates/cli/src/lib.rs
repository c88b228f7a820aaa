//! Command-line front end and local HTTP API for `padkit`.
//!
//! The `detect` subcommand and `POST /api/detect` both go through
//! [`params::run_detect`], so identical parameters give identical flags.

pub mod commands;
pub mod error;
pub mod params;
pub mod server;
pub mod store;

pub use commands::{run, Cli};
pub use error::{AppError, AppResult, ErrorKind};
pub use params::{run_detect, DetectParams, DetectResponse};
