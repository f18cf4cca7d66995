//! File formats, parallel drivers and the `svtk` command line on top of
//! [`svtk_core`].
//!
//! Every run writes its outputs (CSV for fields and curves, JSON for reports
//! and models) plus a [`manifest::RunManifest`] recording the full parameter
//! set and SHA-256 digests of the outputs. `svtk replay MANIFEST` reruns the
//! recorded command and checks the digests.
//!
//! Exit codes: 0 success, 1 usage, 2 model validation, 3 numerical failure,
//! 4 comparison tolerance breach.

pub mod cli;
pub mod commands;
pub mod compare;
pub mod error;
pub mod io;
pub mod manifest;
pub mod parallel;
pub mod parse;

pub use error::{CliError, Result};
