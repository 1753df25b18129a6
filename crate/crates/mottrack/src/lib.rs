//! File formats, run manifests, result tables and the command line on top of
//! `mottrack-core`.

pub mod cli;
pub mod error;
pub mod manifest;
pub mod mot_io;
pub mod report;
pub mod run;

pub use error::{Error, Result};
