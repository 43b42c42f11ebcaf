//! Library side of the `dtg` pipeline: configuration, artifact formats,
//! CSV ingestion, the command implementations, and the bundled synthetic
//! demo generator.

#![allow(clippy::needless_range_loop)]

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod synth;
