//! Library surface of the experiment CLI, exposed so integration tests can
//! drive commands and re-parse emitted artifacts.

pub mod commands;
pub mod config;
pub mod csvfmt;
pub mod svg;
