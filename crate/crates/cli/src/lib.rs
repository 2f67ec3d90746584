//! Configuration, file formats and command execution behind the `fnls`
//! binary.

pub mod commands;
pub mod config;
pub mod io;
pub mod plots;
pub mod report;
pub mod series;
pub mod snapshot;
