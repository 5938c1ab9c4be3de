//! Command implementations behind the `egoloc` binary.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod records;
