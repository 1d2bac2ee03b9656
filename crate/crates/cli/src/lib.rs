//! Command-line driver for weylscope: configuration, dispatch, artifact
//! writing and the verification scenarios.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
