//! Library side of the `hetfx` command: configuration, input parsing,
//! the three commands and the report format.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod report;
