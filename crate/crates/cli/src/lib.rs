//! Library surface of the command-line front end, exposed so integration
//! tests can re-parse emitted artifacts into their concrete types.

pub mod commands;
pub mod config;
pub mod errors;
pub mod output;
