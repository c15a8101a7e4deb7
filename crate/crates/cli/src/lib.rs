//! Library surface of the pipeline CLI, used by the binary and the
//! integration tests.

pub mod commands;
pub mod config;
pub mod errors;
pub mod lock;
