//! Library surface of the runner, shared with the `faultmg` binary.

pub mod config;
pub mod suite;
