//! Configuration, artifact output and backend dispatch for the `equipart` binary.

pub mod config;
pub mod output;
pub mod pipeline;
