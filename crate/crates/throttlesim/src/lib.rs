//! Experiment harness for the quota-governed cluster simulator: config
//! parsing, the phase-driven run loop, output emission, and the scenarios
//! behind the CLI subcommands.

pub mod config;
pub mod report;
pub mod runner;
pub mod scenarios;
