//! Experiment harness around `scalebench-core`: configuration files, report
//! emission, a live HTTP load mode, a stub target server, and a synthetic
//! trace generator. The `scalebench` binary wires these into subcommands.

pub mod config;
pub mod experiment;
pub mod live;
pub mod report;
pub mod stub;
pub mod synth;
