//! Experiment harness for the solver library: run configuration, trace
//! serialization and the command implementations behind the `visolve` CLI.

pub mod config;
pub mod run;
pub mod trace;
