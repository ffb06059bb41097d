//! Configuration, seeding, serialization and subcommand plumbing around the library.

pub mod config;
pub mod output;
pub mod run;
pub mod seed;

pub use config::{Command, Format, RunConfig};
pub use run::{render, replay, run, ReplayReport, RunOutcome};
