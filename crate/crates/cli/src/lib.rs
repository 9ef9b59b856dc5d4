//! Command-line front end for the spikebar simulator.
//!
//! The binary exposes training, inference, exhaustive noise sweeps, the two
//! plasticity characterization curves, heart-rate classification and a
//! robustness sweep. All commands are deterministic: identical arguments,
//! config and input files reproduce identical bytes.

pub mod args;
pub mod commands;
pub mod manifest;

pub use args::Cli;

/// The full argument tree, exposed so tests can audit the help surface.
pub fn command() -> clap::Command {
    use clap::CommandFactory;
    Cli::command()
}
