//! Deterministic behavioral simulator of a spiking pattern-recognition
//! system: leaky integrate-and-fire neurons, pair-based plasticity with a
//! memristor-style weight map, a crossbar with winner-take-all readout, and
//! the experiment harnesses built on top (noisy-digit sweeps, the rate-based
//! heart-rate classifier, and parameter-perturbation robustness runs).
//!
//! Everything is a pure state-transition function over explicit state
//! structs; given the same configuration and seed, every result is
//! bit-reproducible regardless of thread count.

pub mod config;
pub mod engine;
mod error;
pub mod network;
pub mod neuron;
pub mod synapse;
pub mod tasks;

pub use error::{Error, Result};
