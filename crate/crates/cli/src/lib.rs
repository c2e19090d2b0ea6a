//! Experiment harness around the beamspace denoising library: a plain
//! text configuration format, deterministic Monte Carlo sweeps, and a
//! stable CSV schema for the results.

pub mod config;
pub mod csvout;
pub mod experiments;
