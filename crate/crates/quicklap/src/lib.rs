//! Online reward learning for a simulated driving agent.
//!
//! A robot car plans with receding-horizon optimization over a linear reward
//! in hand-designed driving features. A simulated teacher intervenes with
//! physical corrections and short utterances; a closed-form Bayesian update
//! fuses the two signals to track the teacher's hidden preference weights in
//! real time.
//!
//! The `examples/` directory is the front door: one runnable example per
//! capability, from single integration steps up to full offline experiment
//! sweeps. A thin `quicklap` binary drives the same library surface from
//! config files.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fusion;
pub mod language;
pub mod planner;
pub mod world;

pub mod config;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
