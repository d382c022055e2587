//! Simulation and spectral toolkit for group-driven random walks with
//! stationary increments: exact group algebra, phase-space actions, a
//! deterministic walk engine, truncated transfer operators in frequency
//! space, and the statistical test batteries built on top of them.

pub mod error;
pub mod group;
pub mod phase;
pub mod rng;
pub mod scenarios;
pub mod spectral;
pub mod stats;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
