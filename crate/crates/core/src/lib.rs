//! Topological uncertainty for dense feed-forward networks.
//!
//! A trained network is summarised by the persistence diagrams of the
//! activation graphs it builds on its training data. New inputs are scored by
//! how far their diagrams fall from the per-class Fréchet means.

pub mod cli;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod monitor;
pub mod profile;
pub mod rng;
mod textio;
pub mod topology;

pub use error::{Error, Result};
