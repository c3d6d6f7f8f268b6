//! Surface-code quantum-memory laboratory.
//!
//! Generates stabilizer-measurement circuits for rotated surface codes,
//! simulates them under circuit-level Pauli noise (optionally with analog
//! readout), decodes with exact minimum-weight perfect matching and with a
//! recurrent neural network, and fits logical error rates and suppression
//! factors.

pub mod analysis;
pub mod bits;
pub mod chp;
pub mod circuit;
pub mod config;
pub mod container;
pub mod dem;
pub mod error;
pub mod graph;
pub mod layout;
pub mod mwpm;
pub mod nn;
pub mod noise;
pub mod rng;
pub mod runner;
pub mod sim;
pub mod svg;
pub mod syndrome;

pub mod blossom;
pub use error::{Error, Result};
