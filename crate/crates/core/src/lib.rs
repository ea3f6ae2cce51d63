//! Simulation of the two-qubit DQC1 circuit with a post-selection filter
//! on the control qubit: correlation measures of the output, optimal
//! filters for purifying the auxiliary qubit, and the experiment harness
//! that regenerates the underlying datasets.

pub mod circuit;
pub mod correlations;
pub mod error;
pub mod harness;
pub mod purifier;
pub mod qla;
pub mod sampling;

pub use error::{Error, Result};
