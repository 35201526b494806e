//! Simulation and empirical verification toolkit for the two-cell additive
//! automaton over a finite abelian p-group, driven by chains with complete
//! connections: regeneration sampling, renewal statistics, binomial-residue
//! machinery and Cesàro-average convergence to the uniform product measure.

pub mod automaton;
pub mod cesaro;
pub mod chains;
pub mod config;
pub mod error;
pub mod group;
pub mod renewal;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
