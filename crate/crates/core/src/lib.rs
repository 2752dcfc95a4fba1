//! Exact diagonalization and time evolution of one or two fermions hopping on
//! a square lattice with nuclear-like wells and power-law repulsion.

pub mod basis;
pub mod cli;
pub mod dressing;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod interactions;
pub mod lattice;
pub mod operators;
pub mod potentials;
pub mod protocols;
pub mod solver;

pub use error::{Error, Result};
