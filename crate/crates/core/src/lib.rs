//! Simulation and analysis of the two-atom double-slit experiment: angular
//! click densities of photons spontaneously emitted by two laser-driven
//! two-level atoms, a quantum-jump click generator, the classical two-dipole
//! reference pattern, and fringe analysis on angular maps.

pub mod classical;
pub mod emission;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod quantum;
pub mod screen;
pub mod selftest;
pub mod steady;
pub mod trajectory;

pub use error::{Error, Result};
