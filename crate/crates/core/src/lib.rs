//! Finite-dimensional toolkit for second-order spectral perturbation theory:
//! double operator integrals, divided-difference kernel factorizations,
//! Littlewood-Paley/Besov seminorms, spectral shift functions and the trace
//! formulae tying them together.

pub mod besov;
pub mod doi;
pub mod error;
pub mod factorize;
pub mod funcmodel;
pub mod matrix;
pub mod shift;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
