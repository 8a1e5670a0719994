//! Low-energy threshold analysis for discrete Schroedinger operators
//! H = H₀ + V on the integer lattice with finite-rank, compactly supported V.

pub mod cli;
pub mod error;
pub mod expansion;
pub mod field;
pub mod io;
pub mod kernel;
pub mod matrix;
pub mod oracle;
pub mod potential;
pub mod sequence;
pub mod series;
pub mod threshold;

pub use error::{Error, Result};
pub use field::{Field, Float, Rational, Scalar};
