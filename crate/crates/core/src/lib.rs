//! Central configurations of the n-body problem under the mass metric, their
//! Morse indices on the rotation quotient and their fixed point indices under
//! the normalized-gradient map.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: mass metric, centering, tangent frames, rotation orbits.
//! - [`potential`]: the pair potential, its gradient and Hessian.
//! - [`solver`]: Newton iteration for central configurations, class keys.
//! - [`census`]: multistart enumeration and deduplication.
//! - [`index`]: restricted Hessian, Morse index, the map `F` and its index.
//! - [`topology`]: Poincare polynomials and Lefschetz numbers.
//! - [`io`] and [`cli`]: problem files, records and the command line.

pub mod census;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod index;
pub mod io;
pub mod potential;
pub mod solver;
pub mod topology;

pub use census::{census, CensusEntry, CensusOptions};
pub use error::{CcError, Result};
pub use geometry::{Configuration, MassSystem, TangentFrame};
pub use index::{SpectralReport, TheoremReport};
pub use solver::{CentralConfigCandidate, Group, IsometryClassKey, NewtonOptions};
