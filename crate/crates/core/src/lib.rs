//! Canonical coordinate charts for the planetary (1+n)-body problem.
//!
//! The crate builds the Kepler map framework (ellipse elements plus mean
//! anomalies), the Delaunay chart, the perihelia chart `P` with its auxiliary
//! radial variant, Deprit extraction, the averaged heliocentric interaction
//! and its quadrupole closed forms, secular equilibrium coefficients,
//! Diophantine testers and a leapfrog integrator. Every construction has a
//! numerical oracle in [`canonical_audit`] or in the test suites.
//!
//! Units: the gravitational constant is 1. Vectors are column vectors and
//! [`geom::Mat3`] stores entries row-major.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod canonical_audit;
pub mod charts;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geom;
pub mod kepler;
pub mod planetary;
pub mod secular;

pub use error::{Error, Result};
