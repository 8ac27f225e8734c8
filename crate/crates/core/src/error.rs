//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of chart construction, quadrature and integration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate node {node}: {detail}")]
    DegenerateNode { node: String, detail: String },
    #[error("vectors not orthogonal to the rotation axis (relative defect {0:e})")]
    NotCoplanar(f64),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("argument outside the admissible domain: {0}")]
    OutOfDomain(String),
    #[error("position vector vanishes")]
    ZeroPosition,
    #[error("orbit is not bound (energy {0:e} >= 0)")]
    Unbound(f64),
    #[error("orbit is circular to tolerance (e = {0:e}); perihelion undefined")]
    CircularOrbit(f64),
    #[error("degenerate orbit: {0}")]
    Degenerate(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("collision: {0}")]
    Collision(String),
    #[error("orbits {i} and {j} cross (minimum sampled distance {distance:e})")]
    OrbitCrossing { i: usize, j: usize, distance: f64 },
    #[error("ill-conditioned fit (condition number {0:e})")]
    IllConditioned(f64),
    #[error("enumeration cap exceeded ({0} lattice vectors)")]
    CapExceeded(u128),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
