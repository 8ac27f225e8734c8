//! Single-orbit machinery: masses, ellipse elements, the Kepler equation
//! (real and complex), Cartesian state synthesis and orbital invariants.
//!
//! A planet of reduced mass `m` (written 𝔪) around a central mass `M` (𝔐)
//! has the Hamiltonian `|y|²/(2m) - m M/|x|`. An ellipse `(a, e, N, P)` and a
//! mean anomaly `ℓ` determine `(y, x)` through the eccentric anomaly `ζ`,
//! the root of `ζ - e sin ζ = ℓ`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{rot1, rot3, wrap_angle, Vec3};

/// Eccentricities below this are treated as circular.
pub const TOL_E: f64 = 1e-9;
const MAX_ITER: usize = 64;

/// Central mass, planet masses and the smallness parameter μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSystem {
    pub m0: f64,
    pub masses: Vec<f64>,
    pub mu: f64,
}

impl MassSystem {
    pub fn new(m0: f64, masses: Vec<f64>, mu: f64) -> Result<Self> {
        let s = MassSystem { m0, masses, mu };
        s.validate()?;
        Ok(s)
    }

    /// `m0 = 1`, all planet masses 1, given μ.
    pub fn uniform(n: usize, mu: f64) -> Self {
        MassSystem { m0: 1.0, masses: vec![1.0; n], mu }
    }

    pub fn validate(&self) -> Result<()> {
        if self.masses.is_empty() {
            return Err(Error::InvalidInput("mass system has no planets".into()));
        }
        if !(self.m0 > 0.0 && self.m0.is_finite()) {
            return Err(Error::InvalidInput(format!("central mass {} must be positive", self.m0)));
        }
        if let Some(m) = self.masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidInput(format!("planet mass {m} must be positive")));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidInput(format!("mu = {} must be non-negative", self.mu)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    /// 𝔪_j = m0 m_j / (m0 + μ m_j), zero-based `j`.
    pub fn reduced_mass(&self, j: usize) -> f64 {
        self.m0 * self.masses[j] / (self.m0 + self.mu * self.masses[j])
    }

    /// 𝔐_j = m0 + μ m_j, zero-based `j`.
    pub fn central_mass(&self, j: usize) -> f64 {
        self.m0 + self.mu * self.masses[j]
    }

    /// Λ_j = 𝔪_j √(𝔐_j a).
    pub fn lambda(&self, j: usize, a: f64) -> f64 {
        delaunay_lambda(a, self.reduced_mass(j), self.central_mass(j))
    }

    /// Inverse of [`MassSystem::lambda`].
    pub fn semi_major_axis(&self, j: usize, lambda: f64) -> f64 {
        let m = self.reduced_mass(j);
        (lambda / m).powi(2) / self.central_mass(j)
    }
}

/// Λ = 𝔪 √(𝔐 a).
pub fn delaunay_lambda(a: f64, frak_m: f64, frak_big_m: f64) -> f64 {
    frak_m * (frak_big_m * a).sqrt()
}

/// Keplerian ellipse `(a, e, N, P)`: semi-major axis, eccentricity, unit
/// normal and unit perihelion direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub a: f64,
    pub e: f64,
    pub normal: Vec3,
    pub perihelion: Vec3,
}

impl Ellipse {
    pub fn new(a: f64, e: f64, normal: Vec3, perihelion: Vec3) -> Result<Self> {
        let el = Ellipse { a, e, normal, perihelion };
        el.validate()?;
        Ok(el)
    }

    /// Ellipse from inclination, longitude of the node and argument of
    /// perihelion: `N = R3(Ω)R1(i)k3`, `P = R3(Ω)R1(i)R3(ω)k1`.
    pub fn from_orientation(a: f64, e: f64, inclination: f64, node: f64, arg_peri: f64) -> Self {
        let f = rot3(node) * rot1(inclination);
        Ellipse { a, e, normal: f * Vec3::K3, perihelion: f * rot3(arg_peri) * Vec3::K1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidInput(format!("semi-major axis {} must be positive", self.a)));
        }
        if !(self.e > 0.0 && self.e < 1.0) {
            return Err(Error::InvalidInput(format!("eccentricity {} outside (0, 1)", self.e)));
        }
        let tol = 1e-10;
        let (nn, np, d) =
            (self.normal.norm(), self.perihelion.norm(), self.normal.dot(self.perihelion));
        if (nn - 1.0).abs() > tol || (np - 1.0).abs() > tol || d.abs() > tol {
            return Err(Error::InvalidInput(format!(
                "frame not orthonormal: |N| = {nn}, |P| = {np}, N·P = {d:e}"
            )));
        }
        Ok(())
    }

    /// `Q = N × P`.
    pub fn q(&self) -> Vec3 {
        self.normal.cross(self.perihelion)
    }

    /// Angular momentum vector `C = 𝔪 √(𝔐 a (1 - e²)) N`.
    pub fn angular_momentum(&self, frak_m: f64, frak_big_m: f64) -> Vec3 {
        self.normal * (frak_m * (frak_big_m * self.a * (1.0 - self.e * self.e)).sqrt())
    }
}

/// Cartesian momentum and position of one planet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitState {
    pub y: Vec3,
    pub x: Vec3,
}

/// Solves `ζ - e sin ζ = ℓ` for real `0 <= e < 1`.
///
/// The result lies on the lifted branch: `ζ - e sin ζ = ℓ` without reduction,
/// so ζ is continuous and increasing in ℓ.
pub fn solve_kepler_real(ecc: f64, ell: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&ecc) || !ell.is_finite() {
        return Err(Error::OutOfDomain(format!("Kepler equation with e = {ecc}, l = {ell}")));
    }
    // Reduce to [-π, π) and restore the shift at the end.
    let shift = ((ell + PI) / TAU).floor() * TAU;
    let m = ell - shift;
    let f = |z: f64| z - ecc * z.sin() - m;
    let (mut lo, mut hi) = (m - ecc, m + ecc);
    let mut z = (m + ecc * m.sin()).clamp(lo, hi);
    if ecc == 0.0 {
        return Ok(ell);
    }
    for _ in 0..MAX_ITER {
        let r = f(z);
        if r.abs() <= 1e-15 * (1.0 + m.abs()) {
            return Ok(z + shift);
        }
        if r > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let step = z - r / (1.0 - ecc * z.cos());
        z = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + m.abs()) {
            break;
        }
    }
    let r = f(z);
    if r.abs() <= 1e-13 {
        Ok(z + shift)
    } else {
        Err(Error::NoConvergence(format!("real Kepler solver residual {r:e}")))
    }
}

/// Root in (0, 1) of `ρ exp(√(1+ρ²)) / (1 + √(1+ρ²)) = 1`: the largest
/// eccentricity for which the Kepler solution is analytic on a uniform
/// complex strip.
pub fn levi_civita_limit() -> f64 {
    let g = |r: f64| {
        let s = (1.0 + r * r).sqrt();
        r * s.exp() / (1.0 + s) - 1.0
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-16 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Half-width `ℓ̄ = asinh(η/ē) - √(η² + ē²)` of the complex strip on which the
/// Kepler solution is analytic with `|1 - e cos ζ| >= 1 - η`.
pub fn strip_half_width(eta: f64, e_bar: f64) -> f64 {
    (eta / e_bar).asinh() - (eta * eta + e_bar * e_bar).sqrt()
}

/// Smallest `η` with a non-negative strip half-width, for `0 < ē < ê`.
pub fn eta_threshold(e_bar: f64) -> Result<f64> {
    if !(e_bar > 0.0 && e_bar < levi_civita_limit()) {
        return Err(Error::OutOfDomain(format!("e_bar = {e_bar} outside (0, ê)")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if strip_half_width(mid, e_bar) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Domain of the complex Kepler solver: `|e| <= e_bar`, `|Im ℓ| <= ℓ̄(η, ē)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexKeplerDomain {
    pub e_bar: f64,
    pub eta: f64,
}

impl ComplexKeplerDomain {
    pub fn new(e_bar: f64, eta: f64) -> Result<Self> {
        let d = ComplexKeplerDomain { e_bar, eta };
        if !(e_bar > 0.0 && e_bar < levi_civita_limit()) {
            return Err(Error::OutOfDomain(format!("e_bar = {e_bar} outside (0, ê)")));
        }
        if !(eta > 0.0 && eta < 1.0) || d.ell_bar() <= 0.0 {
            return Err(Error::OutOfDomain(format!(
                "eta = {eta} gives empty strip (half-width {:e})",
                d.ell_bar()
            )));
        }
        Ok(d)
    }

    pub fn ell_bar(&self) -> f64 {
        strip_half_width(self.eta, self.e_bar)
    }
}

/// Solves `ζ - e sin ζ = ℓ` for complex `e`, `ℓ` by continuation in `e`
/// from zero (16 steps, Newton at each step).
pub fn solve_kepler_complex(
    ecc: Complex64,
    ell: Complex64,
    domain: &ComplexKeplerDomain,
) -> Result<Complex64> {
    if ecc.norm() > domain.e_bar * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain(format!("|e| = {} > e_bar = {}", ecc.norm(), domain.e_bar)));
    }
    if ell.im.abs() > domain.ell_bar() {
        return Err(Error::OutOfDomain(format!(
            "|Im l| = {} exceeds strip half-width {}",
            ell.im.abs(),
            domain.ell_bar()
        )));
    }
    const STEPS: usize = 16;
    let mut z = ell;
    for k in 1..=STEPS {
        let ek = ecc * (k as f64 / STEPS as f64);
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let r = z - ek * z.sin() - ell;
            let dz = r / (1.0 - ek * z.cos());
            z -= dz;
            if dz.norm() <= 1e-15 * (1.0 + z.norm()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(format!("complex Kepler continuation step {k}")));
        }
    }
    let r = (z - ecc * z.sin() - ell).norm();
    if r > 1e-12 {
        return Err(Error::NoConvergence(format!("complex Kepler residual {r:e}")));
    }
    Ok(z)
}

/// Cartesian state on `el` at mean anomaly `ell`.
pub fn state_from_ellipse(el: &Ellipse, ell: f64, frak_m: f64, frak_big_m: f64) -> Result<OrbitState> {
    let (a, e) = (el.a, el.e);
    let zeta = solve_kepler_real(e, ell)?;
    let (s, c) = zeta.sin_cos();
    let w = (1.0 - e * e).sqrt();
    let den = 1.0 - e * c;
    let q = el.q();
    let x = el.perihelion * (a * (c - e)) + q * (a * w * s);
    let v = frak_m * (frak_big_m / a).sqrt() / den;
    let y = el.perihelion * (-v * s) + q * (v * w * c);
    Ok(OrbitState { y, x })
}

/// Angular momentum `C = x × y` and energy `|y|²/(2𝔪) - 𝔪𝔐/|x|`.
pub fn orbit_invariants(state: &OrbitState, frak_m: f64, frak_big_m: f64) -> Result<(Vec3, f64)> {
    let r = state.x.norm();
    if !(r > 0.0) {
        return Err(Error::ZeroPosition);
    }
    let c = state.x.cross(state.y);
    let h = state.y.norm2() / (2.0 * frak_m) - frak_m * frak_big_m / r;
    Ok((c, h))
}

/// Ellipse and mean anomaly of a bound state.
pub fn ellipse_from_state(state: &OrbitState, frak_m: f64, frak_big_m: f64) -> Result<(Ellipse, f64)> {
    let (c, h) = orbit_invariants(state, frak_m, frak_big_m)?;
    if !(h < 0.0) {
        return Err(Error::Unbound(h));
    }
    let a = -frak_m * frak_big_m / (2.0 * h);
    let lambda = delaunay_lambda(a, frak_m, frak_big_m);
    let cn = c.norm();
    if !(cn > 1e-14 * lambda) {
        return Err(Error::Degenerate(format!("angular momentum {cn:e} vanishes")));
    }
    let ratio = (cn / lambda).min(1.0);
    let e = ((1.0 - ratio) * (1.0 + ratio)).sqrt();
    if e < TOL_E {
        return Err(Error::CircularOrbit(e));
    }
    let normal = c / cn;
    // Laplace-Runge-Lenz direction.
    let lrl = state.y.cross(c) / (frak_m * frak_m * frak_big_m) - state.x / state.x.norm();
    let lrl = lrl - normal * lrl.dot(normal);
    let perihelion = lrl
        .normalized()
        .ok_or_else(|| Error::CircularOrbit(lrl.norm()))?;
    let q = normal.cross(perihelion);
    let cz = state.x.dot(perihelion) / a + e;
    let sz = state.x.dot(q) / (a * (1.0 - e * e).sqrt());
    let zeta = sz.atan2(cz);
    let ell = wrap_angle(zeta - e * zeta.sin());
    Ok((Ellipse { a, e, normal, perihelion }, ell))
}
