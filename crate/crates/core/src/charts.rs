//! Coordinate charts on the space of `n` co-focal ellipses: Delaunay, the
//! perihelia chart `P`, its radial variant `P̃`, and Deprit extraction.
//!
//! Conventions shared by the charts:
//!
//! * `C^(j) = x^(j) × y^(j)` is the angular momentum of planet `j` and
//!   `S^(j) = Σ_{i≥j} C^(i)` the partial sums (indices are 1-based in the
//!   documentation and 0-based in code).
//! * `P` chain: `ν_1 = k3 × S^(1)`, `ν_j = P^(j-1) × S^(j)`,
//!   `n_j = S^(j) × P^(j)`; actions `Θ_0 = S^(1)·k3`,
//!   `Θ_{j-1} = S^(j)·P^(j-1)`, `χ_{j-1} = |S^(j)|`; angles
//!   `ϑ_0 = α_{k3}(k1, ν_1)`, `ϑ_{j-1} = α_{P^(j-1)}(n_{j-1}, ν_j)`,
//!   `κ_{j-1} = α_{S^(j)}(ν_j, n_j)`.
//! * Inverse frames: `T_j = R3(ϑ_{j-1}) R1(ι_j)`, `S_j = R3(κ_{j-1}) R1(i_j)`
//!   with `cos ι_j = Θ_{j-1}/χ_{j-1}`, `cos i_j = Θ_j/χ_{j-1}` and the
//!   virtual trailing entries `Θ_n = χ_n = 0`.
//! * When every `C^(j)` is parallel to `k3` only `ν_1` degenerates; the chart
//!   then takes `ν_1 = k1`, which yields `Θ_0 = χ_0`, `ϑ_0 = 0`, `Θ_i = 0`,
//!   `ϑ_i = π`.
//!
//! Flat orderings used by the audits (momenta first, conjugate positions
//! second, in matching order): `P` is `(Θ, χ, Λ; ϑ, κ, ℓ)`, Delaunay is
//! `(H, Γ, Λ; h, g, ℓ)` and `P̃` is `(Θ, χ, R; ϑ, κ, r)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{check_node, oriented_angle, rot1, rot3, wrap_angle, Mat3, Vec3, TOL_NODE};
use crate::kepler::{ellipse_from_state, state_from_ellipse, Ellipse, MassSystem};
use crate::planetary::PhaseState;

/// Ordered list of co-focal ellipses, innermost first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseChain {
    pub ellipses: Vec<Ellipse>,
}

impl EllipseChain {
    pub fn new(ellipses: Vec<Ellipse>) -> Result<Self> {
        if ellipses.is_empty() {
            return Err(Error::InvalidInput("empty ellipse chain".into()));
        }
        for el in &ellipses {
            el.validate()?;
        }
        Ok(EllipseChain { ellipses })
    }

    pub fn n(&self) -> usize {
        self.ellipses.len()
    }

    /// Angular momenta `C^(j)`.
    pub fn angular_momenta(&self, masses: &MassSystem) -> Vec<Vec3> {
        self.ellipses
            .iter()
            .enumerate()
            .map(|(j, el)| el.angular_momentum(masses.reduced_mass(j), masses.central_mass(j)))
            .collect()
    }

    /// Cartesian state of the chain at mean anomalies `ell`.
    pub fn state(&self, masses: &MassSystem, ell: &[f64]) -> Result<PhaseState> {
        check_len("ell", ell.len(), self.n())?;
        let mut y = Vec::with_capacity(self.n());
        let mut x = Vec::with_capacity(self.n());
        for (j, el) in self.ellipses.iter().enumerate() {
            let s = state_from_ellipse(el, ell[j], masses.reduced_mass(j), masses.central_mass(j))?;
            y.push(s.y);
            x.push(s.x);
        }
        Ok(PhaseState { y, x })
    }

    /// Inverse of [`EllipseChain::state`].
    pub fn from_state(state: &PhaseState, masses: &MassSystem) -> Result<(Self, Vec<f64>)> {
        check_len("masses", masses.n(), state.n())?;
        let mut ellipses = Vec::with_capacity(state.n());
        let mut ell = Vec::with_capacity(state.n());
        for j in 0..state.n() {
            let (el, l) =
                ellipse_from_state(&state.planet(j), masses.reduced_mass(j), masses.central_mass(j))?;
            ellipses.push(el);
            ell.push(l);
        }
        Ok((EllipseChain { ellipses }, ell))
    }
}

/// Partial sums `S^(j) = Σ_{i≥j} C^(i)`.
pub fn partial_momenta(c: &[Vec3]) -> Vec<Vec3> {
    let mut s = vec![Vec3::ZERO; c.len()];
    let mut acc = Vec3::ZERO;
    for j in (0..c.len()).rev() {
        acc += c[j];
        s[j] = acc;
    }
    s
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidInput(format!("{name} has length {got}, expected {want}")));
    }
    Ok(())
}

/// Delaunay coordinates `(H, Γ, Λ; h, g, ℓ)` of `n` planets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaunayCoords {
    pub big_h: Vec<f64>,
    pub big_gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub ell: Vec<f64>,
}

impl DelaunayCoords {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        [&self.big_h, &self.big_gamma, &self.lambda, &self.h, &self.g, &self.ell]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }

    pub fn from_slice(n: usize, v: &[f64]) -> Result<Self> {
        check_len("Delaunay vector", v.len(), 6 * n)?;
        let b = |k: usize| v[k * n..(k + 1) * n].to_vec();
        Ok(DelaunayCoords { big_h: b(0), big_gamma: b(1), lambda: b(2), h: b(3), g: b(4), ell: b(5) })
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        for (name, len) in [
            ("H", self.big_h.len()),
            ("Gamma", self.big_gamma.len()),
            ("h", self.h.len()),
            ("g", self.g.len()),
            ("ell", self.ell.len()),
        ] {
            check_len(name, len, n)?;
        }
        for j in 0..n {
            let (hh, gg, ll) = (self.big_h[j], self.big_gamma[j], self.lambda[j]);
            if !(gg > 0.0 && ll > gg && hh.abs() < gg) {
                return Err(Error::DomainViolation(format!(
                    "Delaunay actions of planet {j}: H = {hh}, Gamma = {gg}, Lambda = {ll}"
                )));
            }
        }
        Ok(())
    }
}

/// Delaunay coordinates of a chain; `ell` supplies the mean anomalies.
pub fn delaunay_from_ellipses(chain: &EllipseChain, masses: &MassSystem, ell: &[f64]) -> Result<DelaunayCoords> {
    check_len("masses", masses.n(), chain.n())?;
    check_len("ell", ell.len(), chain.n())?;
    let n = chain.n();
    let mut out = DelaunayCoords {
        big_h: Vec::with_capacity(n),
        big_gamma: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
        g: Vec::with_capacity(n),
        ell: ell.iter().map(|l| wrap_angle(*l)).collect(),
    };
    for (j, (el, c)) in chain.ellipses.iter().zip(chain.angular_momenta(masses)).enumerate() {
        let node = check_node(&format!("delaunay node {}", j + 1), Vec3::K3.cross(c), Vec3::K3, c)?;
        out.big_h.push(c.z);
        out.big_gamma.push(c.norm());
        out.lambda.push(masses.lambda(j, el.a));
        out.h.push(oriented_angle(Vec3::K1, node, Vec3::K3)?);
        out.g.push(oriented_angle(node, el.perihelion, c)?);
    }
    Ok(out)
}

/// Ellipses of Delaunay coordinates (mean anomalies are ignored).
pub fn ellipses_from_delaunay(coords: &DelaunayCoords, masses: &MassSystem) -> Result<EllipseChain> {
    coords.validate()?;
    check_len("masses", masses.n(), coords.n())?;
    let ellipses = (0..coords.n())
        .map(|j| {
            let inc = (coords.big_h[j] / coords.big_gamma[j]).acos();
            let f = rot3(coords.h[j]) * rot1(inc);
            let r = coords.big_gamma[j] / coords.lambda[j];
            Ellipse {
                a: masses.semi_major_axis(j, coords.lambda[j]),
                e: ((1.0 - r) * (1.0 + r)).sqrt(),
                normal: f * Vec3::K3,
                perihelion: f * rot3(coords.g[j]) * Vec3::K1,
            }
        })
        .collect();
    Ok(EllipseChain { ellipses })
}

/// Delaunay map: coordinates to Cartesian state.
pub fn delaunay_map(coords: &DelaunayCoords, masses: &MassSystem) -> Result<PhaseState> {
    ellipses_from_delaunay(coords, masses)?.state(masses, &coords.ell)
}

/// Inverse Delaunay map.
pub fn delaunay_map_inverse(state: &PhaseState, masses: &MassSystem) -> Result<DelaunayCoords> {
    let (chain, ell) = EllipseChain::from_state(state, masses)?;
    delaunay_from_ellipses(&chain, masses, &ell)
}

/// Perihelia coordinates `(Θ, χ, Λ; ϑ, κ, ℓ)` of `n` planets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PCoords {
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub ell: Vec<f64>,
}

impl PCoords {
    pub fn n(&self) -> usize {
        self.chi.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        [&self.theta, &self.chi, &self.lambda, &self.vartheta, &self.kappa, &self.ell]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }

    pub fn from_slice(n: usize, v: &[f64]) -> Result<Self> {
        check_len("P vector", v.len(), 6 * n)?;
        let b = |k: usize| v[k * n..(k + 1) * n].to_vec();
        Ok(PCoords { theta: b(0), chi: b(1), lambda: b(2), vartheta: b(3), kappa: b(4), ell: b(5) })
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidInput("P coordinates for zero planets".into()));
        }
        for (name, len) in [
            ("theta", self.theta.len()),
            ("lambda", self.lambda.len()),
            ("vartheta", self.vartheta.len()),
            ("kappa", self.kappa.len()),
            ("ell", self.ell.len()),
        ] {
            check_len(name, len, n)?;
        }
        Ok(())
    }
}

/// `|C^(j)|` from the perihelia coordinates, closed form (0-based `j`).
///
/// For `j < n-1`:
/// `√(χ_{j}² + χ_{j+1}² - 2Θ_{j+1}² + 2√((χ_{j+1}² - Θ_{j+1}²)(χ_j² - Θ_{j+1}²)) cos ϑ_{j+1})`;
/// the last momentum has norm `χ_{n-1}`.
pub fn angular_momentum_norm(theta: &[f64], chi: &[f64], vartheta: &[f64], j: usize) -> f64 {
    let n = chi.len();
    if j + 1 == n {
        return chi[j];
    }
    let (cp, c, t) = (chi[j], chi[j + 1], theta[j + 1]);
    let rad = ((c * c - t * t) * (cp * cp - t * t)).max(0.0).sqrt();
    (cp * cp + c * c - 2.0 * t * t + 2.0 * rad * vartheta[j + 1].cos()).max(0.0).sqrt()
}

/// Frame chain produced by the inverse construction.
#[derive(Debug, Clone)]
pub struct ChainFrames {
    /// Partial momenta `S^(j)`.
    pub s: Vec<Vec3>,
    /// Directions `G_j k3`: perihelia for `P`, radial directions for `P̃`.
    pub d: Vec<Vec3>,
    /// Momenta `C^(j) = S^(j) - S^(j+1)`.
    pub c: Vec<Vec3>,
}

fn chain_domain(theta: &[f64], chi: &[f64]) -> Result<()> {
    let n = chi.len();
    for (j, c) in chi.iter().enumerate() {
        if !(*c > 0.0 && c.is_finite()) {
            return Err(Error::DomainViolation(format!("chi_{j} = {c} must be positive")));
        }
    }
    if !(theta[0].abs() <= chi[0]) {
        return Err(Error::DomainViolation(format!("|Theta_0| = {} exceeds chi_0 = {}", theta[0].abs(), chi[0])));
    }
    for i in 1..n {
        let bound = chi[i - 1].min(chi[i]);
        if !(theta[i].abs() < bound) {
            return Err(Error::DomainViolation(format!(
                "|Theta_{i}| = {} not below min(chi_{}, chi_{i}) = {bound}",
                theta[i].abs(),
                i - 1
            )));
        }
    }
    Ok(())
}

fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// Inclinations `(ι_j, i_j)` (0-based `j`).
fn chain_inclinations(theta: &[f64], chi: &[f64], j: usize) -> (f64, f64) {
    let next = theta.get(j + 1).copied().unwrap_or(0.0);
    (clamped_acos(theta[j] / chi[j]), clamped_acos(next / chi[j]))
}

/// Builds `S^(j)`, `G_j k3` and `C^(j)` from `(Θ, χ, ϑ, κ)`.
pub fn chain_frames(theta: &[f64], chi: &[f64], vartheta: &[f64], kappa: &[f64]) -> Result<ChainFrames> {
    let n = chi.len();
    check_len("theta", theta.len(), n)?;
    check_len("vartheta", vartheta.len(), n)?;
    check_len("kappa", kappa.len(), n)?;
    chain_domain(theta, chi)?;
    let mut f = Mat3::IDENTITY;
    let mut s = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for j in 0..n {
        let (iota, inc) = chain_inclinations(theta, chi, j);
        let fj = f * rot3(vartheta[j]) * rot1(iota);
        s.push(fj * Vec3::K3 * chi[j]);
        f = fj * rot3(kappa[j]) * rot1(inc);
        d.push(f * Vec3::K3);
    }
    let c = (0..n).map(|j| if j + 1 < n { s[j] - s[j + 1] } else { s[j] }).collect();
    Ok(ChainFrames { s, d, c })
}

/// Closed-form `R^(j) = T_j S_j` and `s^(j) = T_j k3` (0-based `j`).
pub fn rotation_entries(j: usize, theta: &[f64], chi: &[f64], vartheta: &[f64], kappa: &[f64]) -> (Mat3, Vec3) {
    let (iota, inc) = chain_inclinations(theta, chi, j);
    let (si, ci) = iota.sin_cos();
    let (sn, cn) = inc.sin_cos();
    let (sv, cv) = vartheta[j].sin_cos();
    let (sk, ck) = kappa[j].sin_cos();
    let u = -cn * ci * ck + si * sn;
    let w = sn * ci * ck + si * cn;
    let r = Mat3::from_rows([
        [ck * cv - sk * ci * sv, -cn * sk * cv + sv * u, sn * sk * cv + sv * w],
        [ck * sv + sk * ci * cv, -cn * sk * sv - cv * u, sn * sk * sv - cv * w],
        [sk * si, cn * ck * si + sn * ci, -sn * ck * si + cn * ci],
    ]);
    (r, Vec3::new(si * sv, -si * cv, ci))
}

/// Raw chain coordinates `(Θ, χ, ϑ, κ)` from partial momenta and directions.
struct ChainCoords {
    theta: Vec<f64>,
    chi: Vec<f64>,
    vartheta: Vec<f64>,
    kappa: Vec<f64>,
}

fn extract_chain(s: &[Vec3], d: &[Vec3], dir_name: &str) -> Result<ChainCoords> {
    let n = s.len();
    let mut out = ChainCoords {
        theta: Vec::with_capacity(n),
        chi: Vec::with_capacity(n),
        vartheta: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
    };
    let mut prev_n = Vec3::ZERO;
    for j in 0..n {
        let chi = s[j].norm();
        if !(chi > 0.0) {
            return Err(Error::DegenerateNode {
                node: format!("S^({})", j + 1),
                detail: "partial angular momentum vanishes".into(),
            });
        }
        let (nu, theta, vartheta) = if j == 0 {
            let raw = Vec3::K3.cross(s[0]);
            let nu = if raw.norm() <= TOL_NODE * chi { Vec3::K1 } else { raw };
            (nu, s[0].z, oriented_angle(Vec3::K1, nu, Vec3::K3)?)
        } else {
            let nu = check_node(&format!("nu_{}", j + 1), d[j - 1].cross(s[j]), d[j - 1], s[j])?;
            (nu, s[j].dot(d[j - 1]), oriented_angle(prev_n, nu, d[j - 1])?)
        };
        let nj = check_node(&format!("n_{} ({dir_name})", j + 1), s[j].cross(d[j]), s[j], d[j])?;
        out.kappa.push(oriented_angle(nu, nj, s[j])?);
        out.theta.push(theta);
        out.chi.push(chi);
        out.vartheta.push(vartheta);
        prev_n = nj;
    }
    for i in 1..n {
        let bound = out.chi[i - 1].min(out.chi[i]);
        if !(out.theta[i].abs() < bound) {
            return Err(Error::DomainViolation(format!(
                "extracted |Theta_{i}| = {} not below {bound}",
                out.theta[i].abs()
            )));
        }
    }
    Ok(out)
}

/// Perihelia coordinates of a chain; `ell` supplies the mean anomalies.
pub fn p_from_ellipses(chain: &EllipseChain, masses: &MassSystem, ell: &[f64]) -> Result<PCoords> {
    check_len("masses", masses.n(), chain.n())?;
    check_len("ell", ell.len(), chain.n())?;
    let s = partial_momenta(&chain.angular_momenta(masses));
    let d: Vec<Vec3> = chain.ellipses.iter().map(|el| el.perihelion).collect();
    let cc = extract_chain(&s, &d, "perihelion")?;
    Ok(PCoords {
        theta: cc.theta,
        chi: cc.chi,
        lambda: chain.ellipses.iter().enumerate().map(|(j, el)| masses.lambda(j, el.a)).collect(),
        vartheta: cc.vartheta,
        kappa: cc.kappa,
        ell: ell.iter().map(|l| wrap_angle(*l)).collect(),
    })
}

/// Ellipses of perihelia coordinates (mean anomalies are ignored).
pub fn ellipses_from_p(coords: &PCoords, masses: &MassSystem) -> Result<EllipseChain> {
    coords.check_shape()?;
    check_len("masses", masses.n(), coords.n())?;
    let frames = chain_frames(&coords.theta, &coords.chi, &coords.vartheta, &coords.kappa)?;
    let mut ellipses = Vec::with_capacity(coords.n());
    for j in 0..coords.n() {
        let lambda = coords.lambda[j];
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::DomainViolation(format!("Lambda_{j} = {lambda} must be positive")));
        }
        let c = frames.c[j];
        let cn = c.norm();
        let r = cn / lambda;
        if !(cn > 0.0 && r < 1.0) {
            return Err(Error::DomainViolation(format!(
                "planet {j}: |C| = {cn} must lie in (0, Lambda = {lambda})"
            )));
        }
        let e = ((1.0 - r) * (1.0 + r)).sqrt();
        if e < crate::kepler::TOL_E {
            return Err(Error::DomainViolation(format!("planet {j} is circular (e = {e:e})")));
        }
        ellipses.push(Ellipse {
            a: masses.semi_major_axis(j, lambda),
            e,
            normal: c / cn,
            perihelion: frames.d[j],
        });
    }
    Ok(EllipseChain { ellipses })
}

/// Perihelia map: coordinates to Cartesian state.
pub fn p_map(coords: &PCoords, masses: &MassSystem) -> Result<PhaseState> {
    ellipses_from_p(coords, masses)?.state(masses, &coords.ell)
}

/// Inverse perihelia map.
pub fn p_map_inverse(state: &PhaseState, masses: &MassSystem) -> Result<PCoords> {
    let (chain, ell) = EllipseChain::from_state(state, masses)?;
    p_from_ellipses(&chain, masses, &ell)
}

/// `S⁻ : (Θ, χ, Λ, ϑ, κ, ℓ) ↦ (-Θ, χ, Λ, -ϑ, κ, ℓ)`.
pub fn reflect_s_minus(coords: &PCoords) -> PCoords {
    PCoords {
        theta: coords.theta.iter().map(|t| -t).collect(),
        vartheta: coords.vartheta.iter().map(|v| wrap_angle(-v)).collect(),
        ..coords.clone()
    }
}

/// `R₂⁻`: negates the second component of every `y^(j)` and `x^(j)`.
pub fn reflect_r2(state: &PhaseState) -> PhaseState {
    let flip = |v: &Vec3| Vec3::new(v.x, -v.y, v.z);
    PhaseState { y: state.y.iter().map(flip).collect(), x: state.x.iter().map(flip).collect() }
}

/// Radial perihelia coordinates `(Θ̃, χ̃, R̃; ϑ̃, κ̃, r̃)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildePCoords {
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
    pub big_r: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub r: Vec<f64>,
}

impl TildePCoords {
    pub fn n(&self) -> usize {
        self.chi.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        [&self.theta, &self.chi, &self.big_r, &self.vartheta, &self.kappa, &self.r]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }

    pub fn from_slice(n: usize, v: &[f64]) -> Result<Self> {
        check_len("tilde-P vector", v.len(), 6 * n)?;
        let b = |k: usize| v[k * n..(k + 1) * n].to_vec();
        Ok(TildePCoords { theta: b(0), chi: b(1), big_r: b(2), vartheta: b(3), kappa: b(4), r: b(5) })
    }
}

/// `x^(j) = r̃_j G_j k3`, `y^(j) = (R̃_j/r̃_j) x^(j) + C̃^(j) × x^(j) / r̃_j²`.
pub fn tilde_p_map(coords: &TildePCoords) -> Result<PhaseState> {
    let n = coords.n();
    check_len("big_r", coords.big_r.len(), n)?;
    check_len("r", coords.r.len(), n)?;
    let frames = chain_frames(&coords.theta, &coords.chi, &coords.vartheta, &coords.kappa)?;
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for j in 0..n {
        let r = coords.r[j];
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::DomainViolation(format!("r_{j} = {r} must be positive")));
        }
        let xj = frames.d[j] * r;
        y.push(xj * (coords.big_r[j] / r) + frames.c[j].cross(xj) / (r * r));
        x.push(xj);
    }
    Ok(PhaseState { y, x })
}

/// Inverse of [`tilde_p_map`]: radial pairs `R̃ = y·x/|x|`, `r̃ = |x|`.
pub fn tilde_p_map_inverse(state: &PhaseState) -> Result<TildePCoords> {
    let n = state.n();
    let c: Vec<Vec3> = (0..n).map(|j| state.x[j].cross(state.y[j])).collect();
    let s = partial_momenta(&c);
    let mut d = Vec::with_capacity(n);
    for x in &state.x {
        d.push(x.normalized().ok_or(Error::ZeroPosition)?);
    }
    let cc = extract_chain(&s, &d, "radial")?;
    Ok(TildePCoords {
        theta: cc.theta,
        chi: cc.chi,
        big_r: (0..n).map(|j| state.y[j].dot(d[j])).collect(),
        vartheta: cc.vartheta,
        kappa: cc.kappa,
        r: state.x.iter().map(|x| x.norm()).collect(),
    })
}

/// Deprit coordinates: `Ψ = (Ψ_{-1}, Ψ_0, …, Ψ_{n-2})`, `Γ`, `Λ` and their
/// conjugate angles `ψ`, `γ`, `ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepritCoords {
    pub big_psi: Vec<f64>,
    pub big_gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub psi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub ell: Vec<f64>,
}

/// Deprit coordinates of a chain.
///
/// Nodes `n_0 = k3 × S^(1)`, `n_i = S^(i) × S^(i+1)`, `n_n = -n_{n-1}`.
/// `Ψ_{-1} = S^(1)·k3` and `Ψ_{k-1} = |S^(k)|` for `k = 1..n-1`, so that
/// `ψ_{k-1} = α_{S^(k)}(n_{k-1}, n_k)` is the angle about the momentum whose
/// norm it is paired with. `Γ_i = |C^(i)|`, `γ_i = α_{C^(i)}(n_i, P^(i))`.
pub fn deprit_from_ellipses(chain: &EllipseChain, masses: &MassSystem, ell: &[f64]) -> Result<DepritCoords> {
    check_len("masses", masses.n(), chain.n())?;
    check_len("ell", ell.len(), chain.n())?;
    let n = chain.n();
    let c = chain.angular_momenta(masses);
    let s = partial_momenta(&c);
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(check_node("deprit n_0", Vec3::K3.cross(s[0]), Vec3::K3, s[0])?);
    for i in 1..n {
        nodes.push(check_node(&format!("deprit n_{i}"), s[i - 1].cross(s[i]), s[i - 1], s[i])?);
    }
    nodes.push(-nodes[n - 1]);
    let mut big_psi = vec![s[0].z];
    let mut psi = vec![oriented_angle(Vec3::K1, nodes[0], Vec3::K3)?];
    for k in 1..n {
        big_psi.push(s[k - 1].norm());
        psi.push(oriented_angle(nodes[k - 1], nodes[k], s[k - 1])?);
    }
    let mut gamma = Vec::with_capacity(n);
    for i in 0..n {
        gamma.push(oriented_angle(nodes[i + 1], chain.ellipses[i].perihelion, c[i])?);
    }
    Ok(DepritCoords {
        big_psi,
        big_gamma: c.iter().map(|v| v.norm()).collect(),
        lambda: chain.ellipses.iter().enumerate().map(|(j, el)| masses.lambda(j, el.a)).collect(),
        psi,
        gamma,
        ell: ell.iter().map(|l| wrap_angle(*l)).collect(),
    })
}

/// Equilibrium of the reflection `S⁻`: `Θ = 0`, `ϑ = π` for every index.
pub fn is_reflection_fixed(coords: &PCoords, tol: f64) -> bool {
    let r = reflect_s_minus(coords);
    coords.theta.iter().zip(&r.theta).all(|(a, b)| (a - b).abs() <= tol)
        && coords
            .vartheta
            .iter()
            .zip(&r.vartheta)
            .all(|(a, b)| crate::geom::angle_diff(*a, *b).abs() <= tol)
}

/// `π`, the equilibrium value of every `ϑ_i` in the planar configuration.
pub const PLANAR_VARTHETA: f64 = PI;
