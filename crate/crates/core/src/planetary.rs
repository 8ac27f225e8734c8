//! Heliocentric planetary Hamiltonian, mean-anomaly averages by periodic
//! trapezoid quadrature, the expansion of the averaged interaction in the
//! semi-major-axis ratio, and its closed-form quadrupole expressions.

use serde::{Deserialize, Serialize};

use crate::charts::EllipseChain;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::kepler::{state_from_ellipse, Ellipse, MassSystem, OrbitState};

/// Cartesian state `(y, x)` of `n` planets. Flat ordering `(y_1..y_n; x_1..x_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub y: Vec<Vec3>,
    pub x: Vec<Vec3>,
}

impl PhaseState {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn planet(&self, j: usize) -> OrbitState {
        OrbitState { y: self.y[j], x: self.x[j] }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.y.iter().chain(&self.x).flat_map(|v| v.to_array()).collect()
    }

    pub fn from_slice(n: usize, v: &[f64]) -> Result<Self> {
        if v.len() != 6 * n {
            return Err(Error::InvalidInput(format!("state vector length {} != {}", v.len(), 6 * n)));
        }
        let vec = |k: usize| Vec3::new(v[3 * k], v[3 * k + 1], v[3 * k + 2]);
        Ok(PhaseState { y: (0..n).map(vec).collect(), x: (n..2 * n).map(vec).collect() })
    }

    pub fn max_abs_diff(&self, other: &PhaseState) -> f64 {
        self.to_vec().iter().zip(other.to_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Total angular momentum `S^(1) = Σ x^(j) × y^(j)`.
    pub fn total_angular_momentum(&self) -> Vec3 {
        self.x.iter().zip(&self.y).map(|(x, y)| x.cross(*y)).sum()
    }

    /// Smallest of `|x^(i)|` and `|x^(i) - x^(j)|`.
    pub fn min_separation(&self) -> f64 {
        let mut d = self.x.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                d = d.min((self.x[i] - self.x[j]).norm());
            }
        }
        d
    }
}

fn check_collision_free(state: &PhaseState) -> Result<()> {
    let scale = state.x.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let d = state.min_separation();
    if !(d > 1e-14 * scale) {
        return Err(Error::Collision(format!("minimum separation {d:e}")));
    }
    Ok(())
}

/// Sum of the Keplerian energies `|y|²/(2𝔪) - 𝔪𝔐/|x|`.
pub fn kepler_energy(state: &PhaseState, masses: &MassSystem) -> Result<f64> {
    check_collision_free(state)?;
    Ok((0..state.n())
        .map(|j| {
            let (m, big_m) = (masses.reduced_mass(j), masses.central_mass(j));
            state.y[j].norm2() / (2.0 * m) - m * big_m / state.x[j].norm()
        })
        .sum())
}

/// `y^(i)·y^(j)/m0 - m_i m_j/|x^(i) - x^(j)|` (without the factor μ).
pub fn pair_perturbation(i: usize, j: usize, state: &PhaseState, masses: &MassSystem) -> Result<f64> {
    let d = (state.x[i] - state.x[j]).norm();
    if !(d > 0.0) {
        return Err(Error::Collision(format!("planets {i} and {j} coincide")));
    }
    Ok(state.y[i].dot(state.y[j]) / masses.m0 - masses.masses[i] * masses.masses[j] / d)
}

/// Heliocentric Hamiltonian: Keplerian part plus `μ Σ_{i<j}` pair terms.
pub fn h_hel(state: &PhaseState, masses: &MassSystem) -> Result<f64> {
    let mut h = kepler_energy(state, masses)?;
    for i in 0..state.n() {
        for j in i + 1..state.n() {
            h += masses.mu * pair_perturbation(i, j, state, masses)?;
        }
    }
    Ok(h)
}

/// Uniform nodes on `[0, 2π)` with equal weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub points: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { points: 256 }
    }
}

impl QuadratureGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::InvalidInput(format!("grid size {points} must be a power of two >= 2")));
        }
        Ok(QuadratureGrid { points })
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = std::f64::consts::TAU / self.points as f64;
        (0..self.points).map(move |k| k as f64 * h)
    }
}

/// Values that can be averaged.
pub trait Average: Copy {
    fn zero() -> Self;
    fn add(self, o: Self) -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Average for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Average for Vec3 {
    fn zero() -> Self {
        Vec3::ZERO
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// States of one planet at the grid nodes.
pub fn orbit_samples(el: &Ellipse, frak_m: f64, frak_big_m: f64, grid: QuadratureGrid) -> Result<Vec<OrbitState>> {
    grid.nodes().map(|l| state_from_ellipse(el, l, frak_m, frak_big_m)).collect()
}

/// `(1/2π) ∫ f(state(ℓ)) dℓ` by the periodic trapezoid rule.
pub fn single_average<V, F>(el: &Ellipse, frak_m: f64, frak_big_m: f64, grid: QuadratureGrid, mut f: F) -> Result<V>
where
    V: Average,
    F: FnMut(&OrbitState) -> Result<V>,
{
    let mut acc = V::zero();
    for l in grid.nodes() {
        acc = acc.add(f(&state_from_ellipse(el, l, frak_m, frak_big_m)?)?);
    }
    Ok(acc.scale(1.0 / grid.points as f64))
}

/// Minimum distance between two ellipses (as curves), from a grid search
/// refined by successive local zooms.
pub fn min_orbit_distance(ei: &Ellipse, ej: &Ellipse) -> f64 {
    let point = |el: &Ellipse, u: f64| {
        let (s, c) = u.sin_cos();
        el.perihelion * (el.a * (c - el.e)) + el.q() * (el.a * (1.0 - el.e * el.e).sqrt() * s)
    };
    let dist = |u: f64, v: f64| (point(ei, u) - point(ej, v)).norm();
    const N: usize = 128;
    let h = std::f64::consts::TAU / N as f64;
    let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity(N * N);
    for a in 0..N {
        for b in 0..N {
            let (u, v) = (a as f64 * h, b as f64 * h);
            cells.push((dist(u, v), u, v));
        }
    }
    cells.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut best = f64::INFINITY;
    for &(d0, u0, v0) in cells.iter().take(8) {
        let (mut d, mut u, mut v, mut w) = (d0, u0, v0, 2.0 * h);
        for _ in 0..40 {
            let (mut du, mut dv) = (u, v);
            for a in -5..=5 {
                for b in -5..=5 {
                    let (uu, vv) = (u + w * a as f64 / 5.0, v + w * b as f64 / 5.0);
                    let dd = dist(uu, vv);
                    if dd < d {
                        d = dd;
                        du = uu;
                        dv = vv;
                    }
                }
            }
            u = du;
            v = dv;
            w *= 0.4;
        }
        best = best.min(d);
    }
    best
}

/// Fails with `OrbitCrossing` if the two orbits come within `1e-6 a_j`.
pub fn check_no_crossing(i: usize, j: usize, chain: &EllipseChain) -> Result<()> {
    let (ei, ej) = (&chain.ellipses[i], &chain.ellipses[j]);
    let d = min_orbit_distance(ei, ej);
    if d <= 1e-6 * ei.a.max(ej.a) {
        return Err(Error::OrbitCrossing { i, j, distance: d });
    }
    Ok(())
}

fn pair_indices(i: usize, j: usize, chain: &EllipseChain, masses: &MassSystem) -> Result<()> {
    if i == j || i >= chain.n() || j >= chain.n() || masses.n() != chain.n() {
        return Err(Error::InvalidInput(format!("invalid planet pair ({i}, {j}) for n = {}", chain.n())));
    }
    Ok(())
}

/// `(2π)⁻² ∬ f(state_i(ℓ_i), state_j(ℓ_j)) dℓ_i dℓ_j` by the tensor trapezoid rule.
pub fn double_average<F>(
    i: usize,
    j: usize,
    chain: &EllipseChain,
    masses: &MassSystem,
    grid: QuadratureGrid,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(&OrbitState, &OrbitState) -> f64,
{
    pair_indices(i, j, chain, masses)?;
    let si = orbit_samples(&chain.ellipses[i], masses.reduced_mass(i), masses.central_mass(i), grid)?;
    let sj = orbit_samples(&chain.ellipses[j], masses.reduced_mass(j), masses.central_mass(j), grid)?;
    let mut total = 0.0;
    for a in &si {
        let mut row = 0.0;
        for b in &sj {
            row += f(a, b);
        }
        total += row;
    }
    Ok(total / (grid.points * grid.points) as f64)
}

/// Doubly averaged Newtonian interaction `-m_i m_j ⟨1/|x^(i) - x^(j)|⟩`.
pub fn double_average_newtonian(
    i: usize,
    j: usize,
    chain: &EllipseChain,
    masses: &MassSystem,
    grid: QuadratureGrid,
) -> Result<f64> {
    pair_indices(i, j, chain, masses)?;
    check_no_crossing(i, j, chain)?;
    let mm = masses.masses[i] * masses.masses[j];
    double_average(i, j, chain, masses, grid, |a, b| -mm / (a.x - b.x).norm())
}

/// [`double_average_newtonian`] with the grid doubled from `start` until two
/// successive values agree to `rtol` (relative) or `cap` points are reached.
pub fn double_average_newtonian_converged(
    i: usize,
    j: usize,
    chain: &EllipseChain,
    masses: &MassSystem,
    start: QuadratureGrid,
    cap: usize,
    rtol: f64,
) -> Result<(f64, QuadratureGrid)> {
    let mut grid = start;
    let mut prev = double_average_newtonian(i, j, chain, masses, grid)?;
    while grid.points < cap {
        grid = QuadratureGrid::new(grid.points * 2)?;
        let next = double_average_newtonian(i, j, chain, masses, grid)?;
        if (next - prev).abs() <= rtol * next.abs() {
            return Ok((next, grid));
        }
        prev = next;
    }
    Err(Error::NoConvergence(format!("double average not converged at {} points", grid.points)))
}

/// Legendre polynomial `P_h` for `h <= 2`.
fn legendre(h: usize, x: f64) -> f64 {
    match h {
        0 => 1.0,
        1 => x,
        _ => 0.5 * (3.0 * x * x - 1.0),
    }
}

/// Order-`h` term (`h` in 0..=2) of the averaged interaction expanded in the
/// ratio `|x^(i)|/|x^(j)|`: `-m_i m_j ⟨|x^(i)|^h / |x^(j)|^{h+1} P_h(cos γ)⟩`,
/// γ the angle between the two position vectors.
pub fn expansion_term(
    order: usize,
    i: usize,
    j: usize,
    chain: &EllipseChain,
    masses: &MassSystem,
    grid: QuadratureGrid,
) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidInput(format!("expansion order {order} not supported")));
    }
    pair_indices(i, j, chain, masses)?;
    if !(chain.ellipses[i].a < chain.ellipses[j].a) {
        return Err(Error::InvalidInput(format!("expansion needs a_{i} < a_{j}")));
    }
    check_no_crossing(i, j, chain)?;
    let mm = masses.masses[i] * masses.masses[j];
    let p = order as i32;
    double_average(i, j, chain, masses, grid, |a, b| {
        let (ri, rj) = (a.x.norm(), b.x.norm());
        let cos_g = a.x.dot(b.x) / (ri * rj);
        -mm * ri.powi(p) / rj.powi(p + 1) * legendre(order, cos_g)
    })
}

/// Closed-form quadrupole term of the pair `(i, j)`, `a_i < a_j`.
pub fn quadrupole_closed_form(i: usize, j: usize, chain: &EllipseChain, masses: &MassSystem) -> Result<f64> {
    pair_indices(i, j, chain, masses)?;
    let (ei, ej) = (&chain.ellipses[i], &chain.ellipses[j]);
    let ci = ei.angular_momentum(masses.reduced_mass(i), masses.central_mass(i));
    let cj = ej.angular_momentum(masses.reduced_mass(j), masses.central_mass(j));
    let (li, lj) = (masses.lambda(i, ei.a), masses.lambda(j, ej.a));
    let ri = ci.norm2() / (li * li);
    let cjn = cj.norm();
    let pc = ei.perihelion.dot(cj);
    let qc = ei.q().dot(cj);
    let bracket = -(2.5 - 1.5 * ri) * cj.norm2() + 1.5 * (5.0 - 4.0 * ri) * pc * pc + 1.5 * ri * qc * qc;
    let pref = masses.masses[i] * masses.masses[j] * ei.a * ei.a / (4.0 * ej.a.powi(3)) * lj.powi(3) / cjn.powi(5);
    Ok(pref * bracket)
}

/// Arguments of the quadrupole term of the pair `(i, i+1)` written in
/// perihelia coordinates: `Θ_i`, `ϑ_i`, `χ_{i-1}`, `χ_i`, `χ_{i+1}`,
/// `Λ_i`, `Λ_{i+1}`, semi-major axes and planet masses of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupoleArgs {
    pub theta: f64,
    pub vartheta: f64,
    pub chi_prev: f64,
    pub chi: f64,
    pub chi_next: f64,
    pub lambda: f64,
    pub lambda_next: f64,
    pub a: f64,
    pub a_next: f64,
    pub m: f64,
    pub m_next: f64,
}

impl QuadrupoleArgs {
    fn check(&self) -> Result<()> {
        let ok = self.chi > self.chi_next
            && self.chi_next >= 0.0
            && self.chi_prev > 0.0
            && self.theta.abs() < self.chi.min(self.chi_prev)
            && self.lambda > 0.0
            && self.lambda_next > 0.0
            && self.a > 0.0
            && self.a_next > 0.0;
        if !ok {
            return Err(Error::DomainViolation(format!("quadrupole arguments outside domain: {self:?}")));
        }
        Ok(())
    }

    /// `m_i m_{i+1} a_i² / (4 a_{i+1}³)`.
    pub fn amplitude(&self) -> f64 {
        self.m * self.m_next * self.a * self.a / (4.0 * self.a_next.powi(3))
    }

    /// `|C^(i)|²` in terms of the chain actions.
    pub fn inner_momentum_sq(&self) -> f64 {
        let (t, c, cp) = (self.theta, self.chi, self.chi_prev);
        cp * cp + c * c - 2.0 * t * t + 2.0 * ((c * c - t * t) * (cp * cp - t * t)).sqrt() * self.vartheta.cos()
    }

    fn bracket(&self) -> f64 {
        let (t, c, cp, l) = (self.theta, self.chi, self.chi_prev, self.lambda);
        let (t2, c2, l2) = (t * t, c * c, l * l);
        2.5 * (3.0 * t2 - c2) - 1.5 * (4.0 * t2 - c2) / l2 * self.inner_momentum_sq()
            + 1.5 * (c2 - t2) * (cp * cp - t2) / l2 * self.vartheta.sin().powi(2)
    }
}

/// Quadrupole term of the outermost pair `(n-1, n)` (`chi_next` must be 0).
pub fn fn1n_closed_form(args: &QuadrupoleArgs) -> Result<f64> {
    if args.chi_next != 0.0 {
        return Err(Error::InvalidInput("outermost pair requires chi_next = 0".into()));
    }
    ovl_f_closed_form(args)
}

/// Quadrupole term of the pair `(i, i+1)` restricted to `Θ_{i+1} = 0`,
/// `ϑ_{i+1} = π`.
pub fn ovl_f_closed_form(args: &QuadrupoleArgs) -> Result<f64> {
    args.check()?;
    let pref = args.amplitude() * args.lambda_next.powi(3) / (args.chi.powi(2) * (args.chi - args.chi_next).powi(3));
    Ok(pref * args.bracket())
}
