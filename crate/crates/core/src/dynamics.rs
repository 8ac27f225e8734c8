//! Kick–drift–kick leapfrog for the heliocentric Hamiltonian `T(y) + U(x)`
//! and monitoring of the energy and the total angular momentum `S^(1)`.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::kepler::{ellipse_from_state, MassSystem};
use crate::planetary::PhaseState;
use crate::{Error, Result};

/// Version tag written on the first line of trajectory CSV files.
pub const CSV_VERSION: &str = "perihelia-trajectory v1";

fn check_shape(state: &PhaseState, masses: &MassSystem) -> Result<()> {
    if state.y.len() != state.x.len() || state.n() != masses.n() {
        return Err(Error::InvalidInput(format!(
            "state has {}/{} vectors for {} planets",
            state.y.len(),
            state.x.len(),
            masses.n()
        )));
    }
    Ok(())
}

/// `T = Σ|y_i|²/(2𝔪_i) + (μ/m0) Σ_{i<j} y_i·y_j`.
pub fn kinetic(y: &[Vec3], masses: &MassSystem) -> f64 {
    let mut t = 0.0;
    for i in 0..y.len() {
        t += y[i].norm2() / (2.0 * masses.reduced_mass(i));
        for j in i + 1..y.len() {
            t += masses.mu / masses.m0 * y[i].dot(y[j]);
        }
    }
    t
}

/// `U = -Σ 𝔪_i𝔐_i/|x_i| - μ Σ_{i<j} m_i m_j/|x_i - x_j|`.
pub fn potential(x: &[Vec3], masses: &MassSystem) -> Result<f64> {
    let mut u = 0.0;
    for i in 0..x.len() {
        let r = x[i].norm();
        if !(r > 0.0) {
            return Err(Error::Collision(format!("planet {i} at the origin")));
        }
        u -= masses.reduced_mass(i) * masses.central_mass(i) / r;
        for j in i + 1..x.len() {
            let d = (x[i] - x[j]).norm();
            if !(d > 0.0) {
                return Err(Error::Collision(format!("planets {i} and {j} coincide")));
            }
            u -= masses.mu * masses.masses[i] * masses.masses[j] / d;
        }
    }
    Ok(u)
}

/// `(T(y), U(x))`.
pub fn split_hamiltonian(state: &PhaseState, masses: &MassSystem) -> Result<(f64, f64)> {
    check_shape(state, masses)?;
    Ok((kinetic(&state.y, masses), potential(&state.x, masses)?))
}

fn grad_kinetic(y: &[Vec3], masses: &MassSystem) -> Vec<Vec3> {
    let total: Vec3 = y.iter().copied().sum();
    let c = masses.mu / masses.m0;
    y.iter()
        .enumerate()
        .map(|(i, yi)| *yi / masses.reduced_mass(i) + (total - *yi) * c)
        .collect()
}

fn grad_potential(x: &[Vec3], masses: &MassSystem) -> Result<Vec<Vec3>> {
    let n = x.len();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let r = x[i].norm();
        if !(r > 0.0) {
            return Err(Error::Collision(format!("planet {i} at the origin")));
        }
        g.push(x[i] * (masses.reduced_mass(i) * masses.central_mass(i) / (r * r * r)));
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = x[i] - x[j];
            let r = d.norm();
            if !(r > 0.0) {
                return Err(Error::Collision(format!("planets {i} and {j} coincide")));
            }
            let f = d * (masses.mu * masses.masses[i] * masses.masses[j] / (r * r * r));
            g[i] += f;
            g[j] -= f;
        }
    }
    Ok(g)
}

/// One kick–drift–kick step. Negative `dt` runs the scheme backwards.
pub fn leapfrog_step(state: &PhaseState, dt: f64, masses: &MassSystem) -> Result<PhaseState> {
    check_shape(state, masses)?;
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidInput(format!("time step must be finite and nonzero, got {dt}")));
    }
    let half = 0.5 * dt;
    let gu = grad_potential(&state.x, masses)?;
    let y: Vec<Vec3> = state.y.iter().zip(&gu).map(|(y, g)| *y - *g * half).collect();
    let gt = grad_kinetic(&y, masses);
    let x: Vec<Vec3> = state.x.iter().zip(&gt).map(|(x, g)| *x + *g * dt).collect();
    let gu = grad_potential(&x, masses)?;
    let y = y.iter().zip(&gu).map(|(y, g)| *y - *g * half).collect();
    Ok(PhaseState { y, x })
}

/// Osculating semi-major axes of every planet.
pub fn osculating_axes(state: &PhaseState, masses: &MassSystem) -> Result<Vec<f64>> {
    check_shape(state, masses)?;
    (0..state.n())
        .map(|j| {
            ellipse_from_state(&state.planet(j), masses.reduced_mass(j), masses.central_mass(j)).map(|(e, _)| e.a)
        })
        .collect()
}

/// Shortest osculating period divided by 500.
pub fn default_dt(state: &PhaseState, masses: &MassSystem) -> Result<f64> {
    let axes = osculating_axes(state, masses)?;
    let period = axes
        .iter()
        .enumerate()
        .map(|(j, a)| TAU * (a.powi(3) / masses.central_mass(j)).sqrt())
        .fold(f64::INFINITY, f64::min);
    Ok(period / 500.0)
}

/// `1e-4 ×` the smallest osculating semi-major axis.
pub fn default_collision_radius(state: &PhaseState, masses: &MassSystem) -> Result<f64> {
    let axes = osculating_axes(state, masses)?;
    Ok(1e-4 * axes.iter().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub steps: usize,
    /// Record a snapshot every this many steps.
    pub sample_every: usize,
    /// Abort once any separation drops below this.
    pub collision_radius: f64,
}

impl IntegrateOptions {
    /// Defaults derived from the initial osculating orbits.
    pub fn for_state(state: &PhaseState, masses: &MassSystem, steps: usize) -> Result<Self> {
        Ok(IntegrateOptions {
            dt: default_dt(state, masses)?,
            steps,
            sample_every: 1,
            collision_radius: default_collision_radius(state, masses)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub energy: Vec<f64>,
    /// Total angular momentum `S^(1)` at each sample.
    pub s: Vec<Vec3>,
    /// Set when a collision cut the run short.
    pub abort: Option<Error>,
}

impl Trajectory {
    /// `Z = S^(1)·k³`.
    pub fn z(&self) -> Vec<f64> {
        self.s.iter().map(|s| s.z).collect()
    }

    /// `G = |S^(1)|`.
    pub fn g(&self) -> Vec<f64> {
        self.s.iter().map(|s| s.norm()).collect()
    }

    fn push(&mut self, t: f64, state: PhaseState, masses: &MassSystem) -> Result<()> {
        let (k, u) = split_hamiltonian(&state, masses)?;
        self.times.push(t);
        self.energy.push(k + u);
        self.s.push(state.total_angular_momentum());
        self.states.push(state);
        Ok(())
    }

    /// Drift of the monitored integrals. Energy drift compares the means of
    /// the first and last `window` samples, which filters the bounded
    /// leapfrog oscillation.
    pub fn summary(&self, window: usize) -> Result<DriftSummary> {
        let len = self.times.len();
        if window == 0 || window > len {
            return Err(Error::InvalidInput(format!("window {window} for {len} samples")));
        }
        let e0 = self.energy[0];
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let energy_drift = (mean(&self.energy[len - window..]) - mean(&self.energy[..window])).abs() / e0.abs();
        let energy_oscillation = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs();
        let s0 = self.s[0];
        let g0 = s0.norm();
        let mut s_drift = [0.0_f64; 3];
        for s in &self.s {
            for (k, d) in s_drift.iter_mut().enumerate() {
                *d = d.max((s[k] - s0[k]).abs() / g0);
            }
        }
        let g_drift = self.s.iter().map(|s| (s.norm() - g0).abs()).fold(0.0, f64::max) / g0;
        let z_drift = self.s.iter().map(|s| (s.z - s0.z).abs()).fold(0.0, f64::max) / g0;
        Ok(DriftSummary { samples: len, window, energy_drift, energy_oscillation, s_drift, g_drift, z_drift })
    }

    /// CSV with a version comment, then `t, energy, Z, G, Sx, Sy, Sz` and
    /// per planet `x` and `y` triples.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidInput(format!("write failed: {e}"));
        writeln!(out, "# {CSV_VERSION}").map_err(io)?;
        let n = self.states.first().map_or(0, |s| s.n());
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        let mut header: Vec<String> = ["t", "energy", "Z", "G", "Sx", "Sy", "Sz"].iter().map(|s| s.to_string()).collect();
        for j in 1..=n {
            for v in ["x", "y"] {
                for c in 1..=3 {
                    header.push(format!("{v}{j}_{c}"));
                }
            }
        }
        w.write_record(&header).map_err(csv_err)?;
        for k in 0..self.times.len() {
            let s = self.s[k];
            let mut row = vec![self.times[k], self.energy[k], s.z, s.norm(), s.x, s.y, s.z];
            let st = &self.states[k];
            for j in 0..n {
                row.extend(st.x[j].to_array());
                row.extend(st.y[j].to_array());
            }
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub samples: usize,
    pub window: usize,
    /// Relative change between window means of the energy.
    pub energy_drift: f64,
    /// Largest relative energy excursion from the initial value.
    pub energy_oscillation: f64,
    /// Largest change of each component of `S^(1)`, relative to `|S^(1)|`.
    pub s_drift: [f64; 3],
    pub g_drift: f64,
    pub z_drift: f64,
}

/// Runs `opts.steps` leapfrog steps, sampling the monitors. A collision stops
/// the run and is reported in [`Trajectory::abort`] with the samples so far.
pub fn integrate_and_monitor(initial: &PhaseState, masses: &MassSystem, opts: IntegrateOptions) -> Result<Trajectory> {
    check_shape(initial, masses)?;
    masses.validate()?;
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {}", opts.dt)));
    }
    if opts.sample_every == 0 {
        return Err(Error::InvalidInput("sample_every must be at least 1".into()));
    }
    if !(opts.collision_radius >= 0.0) {
        return Err(Error::InvalidInput("collision radius must be non-negative".into()));
    }
    let mut traj = Trajectory { times: vec![], states: vec![], energy: vec![], s: vec![], abort: None };
    if initial.min_separation() < opts.collision_radius {
        return Err(Error::Collision(format!("initial separation {:e}", initial.min_separation())));
    }
    traj.push(0.0, initial.clone(), masses)?;
    let mut state = initial.clone();
    for k in 1..=opts.steps {
        let next = match leapfrog_step(&state, opts.dt, masses) {
            Ok(s) => s,
            Err(e @ Error::Collision(_)) => {
                traj.abort = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        state = next;
        let d = state.min_separation();
        if d < opts.collision_radius {
            traj.abort = Some(Error::Collision(format!("separation {d:e} at step {k}")));
            break;
        }
        if k % opts.sample_every == 0 || k == opts.steps {
            traj.push(k as f64 * opts.dt, state.clone(), masses)?;
        }
    }
    Ok(traj)
}
