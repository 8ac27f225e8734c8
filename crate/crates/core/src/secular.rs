//! Elliptic-equilibrium analysis of the quadrupole terms.
//!
//! At `(Θ_i, ϑ_i) = (0, π)` the quadrupole term of the pair `(i, i+1)`
//! expands as `A[E + Ω(β²Θ² + (ϑ−π)²/β²)/2 + quartic]`. This module gives
//! the coefficients in closed form, a least-squares Taylor oracle for them,
//! the frequency map of the outermost pair and a multi-scale Diophantine
//! tester.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::planetary::QuadrupoleArgs;
use crate::{Error, Result};

/// Everything the quadrupole term of the pair `(i, i+1)` depends on besides
/// `(Θ_i, ϑ_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularPoint {
    pub chi_prev: f64,
    pub chi: f64,
    /// `χ_{i+1}`, zero for the outermost pair.
    pub chi_next: f64,
    pub lambda: f64,
    pub lambda_next: f64,
    pub a: f64,
    pub a_next: f64,
    pub m: f64,
    pub m_next: f64,
}

impl SecularPoint {
    pub fn quadrupole(&self, theta: f64, vartheta: f64) -> QuadrupoleArgs {
        QuadrupoleArgs {
            theta,
            vartheta,
            chi_prev: self.chi_prev,
            chi: self.chi,
            chi_next: self.chi_next,
            lambda: self.lambda,
            lambda_next: self.lambda_next,
            a: self.a,
            a_next: self.a_next,
            m: self.m,
            m_next: self.m_next,
        }
    }

    /// `5χ_{i−1}Λ_i² − (χ_{i−1}−χ_i)²(4χ_{i−1}−χ_i)`.
    pub fn radicand(&self) -> f64 {
        let (cp, c, l) = (self.chi_prev, self.chi, self.lambda);
        5.0 * cp * l * l - (cp - c).powi(2) * (4.0 * cp - c)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.chi_prev,
            self.chi,
            self.chi_next,
            self.lambda,
            self.lambda_next,
            self.a,
            self.a_next,
            self.m,
            self.m_next,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite secular point".into()));
        }
        let ok = self.chi_prev > 0.0
            && self.chi > self.chi_next
            && self.chi_next >= 0.0
            && self.lambda > 0.0
            && self.lambda_next > 0.0
            && self.a > 0.0
            && self.a_next > self.a
            && self.m > 0.0
            && self.m_next > 0.0;
        if !ok {
            return Err(Error::DomainViolation(format!("secular point outside domain: {self:?}")));
        }
        if (self.chi_prev - self.chi).abs() > self.lambda {
            return Err(Error::DomainViolation(format!(
                "|chi_prev - chi| = {} exceeds Lambda = {}",
                (self.chi_prev - self.chi).abs(),
                self.lambda
            )));
        }
        let r = self.radicand();
        if r <= 0.0 {
            return Err(Error::DomainViolation(format!("non-positive radicand {r}")));
        }
        Ok(())
    }
}

/// Closed-form equilibrium coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularCoeffs {
    pub beta: f64,
    pub amplitude: f64,
    pub energy: f64,
    pub omega: f64,
    pub tau: f64,
    /// Coefficient of `p⁴` in the quartic part, without the common prefactor.
    pub tau1: f64,
    /// Coefficient of `p²q²`.
    pub tau2: f64,
    /// Coefficient of `q⁴`.
    pub tau3: f64,
}

pub fn secular_coefficients(pt: &SecularPoint) -> Result<SecularCoeffs> {
    pt.validate()?;
    let (cp, c, cn) = (pt.chi_prev, pt.chi, pt.chi_next);
    let (l, ln) = (pt.lambda, pt.lambda_next);
    let l2 = l * l;
    let nm = pt.radicand();
    let beta4 = nm / (cp * cp * c * c * (cp + c));
    let beta = beta4.powf(0.25);
    let amplitude = pt.m * pt.m_next * pt.a * pt.a / (4.0 * pt.a_next.powi(3));
    let gap3 = (c - cn).powi(3);
    let energy = -ln.powi(3) / (2.0 * gap3) * (5.0 - 3.0 * (cp - c).powi(2) / l2);
    let omega = 3.0 * ln.powi(3) / (c * l2 * gap3) * (nm * (cp + c)).sqrt();
    let tau1 = -3.0 * (cp - c).powi(2) * (3.0 * cp - c) * (5.0 * cp + c) / (8.0 * cp.powi(3) * c * l2);
    let tau2 = -3.0 * (2.0 * cp.powi(3) + 9.0 * cp * cp * c + 2.0 * cp * c * c + c.powi(3)) / (4.0 * cp * l2);
    let tau3 = -cp * c * c * (4.0 * cp + c) / (8.0 * l2);
    let pref = ln.powi(3) / (c * c * gap3);
    let tau = pref * (1.5 * tau1 / beta4 + 0.5 * tau2 + 1.5 * tau3 * beta4);
    Ok(SecularCoeffs { beta, amplitude, energy, omega, tau, tau1, tau2, tau3 })
}

/// Stencil for [`taylor_expand_equilibrium`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Total degree of the fitted polynomial.
    pub degree: usize,
    /// Chebyshev nodes per axis.
    pub nodes: usize,
    /// Stencil half-width relative to each axis scale.
    pub radius: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { degree: 8, nodes: 11, radius: 0.1 }
    }
}

pub const MAX_FIT_CONDITION: f64 = 1e12;

/// Bivariate polynomial around a center, in unscaled offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorFit {
    pub degree: usize,
    /// `(a, b, c)`: `c` multiplies `dx^a dy^b`.
    pub coefficients: Vec<(usize, usize, f64)>,
    /// Max absolute residual on the stencil.
    pub residual: f64,
    pub condition: f64,
    /// Stencil half-widths along each axis.
    pub half_width: (f64, f64),
}

impl TaylorFit {
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        self.coefficients
            .iter()
            .find(|(i, j, _)| *i == a && *j == b)
            .map(|t| t.2)
            .unwrap_or(0.0)
    }

    /// Size of the `(a, b)` term at the edge of the stencil.
    pub fn stencil_size(&self, a: usize, b: usize) -> f64 {
        (self.coeff(a, b) * self.half_width.0.powi(a as i32) * self.half_width.1.powi(b as i32)).abs()
    }

    pub fn eval(&self, dx: f64, dy: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|(a, b, c)| c * dx.powi(*a as i32) * dy.powi(*b as i32))
            .sum()
    }
}

fn monomials(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

/// Least-squares Taylor fit of `f` around `center` on a tensor Chebyshev
/// stencil with half-widths `radius · scales`.
pub fn taylor_expand_equilibrium<F>(f: F, center: (f64, f64), scales: (f64, f64), opts: FitOptions) -> Result<TaylorFit>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if opts.nodes <= opts.degree {
        return Err(Error::InvalidInput(format!(
            "{} nodes per axis cannot determine degree {}",
            opts.nodes, opts.degree
        )));
    }
    if !(opts.radius > 0.0 && scales.0 > 0.0 && scales.1 > 0.0) {
        return Err(Error::InvalidInput("fit radius and scales must be positive".into()));
    }
    let hx = opts.radius * scales.0;
    let hy = opts.radius * scales.1;
    let n = opts.nodes;
    let cheb: Vec<f64> = (0..n).map(|k| ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos()).collect();
    let basis = monomials(opts.degree);
    let rows = n * n;
    let mut design = DMatrix::<f64>::zeros(rows, basis.len());
    let mut rhs = DVector::<f64>::zeros(rows);
    for (i, u) in cheb.iter().enumerate() {
        for (j, v) in cheb.iter().enumerate() {
            let r = i * n + j;
            for (c, (a, b)) in basis.iter().enumerate() {
                design[(r, c)] = u.powi(*a as i32) * v.powi(*b as i32);
            }
            rhs[r] = f(center.0 + hx * u, center.1 + hy * v)?;
        }
    }
    let (sol, condition) = least_squares(&design, &rhs)?;
    let residual = (&design * &sol - &rhs).amax();
    let coefficients = basis
        .iter()
        .zip(sol.iter())
        .map(|((a, b), c)| (*a, *b, c / (hx.powi(*a as i32) * hy.powi(*b as i32))))
        .collect();
    Ok(TaylorFit { degree: opts.degree, coefficients, residual, condition, half_width: (hx, hy) })
}

fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_FIT_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let sol = svd
        .solve(rhs, 0.0)
        .map_err(|e| Error::NoConvergence(format!("least squares: {e}")))?;
    Ok((sol, condition))
}

/// Fit of the quadrupole term at `(Θ, ϑ) = (0, π)`.
pub fn fit_quadrupole(pt: &SecularPoint, opts: FitOptions) -> Result<TaylorFit> {
    pt.validate()?;
    let scale = pt.chi.min(pt.chi_prev);
    taylor_expand_equilibrium(
        |t, v| crate::planetary::ovl_f_closed_form(&pt.quadrupole(t, v)),
        (0.0, PI),
        (scale, 1.0),
        opts,
    )
}

/// Angular average of the quartic part after `(Θ, ϑ−π) = (p/β, βq)`.
pub fn birkhoff4_oracle(fit: &TaylorFit, beta: f64) -> Result<f64> {
    if fit.degree < 4 {
        return Err(Error::InvalidInput("quartic oracle needs a fit of degree 4 or more".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let b4 = beta.powi(4);
    Ok(1.5 * fit.coeff(4, 0) / b4 + 0.5 * fit.coeff(2, 2) + 1.5 * fit.coeff(0, 4) * b4)
}

/// Quadratic data of a fit: `(β⁴, AΩ)` from `c20 Θ² + c02 (ϑ−π)²`.
pub fn quadratic_data(fit: &TaylorFit) -> (f64, f64) {
    let (c20, c02) = (fit.coeff(2, 0), fit.coeff(0, 2));
    (c20 / c02, 2.0 * (c20 * c02).sqrt())
}

/// Secular Hamiltonian of the outermost pair truncated at quartic order,
/// `A[E + ΩI + τI²]`, as a function of `(I, χ_{n−2}, χ_{n−1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutermostPair {
    pub lambda: f64,
    pub lambda_next: f64,
    pub a: f64,
    pub a_next: f64,
    pub m: f64,
    pub m_next: f64,
}

impl OutermostPair {
    pub fn point(&self, chi_prev: f64, chi: f64) -> SecularPoint {
        SecularPoint {
            chi_prev,
            chi,
            chi_next: 0.0,
            lambda: self.lambda,
            lambda_next: self.lambda_next,
            a: self.a,
            a_next: self.a_next,
            m: self.m,
            m_next: self.m_next,
        }
    }

    pub fn energy(&self, action: &[f64]) -> Result<f64> {
        let [i, cp, c] = three(action)?;
        if i < 0.0 {
            return Err(Error::DomainViolation(format!("negative action {i}")));
        }
        let k = secular_coefficients(&self.point(cp, c))?;
        Ok(k.amplitude * (k.energy + k.omega * i + k.tau * i * i))
    }

    /// Central-difference gradient and Hessian at an interior action point.
    pub fn frequency_map(&self, action: &[f64], step_rel: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let [i, cp, c] = three(action)?;
        let steps = [step_rel * cp.min(c), step_rel * cp, step_rel * c];
        if i < 2.0 * steps[0] {
            return Err(Error::DomainViolation(format!("action {i} too close to the boundary")));
        }
        let f = |x: &[f64]| self.energy(x);
        Ok((gradient(&f, action, &steps)?, hessian(&f, action, &steps)?))
    }
}

fn three(v: &[f64]) -> Result<[f64; 3]> {
    <[f64; 3]>::try_from(v).map_err(|_| Error::InvalidInput(format!("expected 3 actions, got {}", v.len())))
}

/// Central-difference gradient with per-coordinate steps.
pub fn gradient<F>(f: &F, x: &[f64], steps: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut out = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for k in 0..x.len() {
        p[k] = x[k] + steps[k];
        let hi = p[k];
        let fp = f(&p)?;
        p[k] = x[k] - steps[k];
        let lo = p[k];
        let fm = f(&p)?;
        p[k] = x[k];
        out.push((fp - fm) / (hi - lo));
    }
    Ok(out)
}

/// Central-difference Hessian with per-coordinate steps.
pub fn hessian<F>(f: &F, x: &[f64], steps: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let f0 = f(x)?;
    let mut p = x.to_vec();
    for a in 0..n {
        p[a] = x[a] + steps[a];
        let fp = f(&p)?;
        p[a] = x[a] - steps[a];
        let fm = f(&p)?;
        p[a] = x[a];
        h[(a, a)] = (fp - 2.0 * f0 + fm) / (steps[a] * steps[a]);
        for b in 0..a {
            let mut corner = |sa: f64, sb: f64| {
                p[a] = x[a] + sa * steps[a];
                p[b] = x[b] + sb * steps[b];
                let v = f(&p);
                p[a] = x[a];
                p[b] = x[b];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * steps[a] * steps[b]);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    Ok(h)
}

/// `det H / max|H_ij|^n`.
pub fn relative_determinant(h: &DMatrix<f64>) -> f64 {
    let scale = h.amax();
    if scale == 0.0 {
        return 0.0;
    }
    h.determinant() / scale.powi(h.nrows() as i32)
}

/// Multi-scale Diophantine condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineSpec {
    pub nu_blocks: Vec<usize>,
    pub gammas: Vec<f64>,
    pub tau: f64,
    /// Largest `|k|₁` checked.
    pub k_max: u32,
}

impl DiophantineSpec {
    pub fn single(dim: usize, gamma: f64, tau: f64, k_max: u32) -> Self {
        DiophantineSpec { nu_blocks: vec![dim], gammas: vec![gamma], tau, k_max }
    }

    pub fn dim(&self) -> usize {
        self.nu_blocks.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu_blocks.is_empty() || self.nu_blocks.contains(&0) {
            return Err(Error::InvalidInput("blocks must be non-empty with positive sizes".into()));
        }
        if self.gammas.len() != self.nu_blocks.len() {
            return Err(Error::InvalidInput(format!(
                "{} gammas for {} blocks",
                self.gammas.len(),
                self.nu_blocks.len()
            )));
        }
        if self.gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidInput("gammas must be positive".into()));
        }
        if self.gammas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("gammas must be non-increasing".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau must be positive, got {}", self.tau)));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        Ok(())
    }

    /// Block holding coordinate `c`.
    fn block_of(&self, c: usize) -> usize {
        let mut end = 0;
        for (j, nu) in self.nu_blocks.iter().enumerate() {
            end += nu;
            if c < end {
                return j;
            }
        }
        self.nu_blocks.len() - 1
    }
}

pub const MAX_LATTICE_POINTS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub omega: Vec<f64>,
    pub blocks: Vec<usize>,
    pub gammas: Vec<f64>,
    pub tau: f64,
    #[serde(rename = "K")]
    pub k_max: u32,
    pub pass: bool,
    /// Lattice vector with the smallest margin (the first violation when failing).
    pub worst_k: Vec<i64>,
    /// `|ω·k| − γ_j / |k|₁^τ` at `worst_k`.
    pub margin: f64,
    pub checked: u64,
}

/// Number of integer vectors in `dim` dimensions with `|k|₁ ≤ k_max`.
pub fn lattice_ball_size(dim: usize, k_max: u32) -> u128 {
    // counts[r] = vectors with |k|₁ = r in the dimensions seen so far
    let k = k_max as usize;
    let mut counts = vec![0u128; k + 1];
    counts[0] = 1;
    for _ in 0..dim {
        let mut next = vec![0u128; k + 1];
        for (r, c) in counts.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            next[r] = next[r].saturating_add(*c);
            for step in 1..=(k - r) {
                next[r + step] = next[r + step].saturating_add(c.saturating_mul(2));
            }
        }
        counts = next;
    }
    counts.iter().fold(0u128, |a, b| a.saturating_add(*b))
}

/// Exhaustive check of `|ω·k| ≥ γ_j / |k|₁^τ` over `0 < |k|₁ ≤ K`, where
/// `j` is the first block in which `k` is nonzero.
pub fn diophantine_check(omega: &[f64], spec: &DiophantineSpec) -> Result<DiophantineReport> {
    spec.validate()?;
    if omega.len() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "omega has {} entries, blocks need {}",
            omega.len(),
            spec.dim()
        )));
    }
    if omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidInput("non-finite frequency".into()));
    }
    let size = lattice_ball_size(omega.len(), spec.k_max);
    if size > MAX_LATTICE_POINTS {
        return Err(Error::CapExceeded(size));
    }
    let mut st = Search {
        omega,
        spec,
        k: vec![0; omega.len()],
        worst: None,
        first_fail: None,
        checked: 0,
    };
    st.recurse(0, spec.k_max as i64);
    let (worst_k, margin) = st.first_fail.clone().or(st.worst.clone()).unwrap_or_default();
    Ok(DiophantineReport {
        omega: omega.to_vec(),
        blocks: spec.nu_blocks.clone(),
        gammas: spec.gammas.clone(),
        tau: spec.tau,
        k_max: spec.k_max,
        pass: st.first_fail.is_none(),
        worst_k,
        margin,
        checked: st.checked,
    })
}

struct Search<'a> {
    omega: &'a [f64],
    spec: &'a DiophantineSpec,
    k: Vec<i64>,
    worst: Option<(Vec<i64>, f64)>,
    first_fail: Option<(Vec<i64>, f64)>,
    checked: u64,
}

impl Search<'_> {
    fn recurse(&mut self, c: usize, budget: i64) {
        if c == self.k.len() {
            self.visit();
            return;
        }
        for v in -budget..=budget {
            self.k[c] = v;
            self.recurse(c + 1, budget - v.abs());
        }
        self.k[c] = 0;
    }

    fn visit(&mut self) {
        let Some(first) = self.k.iter().position(|v| *v != 0) else {
            return;
        };
        self.checked += 1;
        let norm: i64 = self.k.iter().map(|v| v.abs()).sum();
        let dot: f64 = self.k.iter().zip(self.omega).map(|(k, w)| *k as f64 * w).sum();
        let gamma = self.spec.gammas[self.spec.block_of(first)];
        let margin = dot.abs() - gamma / (norm as f64).powf(self.spec.tau);
        if self.worst.as_ref().is_none_or(|(_, m)| margin < *m) {
            self.worst = Some((self.k.clone(), margin));
        }
        if margin < 0.0 && self.first_fail.is_none() {
            self.first_fail = Some((self.k.clone(), margin));
        }
    }
}
