//! Numerical canonicity audits: finite-difference Jacobians, symplectic
//! defects and seeded round-trip statistics.
//!
//! Ordering: a point of a `2N`-dimensional chart is `(p_1..p_N; q_1..q_N)`
//! with `p_k` conjugate to `q_k`, and Cartesian states are `(y; x)`. The
//! standard symplectic matrix is `𝕁 = [[0, I], [-I, 0]]` in this layout and
//! the defect of a map with Jacobian `J` is `max |Jᵀ𝕁J - 𝕁|`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::charts::{
    delaunay_map, delaunay_map_inverse, p_map, p_map_inverse, tilde_p_map, tilde_p_map_inverse,
    angular_momentum_norm, DelaunayCoords, PCoords, TildePCoords,
};
use crate::error::{Error, Result};
use crate::geom::angle_diff;
use crate::kepler::MassSystem;
use crate::planetary::PhaseState;

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianOptions {
    /// Step relative to the per-coordinate scale.
    pub step_rel: f64,
    /// Apply one Richardson level `(4 D(h/2) - D(h)) / 3`.
    pub richardson: bool,
}

impl Default for JacobianOptions {
    fn default() -> Self {
        JacobianOptions { step_rel: 1e-5, richardson: true }
    }
}

fn central_difference<F>(f: &F, point: &[f64], k: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut z = point.to_vec();
    let (hi, lo) = (point[k] + h, point[k] - h);
    z[k] = hi;
    let plus = f(&z).map_err(|e| stencil_error(k, e))?;
    z[k] = lo;
    let minus = f(&z).map_err(|e| stencil_error(k, e))?;
    // The representable width, not 2h, divides the difference.
    let width = hi - lo;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / width).collect())
}

fn stencil_error(k: usize, e: Error) -> Error {
    Error::DomainViolation(format!("stencil in coordinate {k} left the domain: {e}"))
}

/// Jacobian `∂f/∂z` at `point` by central differences with steps
/// `step_rel · scales[k]`.
pub fn numerical_jacobian<F>(f: F, point: &[f64], scales: &[f64], opts: JacobianOptions) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if scales.len() != point.len() {
        return Err(Error::InvalidInput("scales and point differ in length".into()));
    }
    let rows = f(point)?.len();
    let mut jac = DMatrix::zeros(rows, point.len());
    for k in 0..point.len() {
        let h = opts.step_rel * scales[k];
        let d1 = central_difference(&f, point, k, h)?;
        let col: Vec<f64> = if opts.richardson {
            let d2 = central_difference(&f, point, k, 0.5 * h)?;
            d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
        } else {
            d1
        };
        for (r, v) in col.into_iter().enumerate() {
            jac[(r, k)] = v;
        }
    }
    Ok(jac)
}

/// `𝕁 = [[0, I], [-I, 0]]` of size `2n`.
pub fn standard_symplectic(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = 1.0;
        j[(n + k, k)] = -1.0;
    }
    j
}

/// `max |Jᵀ𝕁J - 𝕁|` of a square even-dimensional Jacobian.
pub fn defect_of(jac: &DMatrix<f64>) -> Result<f64> {
    if jac.nrows() != jac.ncols() || !jac.nrows().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("Jacobian is {}x{}", jac.nrows(), jac.ncols())));
    }
    let omega = standard_symplectic(jac.nrows() / 2);
    Ok((jac.transpose() * &omega * jac - &omega).amax())
}

/// Jacobian with its symplectic defect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobianReport {
    pub dimension: usize,
    pub jacobian: Vec<Vec<f64>>,
    pub defect: f64,
    pub steps: Vec<f64>,
}

/// Symplectic defect of `f` at `point`.
pub fn symplectic_defect<F>(f: F, point: &[f64], scales: &[f64], opts: JacobianOptions) -> Result<JacobianReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let jac = numerical_jacobian(f, point, scales, opts)?;
    let defect = defect_of(&jac)?;
    Ok(JacobianReport {
        dimension: jac.nrows(),
        jacobian: (0..jac.nrows()).map(|r| jac.row(r).iter().copied().collect()).collect(),
        defect,
        steps: scales.iter().map(|s| s * opts.step_rel).collect(),
    })
}

/// A chart from flat coordinates to flat Cartesian states, with a sampler
/// of interior points.
pub trait CanonicalChart {
    fn name(&self) -> &str;
    /// Number of planets (or of degrees of freedom divided by 3).
    fn n(&self) -> usize;
    /// Dimension of the chart (`2N`).
    fn dim(&self) -> usize {
        6 * self.n()
    }
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>>;
    fn inverse(&self, w: &[f64]) -> Result<Vec<f64>>;
    /// One draw from the documented sampling distribution; `None` when
    /// the draw is rejected.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>>;
    /// Natural scale of every coordinate (step sizes and distances).
    fn scales(&self, z: &[f64]) -> Vec<f64>;
    fn is_angle(&self, k: usize) -> bool;
}

/// Max and mean of a round-trip experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripStats {
    pub samples: usize,
    pub rejected: usize,
    pub max: f64,
    pub mean: f64,
}

/// Distance between two chart points: angles wrapped, other coordinates
/// relative to their scale.
pub fn coordinate_distance<C: CanonicalChart + ?Sized>(chart: &C, a: &[f64], b: &[f64]) -> f64 {
    let scales = chart.scales(a);
    (0..a.len())
        .map(|k| {
            if chart.is_angle(k) {
                angle_diff(a[k], b[k]).abs()
            } else {
                (a[k] - b[k]).abs() / scales[k]
            }
        })
        .fold(0.0, f64::max)
}

/// Relative distance between flat Cartesian states, momenta and positions
/// scaled separately.
pub fn state_distance(a: &[f64], b: &[f64]) -> f64 {
    let half = a.len() / 2;
    let scale = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let (sy, sx) = (scale(&a[..half]), scale(&a[half..]));
    (0..a.len())
        .map(|k| (a[k] - b[k]).abs() / if k < half { sy } else { sx })
        .fold(0.0, f64::max)
}

const MAX_DRAWS: usize = 10_000;
const PAIR_DRAWS: usize = 64;

/// Deterministic per-sample generator: stream `k` of the seeded ChaCha.
pub fn sample_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Draws sample `k` (retrying rejected draws on the same stream); returns
/// the point and the number of rejections.
pub fn draw<C: CanonicalChart + ?Sized>(chart: &C, seed: u64, k: u64) -> Result<(Vec<f64>, usize)> {
    let mut rng = sample_rng(seed, k);
    for rejected in 0..MAX_DRAWS {
        if let Some(z) = chart.sample(&mut rng) {
            return Ok((z, rejected));
        }
    }
    Err(Error::NoConvergence(format!("sampler for {} rejected {MAX_DRAWS} draws", chart.name())))
}

/// Round-trip defect `max(d(z, inv(fwd(z))), d(w, fwd(inv(w))))` over
/// `samples` seeded draws, `w = fwd(z)`.
pub fn roundtrip_defect<C: CanonicalChart + ?Sized>(chart: &C, samples: usize, seed: u64) -> Result<RoundtripStats> {
    let mut stats = RoundtripStats { samples, rejected: 0, max: 0.0, mean: 0.0 };
    for k in 0..samples {
        let (z, rejected) = draw(chart, seed, k as u64)?;
        stats.rejected += rejected;
        let w = chart.forward(&z)?;
        let z2 = chart.inverse(&w)?;
        let w2 = chart.forward(&z2)?;
        let d = coordinate_distance(chart, &z, &z2).max(state_distance(&w, &w2));
        stats.max = stats.max.max(d);
        stats.mean += d / samples as f64;
    }
    Ok(stats)
}

/// Report of a symplectic audit over sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub chart: String,
    pub n: usize,
    pub seed: u64,
    pub samples: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    pub step_rel: f64,
}

/// Symplectic defect of the forward map at `samples` seeded points.
pub fn symplectic_audit<C: CanonicalChart + ?Sized>(
    chart: &C,
    samples: usize,
    seed: u64,
    opts: JacobianOptions,
) -> Result<AuditReport> {
    let mut report = AuditReport {
        chart: chart.name().to_string(),
        n: chart.n(),
        seed,
        samples,
        max_defect: 0.0,
        mean_defect: 0.0,
        step_rel: opts.step_rel,
    };
    for k in 0..samples {
        let (z, _) = draw(chart, seed, k as u64)?;
        let rep = symplectic_defect(|p| chart.forward(p), &z, &chart.scales(&z), opts)?;
        report.max_defect = report.max_defect.max(rep.defect);
        report.mean_defect += rep.defect / samples as f64;
    }
    Ok(report)
}

/// Identity on `R^{6n}`.
pub struct IdentityChart {
    pub n: usize,
}

impl CanonicalChart for IdentityChart {
    fn name(&self) -> &str {
        "identity"
    }
    fn n(&self) -> usize {
        self.n
    }
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(z.to_vec())
    }
    fn inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(w.to_vec())
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        Some((0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }
    fn scales(&self, z: &[f64]) -> Vec<f64> {
        vec![1.0; z.len()]
    }
    fn is_angle(&self, _: usize) -> bool {
        false
    }
}

/// Smallest `|C^(j)|` of a chain whose flat coordinates start with
/// `(Θ, χ, ·, ϑ)`. Chain actions are stepped on this scale: the direction of
/// a small momentum is the difference of two large partial sums.
fn smallest_momentum(n: usize, z: &[f64]) -> f64 {
    let (theta, chi, vartheta) = (&z[..n], &z[n..2 * n], &z[3 * n..4 * n]);
    (0..n).map(|j| angular_momentum_norm(theta, chi, vartheta, j)).fold(f64::INFINITY, f64::min)
}

/// Semi-major axes `a_1 ∈ [1, 1.5]`, `a_{j+1}/a_j ∈ [3, 5]`.
fn sample_axes(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut a = vec![rng.gen_range(1.0..1.5)];
    for _ in 1..n {
        let last = *a.last().unwrap();
        a.push(last * rng.gen_range(3.0..5.0));
    }
    a
}

/// Perihelia chart `(Θ, χ, Λ; ϑ, κ, ℓ) ↦ (y; x)`.
///
/// Sampling: axes as in [`sample_axes`]; `χ_{n-1} = Λ_n √(1 - e²)` with
/// `e ∈ [0.1, 0.6]`, `χ_{j-1} = χ_j + u Λ_j`, `u ∈ [0.5, 0.95]`;
/// `|Θ_i| <= 0.9` of its bound; uniform angles. Each `(Θ_i, ϑ_i)` is redrawn
/// until the eccentricity it determines lies in `[0.1, 0.7]`.
pub struct PChart {
    pub masses: MassSystem,
}

impl CanonicalChart for PChart {
    fn name(&self) -> &str {
        "p"
    }
    fn n(&self) -> usize {
        self.masses.n()
    }
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(p_map(&PCoords::from_slice(self.n(), z)?, &self.masses)?.to_vec())
    }
    fn inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(p_map_inverse(&PhaseState::from_slice(self.n(), w)?, &self.masses)?.to_vec())
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let n = self.n();
        let a = sample_axes(rng, n);
        let lambda: Vec<f64> = (0..n).map(|j| self.masses.lambda(j, a[j])).collect();
        let mut chi = vec![0.0; n];
        let e_last: f64 = rng.gen_range(0.1..0.6);
        chi[n - 1] = lambda[n - 1] * (1.0 - e_last * e_last).sqrt();
        for j in (0..n - 1).rev() {
            chi[j] = chi[j + 1] + rng.gen_range(0.5..0.95) * lambda[j];
        }
        let mut theta = vec![rng.gen_range(-0.9..0.9) * chi[0]; 1];
        let mut vartheta = vec![rng.gen_range(0.0..TAU)];
        // (Θ_i, ϑ_i) fixes |C^(i-1)|: redraw the pair until e_{i-1} is in range
        for i in 1..n {
            let bound = chi[i - 1].min(chi[i]);
            let mut accepted = false;
            for _ in 0..PAIR_DRAWS {
                theta.push(rng.gen_range(-0.9..0.9) * bound);
                vartheta.push(rng.gen_range(0.0..TAU));
                let r = angular_momentum_norm(&theta, &chi[..=i], &vartheta, i - 1) / lambda[i - 1];
                let e = (1.0 - r * r).max(0.0).sqrt();
                if (0.1..=0.7).contains(&e) {
                    accepted = true;
                    break;
                }
                theta.pop();
                vartheta.pop();
            }
            if !accepted {
                return None;
            }
        }
        let kappa: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let ell: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        Some(PCoords { theta, chi, lambda, vartheta, kappa, ell }.to_vec())
    }
    fn scales(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n();
        let c = smallest_momentum(n, z);
        (0..6 * n).map(|k| if k < 2 * n { c } else if k < 3 * n { z[k] } else { 1.0 }).collect()
    }
    fn is_angle(&self, k: usize) -> bool {
        k >= 3 * self.n()
    }
}

/// Delaunay chart `(H, Γ, Λ; h, g, ℓ) ↦ (y; x)`.
///
/// Sampling: axes as in [`sample_axes`], `e ∈ [0.05, 0.6]`, inclination in
/// `[0.1, π - 0.1]`, uniform angles.
pub struct DelaunayChart {
    pub masses: MassSystem,
}

impl CanonicalChart for DelaunayChart {
    fn name(&self) -> &str {
        "delaunay"
    }
    fn n(&self) -> usize {
        self.masses.n()
    }
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(delaunay_map(&DelaunayCoords::from_slice(self.n(), z)?, &self.masses)?.to_vec())
    }
    fn inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(delaunay_map_inverse(&PhaseState::from_slice(self.n(), w)?, &self.masses)?.to_vec())
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let n = self.n();
        let a = sample_axes(rng, n);
        let lambda: Vec<f64> = (0..n).map(|j| self.masses.lambda(j, a[j])).collect();
        let big_gamma: Vec<f64> = lambda
            .iter()
            .map(|l| {
                let e: f64 = rng.gen_range(0.05..0.6);
                l * (1.0 - e * e).sqrt()
            })
            .collect();
        let big_h = big_gamma.iter().map(|g| g * rng.gen_range(0.1..PI - 0.1_f64).cos()).collect();
        let mut angles = || (0..n).map(|_| rng.gen_range(0.0..TAU)).collect::<Vec<f64>>();
        let (h, g, ell) = (angles(), angles(), angles());
        Some(DelaunayCoords { big_h, big_gamma, lambda, h, g, ell }.to_vec())
    }
    fn scales(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..6 * n).map(|k| if k < 2 * n { z[n + k % n] } else if k < 3 * n { z[k] } else { 1.0 }).collect()
    }
    fn is_angle(&self, k: usize) -> bool {
        k >= 3 * self.n()
    }
}

/// Radial perihelia chart `(Θ, χ, R; ϑ, κ, r) ↦ (y; x)`.
///
/// Sampling: `χ_{n-1} ∈ [0.5, 1.5]`, `χ_{j-1} - χ_j ∈ [0.3, 1.5]`,
/// `|Θ_i| <= 0.9` of its bound, `R ∈ [-1, 1]`, `r ∈ [0.5, 5]`, uniform angles.
pub struct TildePChart {
    pub n: usize,
}

impl CanonicalChart for TildePChart {
    fn name(&self) -> &str {
        "tilde-p"
    }
    fn n(&self) -> usize {
        self.n
    }
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(tilde_p_map(&TildePCoords::from_slice(self.n, z)?)?.to_vec())
    }
    fn inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(tilde_p_map_inverse(&PhaseState::from_slice(self.n, w)?)?.to_vec())
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let n = self.n;
        let mut chi = vec![0.0_f64; n];
        chi[n - 1] = rng.gen_range(0.5..1.5);
        for j in (0..n - 1).rev() {
            chi[j] = chi[j + 1] + rng.gen_range(0.3..1.5);
        }
        let theta = (0..n)
            .map(|i| {
                let bound = if i == 0 { chi[0] } else { chi[i - 1].min(chi[i]) };
                rng.gen_range(-0.9..0.9) * bound
            })
            .collect();
        let big_r = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vartheta = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let kappa = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let r = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        Some(TildePCoords { theta, chi, big_r, vartheta, kappa, r }.to_vec())
    }
    fn scales(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let c = smallest_momentum(n, z);
        (0..6 * n)
            .map(|k| match k / n {
                0 | 1 => c,
                5 => z[k],
                _ => 1.0,
            })
            .collect()
    }
    fn is_angle(&self, k: usize) -> bool {
        let b = k / self.n;
        b == 3 || b == 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_linear_jacobians() {
        let p = [0.3, -1.2, 2.0, 0.7];
        let j = numerical_jacobian(|z| Ok(z.to_vec()), &p, &[1.0; 4], JacobianOptions::default()).unwrap();
        assert!((j - DMatrix::<f64>::identity(4, 4)).amax() < 1e-12);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let lin = |z: &[f64]| Ok((a.clone() * nalgebra::DVector::from_column_slice(z)).iter().copied().collect());
        let j = numerical_jacobian(lin, &[0.4, 0.1], &[1.0, 1.0], JacobianOptions::default()).unwrap();
        assert!((j - a.clone()).amax() < 1e-10);
    }

    #[test]
    fn rotation_in_phase_plane_is_symplectic() {
        let f = |z: &[f64]| {
            let (s, c) = 0.7_f64.sin_cos();
            Ok(vec![c * z[0] + s * z[1], -s * z[0] + c * z[1]])
        };
        let r = symplectic_defect(f, &[1.0, 2.0], &[1.0, 1.0], JacobianOptions::default()).unwrap();
        assert!(r.defect < 1e-10);
        let shear = |z: &[f64]| Ok(vec![2.0 * z[0], z[1]]);
        let r = symplectic_defect(shear, &[1.0, 2.0], &[1.0, 1.0], JacobianOptions::default()).unwrap();
        assert!((r.defect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stencil_outside_domain() {
        let f = |z: &[f64]| if z[0] > 1.0 { Err(Error::DomainViolation("x".into())) } else { Ok(z.to_vec()) };
        let r = numerical_jacobian(f, &[1.0, 0.0], &[1.0, 1.0], JacobianOptions::default());
        assert!(matches!(r, Err(Error::DomainViolation(_))));
    }

    #[test]
    fn identity_roundtrip_is_exact() {
        let s = roundtrip_defect(&IdentityChart { n: 2 }, 20, 3).unwrap();
        assert_eq!(s.max, 0.0);
    }

    #[test]
    fn chart_roundtrips_deterministic() {
        let m = MassSystem::new(1.0, vec![0.7, 1.1, 0.9], 0.01).unwrap();
        let chart = PChart { masses: m };
        let a = roundtrip_defect(&chart, 50, 11).unwrap();
        let b = roundtrip_defect(&chart, 50, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.max <= 1e-9, "{a:?}");
        let d = roundtrip_defect(&DelaunayChart { masses: MassSystem::uniform(2, 0.01) }, 50, 2).unwrap();
        assert!(d.max <= 1e-10, "{d:?}");
        let t = roundtrip_defect(&TildePChart { n: 3 }, 50, 5).unwrap();
        assert!(t.max <= 1e-10, "{t:?}");
    }

    #[test]
    fn charts_are_symplectic() {
        let opts = JacobianOptions::default();
        let p = symplectic_audit(&PChart { masses: MassSystem::uniform(2, 0.01) }, 3, 1, opts).unwrap();
        assert!(p.max_defect <= 1e-6, "{p:?}");
        let d = symplectic_audit(&DelaunayChart { masses: MassSystem::uniform(1, 0.01) }, 3, 1, opts).unwrap();
        assert!(d.max_defect <= 1e-8, "{d:?}");
        let t = symplectic_audit(&TildePChart { n: 2 }, 3, 1, opts).unwrap();
        assert!(t.max_defect <= 1e-6, "{t:?}");
    }

    #[test]
    fn plain_central_difference_converges_quadratically() {
        let chart = DelaunayChart { masses: MassSystem::uniform(2, 0.01) };
        let coarse = JacobianOptions { step_rel: 2e-5, richardson: false };
        let fine = JacobianOptions { step_rel: 1e-5, richardson: false };
        let a = symplectic_audit(&chart, 10, 4, coarse).unwrap();
        let b = symplectic_audit(&chart, 10, 4, fine).unwrap();
        let ratio = a.max_defect / b.max_defect;
        assert!(ratio >= 3.5, "ratio {ratio}");
    }
}
