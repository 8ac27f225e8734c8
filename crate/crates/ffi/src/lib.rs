//! C ABI over the perihelia library.
//!
//! Every fallible function returns a [`PeriStatus`]. On failure the message is
//! kept per thread and can be copied out with [`peri_last_error_message`].
//! Coordinate and state vectors are flat `f64` arrays of length `6n` using the
//! block ordering of the Rust API: `(Θ, χ, Λ, ϑ, κ, ℓ)` for the P chart,
//! `(H, Γ, Λ, h, g, ℓ)` for Delaunay and `(y_1..y_n, x_1..x_n)` for states.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use perihelia::charts::{delaunay_map, delaunay_map_inverse, p_map, p_map_inverse, DelaunayCoords, PCoords};
use perihelia::kepler::{levi_civita_limit, solve_kepler_real, MassSystem};
use perihelia::planetary::{fn1n_closed_form, ovl_f_closed_form, PhaseState, QuadrupoleArgs};
use perihelia::secular::{diophantine_check, secular_coefficients, DiophantineSpec, SecularPoint};
use perihelia::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DomainViolation = 3,
    DegenerateGeometry = 4,
    NoConvergence = 5,
    Collision = 6,
    OrbitCrossing = 7,
    IllConditioned = 8,
    CapExceeded = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

impl From<&Error> for PeriStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => PeriStatus::InvalidInput,
            Error::OutOfDomain(_) | Error::DomainViolation(_) | Error::Unbound(_) => PeriStatus::DomainViolation,
            Error::DegenerateNode { .. }
            | Error::NotCoplanar(_)
            | Error::ZeroPosition
            | Error::CircularOrbit(_)
            | Error::Degenerate(_) => PeriStatus::DegenerateGeometry,
            Error::NoConvergence(_) => PeriStatus::NoConvergence,
            Error::Collision(_) => PeriStatus::Collision,
            Error::OrbitCrossing { .. } => PeriStatus::OrbitCrossing,
            Error::IllConditioned(_) => PeriStatus::IllConditioned,
            Error::CapExceeded(_) => PeriStatus::CapExceeded,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: PeriStatus, msg: impl Into<String>) -> PeriStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> PeriStatus {
    let status = PeriStatus::from(&e);
    fail(status, e.to_string())
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), PeriStatus>) -> PeriStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PeriStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PeriStatus::Panic, msg)
        }
    }
}

fn lib<T>(r: perihelia::Result<T>) -> Result<T, PeriStatus> {
    r.map_err(from_error)
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], PeriStatus> {
    if ptr.is_null() {
        return Err(fail(PeriStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], PeriStatus> {
    if ptr.is_null() {
        return Err(fail(PeriStatus::NullPointer, format!("{what} is null")));
    }
    if len < need {
        return Err(fail(PeriStatus::BufferTooSmall, format!("{what} holds {len} values, {need} needed")));
    }
    Ok(slice::from_raw_parts_mut(ptr, need))
}

unsafe fn handle<'a>(ptr: *const PeriMassSystem, len: usize) -> Result<&'a MassSystem, PeriStatus> {
    if ptr.is_null() {
        return Err(fail(PeriStatus::NullPointer, "mass system handle is null"));
    }
    let ms = &(*ptr).0;
    if len != 6 * ms.n() {
        return Err(fail(
            PeriStatus::InvalidInput,
            format!("vector length {len} does not match 6n = {}", 6 * ms.n()),
        ));
    }
    Ok(ms)
}

/// Copies the last error message of this thread into `buf` as a NUL-terminated
/// string, truncating if needed. Returns the full message length in bytes
/// (excluding the terminator); an empty string means the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn peri_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            let out = slice::from_raw_parts_mut(buf as *mut u8, len);
            out[..n].copy_from_slice(&msg.as_bytes()[..n]);
            out[n] = 0;
        }
        msg.len()
    })
}

/// Opaque handle to a validated central mass, planet masses and mass ratio.
pub struct PeriMassSystem(MassSystem);

/// Creates a mass system with central mass `m0`, `n` planet masses scaled by
/// `mu`. The handle must be released with [`peri_mass_system_free`].
///
/// # Safety
/// `masses` must point to `n` readable values and `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn peri_mass_system_new(
    m0: f64,
    masses: *const f64,
    n: usize,
    mu: f64,
    out: *mut *mut PeriMassSystem,
) -> PeriStatus {
    guard(|| {
        let m = input(masses, n, "masses")?;
        if out.is_null() {
            return Err(fail(PeriStatus::NullPointer, "output handle is null"));
        }
        let ms = lib(MassSystem::new(m0, m.to_vec(), mu))?;
        *out = Box::into_raw(Box::new(PeriMassSystem(ms)));
        Ok(())
    })
}

/// Releases a handle from [`peri_mass_system_new`]. Null is ignored.
///
/// # Safety
/// `ms` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn peri_mass_system_free(ms: *mut PeriMassSystem) {
    if !ms.is_null() {
        drop(Box::from_raw(ms));
    }
}

/// Number of planets of the system, or 0 for a null handle.
///
/// # Safety
/// `ms` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn peri_mass_system_planets(ms: *const PeriMassSystem) -> usize {
    if ms.is_null() {
        0
    } else {
        (*ms).0.n()
    }
}

type Chart = fn(&[f64], &MassSystem) -> perihelia::Result<Vec<f64>>;

unsafe fn apply(ms: *const PeriMassSystem, src: *const f64, len: usize, dst: *mut f64, dst_len: usize, f: Chart) -> PeriStatus {
    guard(|| {
        let m = handle(ms, len)?;
        let v = input(src, len, "input vector")?;
        let out = output(dst, dst_len, len, "output vector")?;
        let r = lib(f(v, m))?;
        out.copy_from_slice(&r);
        Ok(())
    })
}

/// Maps P coordinates to the Cartesian state.
///
/// # Safety
/// `coords` must point to `len` values and `state` to `state_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn peri_p_map(
    ms: *const PeriMassSystem,
    coords: *const f64,
    len: usize,
    state: *mut f64,
    state_len: usize,
) -> PeriStatus {
    apply(ms, coords, len, state, state_len, |v, m| {
        let c = PCoords::from_slice(m.n(), v)?;
        Ok(p_map(&c, m)?.to_vec())
    })
}

/// Maps a Cartesian state to P coordinates.
///
/// # Safety
/// `state` must point to `len` values and `coords` to `coords_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn peri_p_map_inverse(
    ms: *const PeriMassSystem,
    state: *const f64,
    len: usize,
    coords: *mut f64,
    coords_len: usize,
) -> PeriStatus {
    apply(ms, state, len, coords, coords_len, |v, m| {
        let s = PhaseState::from_slice(m.n(), v)?;
        Ok(p_map_inverse(&s, m)?.to_vec())
    })
}

/// Maps Delaunay coordinates to the Cartesian state.
///
/// # Safety
/// `coords` must point to `len` values and `state` to `state_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn peri_delaunay_map(
    ms: *const PeriMassSystem,
    coords: *const f64,
    len: usize,
    state: *mut f64,
    state_len: usize,
) -> PeriStatus {
    apply(ms, coords, len, state, state_len, |v, m| {
        let c = DelaunayCoords::from_slice(m.n(), v)?;
        Ok(delaunay_map(&c, m)?.to_vec())
    })
}

/// Maps a Cartesian state to Delaunay coordinates.
///
/// # Safety
/// `state` must point to `len` values and `coords` to `coords_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn peri_delaunay_map_inverse(
    ms: *const PeriMassSystem,
    state: *const f64,
    len: usize,
    coords: *mut f64,
    coords_len: usize,
) -> PeriStatus {
    apply(ms, state, len, coords, coords_len, |v, m| {
        let s = PhaseState::from_slice(m.n(), v)?;
        Ok(delaunay_map_inverse(&s, m)?.to_vec())
    })
}

/// Solves `ζ − e sin ζ = ℓ` for `0 <= e < 1` on the lifted branch.
///
/// # Safety
/// `zeta` must point to a writable value.
#[no_mangle]
pub unsafe extern "C" fn peri_solve_kepler(ecc: f64, ell: f64, zeta: *mut f64) -> PeriStatus {
    guard(|| {
        let out = output(zeta, 1, 1, "zeta")?;
        out[0] = lib(solve_kepler_real(ecc, ell))?;
        Ok(())
    })
}

/// Radius of convergence in `e` of the Kepler series (the Laplace limit).
#[no_mangle]
pub extern "C" fn peri_levi_civita_limit() -> f64 {
    levi_civita_limit()
}

/// Arguments of a quadrupole closed form for the pair `(i, i+1)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PeriQuadrupoleArgs {
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

impl From<PeriQuadrupoleArgs> for QuadrupoleArgs {
    fn from(a: PeriQuadrupoleArgs) -> Self {
        QuadrupoleArgs {
            theta: a.theta,
            vartheta: a.vartheta,
            chi_prev: a.chi_prev,
            chi: a.chi,
            chi_next: a.chi_next,
            lambda: a.lambda,
            lambda_next: a.lambda_next,
            a: a.a,
            a_next: a.a_next,
            m: a.m,
            m_next: a.m_next,
        }
    }
}

/// Which quadrupole closed form to evaluate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriQuadrupoleKind {
    /// Outermost pair, `χ_next` ignored.
    Outermost = 0,
    /// Inner pair with the outer secular variables at equilibrium.
    Inner = 1,
}

/// Evaluates a quadrupole closed form; `kind` is a [`PeriQuadrupoleKind`] value.
///
/// # Safety
/// `args` must point to a readable struct and `value` to a writable value.
#[no_mangle]
pub unsafe extern "C" fn peri_quadrupole(
    kind: i32,
    args: *const PeriQuadrupoleArgs,
    value: *mut f64,
) -> PeriStatus {
    guard(|| {
        if args.is_null() {
            return Err(fail(PeriStatus::NullPointer, "args is null"));
        }
        let out = output(value, 1, 1, "value")?;
        let a = QuadrupoleArgs::from(*args);
        out[0] = lib(match kind {
            k if k == PeriQuadrupoleKind::Outermost as i32 => fn1n_closed_form(&a),
            k if k == PeriQuadrupoleKind::Inner as i32 => ovl_f_closed_form(&a),
            k => return Err(fail(PeriStatus::InvalidInput, format!("unknown quadrupole kind {k}"))),
        })?;
        Ok(())
    })
}

/// Point at which the secular coefficients of planet `i` are evaluated.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PeriSecularPoint {
    pub chi_prev: f64,
    pub chi: f64,
    /// Zero for the outermost planet.
    pub chi_next: f64,
    pub lambda: f64,
    pub lambda_next: f64,
    pub a: f64,
    pub a_next: f64,
    pub m: f64,
    pub m_next: f64,
}

/// Elliptic-equilibrium coefficients of the quadrupole term.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PeriSecularCoeffs {
    pub beta: f64,
    pub amplitude: f64,
    pub energy: f64,
    pub omega: f64,
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
}

/// Closed-form secular coefficients at `point`.
///
/// # Safety
/// `point` must point to a readable struct and `out` to a writable one.
#[no_mangle]
pub unsafe extern "C" fn peri_secular_coefficients(
    point: *const PeriSecularPoint,
    out: *mut PeriSecularCoeffs,
) -> PeriStatus {
    guard(|| {
        if point.is_null() || out.is_null() {
            return Err(fail(PeriStatus::NullPointer, "point or output is null"));
        }
        let p = *point;
        let pt = SecularPoint {
            chi_prev: p.chi_prev,
            chi: p.chi,
            chi_next: p.chi_next,
            lambda: p.lambda,
            lambda_next: p.lambda_next,
            a: p.a,
            a_next: p.a_next,
            m: p.m,
            m_next: p.m_next,
        };
        let c = lib(secular_coefficients(&pt))?;
        *out = PeriSecularCoeffs {
            beta: c.beta,
            amplitude: c.amplitude,
            energy: c.energy,
            omega: c.omega,
            tau: c.tau,
            tau1: c.tau1,
            tau2: c.tau2,
            tau3: c.tau3,
        };
        Ok(())
    })
}

/// Summary of a Diophantine check.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PeriDiophantineResult {
    pub pass: bool,
    /// `|ω·k| − γ_j / |k|₁^τ` at the reported lattice vector.
    pub margin: f64,
    /// Number of lattice vectors examined.
    pub checked: u64,
}

/// Checks the multi-scale Diophantine condition on `0 < |k|₁ <= k_max`.
/// The frequency vector is split into `n_blocks` consecutive blocks of sizes
/// `blocks` with constants `gammas`. The worst lattice vector (the first
/// violation when failing) is written to `worst_k`, which must hold `dim` values.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn peri_diophantine_check(
    omega: *const f64,
    dim: usize,
    blocks: *const usize,
    gammas: *const f64,
    n_blocks: usize,
    tau: f64,
    k_max: u32,
    out: *mut PeriDiophantineResult,
    worst_k: *mut i64,
    worst_len: usize,
) -> PeriStatus {
    guard(|| {
        let w = input(omega, dim, "omega")?;
        if blocks.is_null() {
            return Err(fail(PeriStatus::NullPointer, "blocks is null"));
        }
        let b = slice::from_raw_parts(blocks, n_blocks);
        let g = input(gammas, n_blocks, "gammas")?;
        if out.is_null() {
            return Err(fail(PeriStatus::NullPointer, "output is null"));
        }
        let k_out = output(worst_k, worst_len, dim, "worst_k")?;
        let spec = DiophantineSpec { nu_blocks: b.to_vec(), gammas: g.to_vec(), tau, k_max };
        let r = lib(diophantine_check(w, &spec))?;
        k_out.copy_from_slice(&r.worst_k);
        *out = PeriDiophantineResult { pass: r.pass, margin: r.margin, checked: r.checked };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_covers_categories() {
        assert_eq!(PeriStatus::from(&Error::InvalidInput("x".into())), PeriStatus::InvalidInput);
        assert_eq!(PeriStatus::from(&Error::CapExceeded(3)), PeriStatus::CapExceeded);
        assert_eq!(PeriStatus::from(&Error::ZeroPosition), PeriStatus::DegenerateGeometry);
        assert_eq!(PeriStatus::from(&Error::OutOfDomain("x".into())), PeriStatus::DomainViolation);
    }

    #[test]
    fn guard_catches_panics() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, PeriStatus::Panic);
        let mut buf = [0 as c_char; 16];
        let n = unsafe { peri_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, 4);
    }

    #[test]
    fn error_message_truncates() {
        set_error("a long message".into());
        let mut buf = [1 as c_char; 5];
        let n = unsafe { peri_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, 14);
        assert_eq!(buf[4], 0);
        assert_eq!(buf[0] as u8, b'a');
    }
}
