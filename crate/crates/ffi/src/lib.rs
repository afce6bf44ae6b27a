//! C ABI over `polystab`. Every call returns a [`PsStatus`]; on failure the
//! message is kept per thread and can be read with [`ps_last_error`].
//! Objects cross the boundary as opaque handles released by their `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use polystab::constants::{find_n0, gamma_const};
use polystab::monotone::{compute_cp_prime, monotone_iterate, MonotoneConfig, PolynomialSpec, SystemIterate};
use polystab::shooting::{find_borderline, ShootingConfig};
use polystab::stability::{pointwise_certificate, CertVerdict};
use polystab::{integrate, Dimension, Error, IntegratorConfig, Problem, ProfileStatus, RadialProfile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Dimension = 3,
    Parity = 4,
    Classification = 5,
    Numerical = 6,
    Admissibility = 7,
    Monotonicity = 8,
    Inconclusive = 9,
    Search = 10,
    Range = 11,
    Io = 12,
    Unsupported = 13,
    BufferTooSmall = 14,
    Panic = 99,
}

impl From<&Error> for PsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parity(_) => PsStatus::Parity,
            Error::Dimension(_) => PsStatus::Dimension,
            Error::Config(_) => PsStatus::Config,
            Error::Range(_) => PsStatus::Range,
            Error::Inconclusive { .. } => PsStatus::Inconclusive,
            Error::Classification(_) => PsStatus::Classification,
            Error::Search(_) => PsStatus::Search,
            Error::Numerical(_) => PsStatus::Numerical,
            Error::Admissibility(_) => PsStatus::Admissibility,
            Error::Monotonicity { .. } => PsStatus::Monotonicity,
            Error::Unsupported(_) => PsStatus::Unsupported,
            Error::Io(_) | Error::Json(_) => PsStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), PsStatus>>(f: F) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside polystab".into());
            PsStatus::Panic
        }
    }
}

fn lift<T>(r: polystab::Result<T>) -> Result<T, PsStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        PsStatus::from(&e)
    })
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), PsStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(PsStatus::NullPointer)
    } else {
        Ok(())
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], PsStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    nonnull(p, what)?;
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), PsStatus> {
    nonnull(buf, "output buffer")?;
    if len < src.len() {
        set_error(format!("buffer holds {len} values, need {}", src.len()));
        return Err(PsStatus::BufferTooSmall);
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Opaque integrated profile.
pub struct PsProfile(RadialProfile);

/// Opaque converged monotone iterate.
pub struct PsIterate(SystemIterate);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsCertificate {
    pub gamma: f64,
    pub sup_value: f64,
    pub sup_radius: f64,
    pub margin: f64,
    /// 0 pass, 1 fail, 2 inconclusive (sup in the tail band).
    pub verdict: i32,
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 when there is none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// `γ_{N,m}` as a float.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_gamma(m: u32, n: u32, out: *mut f64) -> PsStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = lift(Dimension::new(m, n).and_then(gamma_const))?;
        *out = g.to_f64();
        Ok(())
    })
}

/// Smallest `N0` with `P_m(N) <= λ_{N,m}` from `N0` on.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_find_n0(m: u32, out: *mut u32) -> PsStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = lift(find_n0(m))?.n0;
        Ok(())
    })
}

/// Integrates the radial problem with data `a[0..m]`. `r_max <= 0` selects the default radius.
///
/// # Safety
/// `a` must hold `a_len` values; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_integrate(
    m: u32,
    n: u32,
    a: *const f64,
    a_len: usize,
    r_max: f64,
    out: *mut *mut PsProfile,
) -> PsStatus {
    guard(|| {
        nonnull(out, "out")?;
        let a = input(a, a_len, "a")?;
        let dim = lift(Dimension::new(m, n))?;
        let p = lift(Problem::new(dim, a.to_vec()))?;
        let mut cfg = IntegratorConfig::for_problem(&p);
        if r_max > 0.0 {
            cfg.set_r_max(r_max);
        }
        let prof = lift(integrate(&p, &cfg))?;
        *out = Box::into_raw(Box::new(PsProfile(prof)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `ps_integrate` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_profile_free(p: *mut PsProfile) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of grid nodes.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_profile_len(p: *const PsProfile) -> usize {
    p.as_ref().map_or(0, |p| p.0.len())
}

/// `global` is 1 for a global profile, 0 for blow-up; `radius` is `r_max` or the blow-up radius.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_profile_status(p: *const PsProfile, global: *mut i32, radius: *mut f64) -> PsStatus {
    guard(|| {
        nonnull(p, "profile")?;
        nonnull(global, "global")?;
        nonnull(radius, "radius")?;
        match (*p).0.status() {
            ProfileStatus::Global { r_max } => {
                *global = 1;
                *radius = r_max;
            }
            ProfileStatus::BlowUp { radius: r, .. } => {
                *global = 0;
                *radius = r;
            }
        }
        Ok(())
    })
}

/// Copies the radial grid (`ps_profile_len` values).
///
/// # Safety
/// `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ps_profile_grid(p: *const PsProfile, buf: *mut f64, len: usize) -> PsStatus {
    guard(|| {
        nonnull(p, "profile")?;
        copy_out((*p).0.grid(), buf, len)
    })
}

/// Copies `v_k = (-Δ)^k u` at the grid nodes.
///
/// # Safety
/// `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ps_profile_component(p: *const PsProfile, k: u32, buf: *mut f64, len: usize) -> PsStatus {
    guard(|| {
        nonnull(p, "profile")?;
        let prof = &(*p).0;
        if k >= prof.dim().m {
            set_error(format!("component {k} out of range"));
            return Err(PsStatus::Range);
        }
        copy_out(prof.v(k as usize), buf, len)
    })
}

/// Interpolated `v_0..v_{m-1}` at radius `r` into `buf[0..m]`.
///
/// # Safety
/// `buf` must hold `len >= m` values.
#[no_mangle]
pub unsafe extern "C" fn ps_profile_evaluate(p: *const PsProfile, r: f64, buf: *mut f64, len: usize) -> PsStatus {
    guard(|| {
        nonnull(p, "profile")?;
        let v = lift((*p).0.evaluate(r))?;
        copy_out(&v, buf, len)
    })
}

/// Pointwise certificate `sup e^u r^{2m} <= γ` of a global profile.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_profile_certificate(p: *const PsProfile, out: *mut PsCertificate) -> PsStatus {
    guard(|| {
        nonnull(p, "profile")?;
        nonnull(out, "out")?;
        let c = lift(pointwise_certificate(&(*p).0))?;
        *out = PsCertificate {
            gamma: c.gamma.to_f64(),
            sup_value: c.sup_value,
            sup_radius: c.sup_radius,
            margin: c.margin,
            verdict: match c.verdict {
                CertVerdict::Pass => 0,
                CertVerdict::Fail => 1,
                CertVerdict::InconclusiveTail => 2,
            },
        };
        Ok(())
    })
}

/// Bracket `[lo, hi]` of the borderline `a_{m-1}` (even `m`) for the given head `a_0..a_{m-2}`.
///
/// # Safety
/// `head` must hold `head_len` values; `lo`, `hi` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_find_borderline(
    m: u32,
    n: u32,
    head: *const f64,
    head_len: usize,
    tol: f64,
    lo: *mut f64,
    hi: *mut f64,
) -> PsStatus {
    guard(|| {
        nonnull(lo, "lo")?;
        nonnull(hi, "hi")?;
        let head = input(head, head_len, "head")?;
        let dim = lift(Dimension::new(m, n))?;
        let br = lift(find_borderline(dim, head, tol, &ShootingConfig::default()))?;
        *lo = br.lo;
        *hi = br.hi;
        Ok(())
    })
}

/// Monotone iteration for radial `P = Σ b_k r^{2k}`. A NaN `c` selects `C̃_P`;
/// `nodes == 0` selects the default grid.
///
/// # Safety
/// `coeffs` must hold `n_coeffs` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_monotone_iterate(
    m: u32,
    n: u32,
    coeffs: *const f64,
    n_coeffs: usize,
    c: f64,
    nodes: usize,
    out: *mut *mut PsIterate,
) -> PsStatus {
    guard(|| {
        nonnull(out, "out")?;
        let b = input(coeffs, n_coeffs, "coeffs")?;
        let dim = lift(Dimension::new(m, n))?;
        let p = PolynomialSpec::radial(b.to_vec());
        let c = if c.is_nan() {
            lift(compute_cp_prime(&p, dim, 0))?.c_tilde
        } else {
            c
        };
        let mut cfg = MonotoneConfig::default();
        if nodes > 0 {
            cfg.nodes = nodes;
        }
        let it = lift(monotone_iterate(&p, dim, c, &cfg))?;
        *out = Box::into_raw(Box::new(PsIterate(it)));
        Ok(())
    })
}

/// # Safety
/// `it` must come from `ps_monotone_iterate` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_iterate_free(it: *mut PsIterate) {
    if !it.is_null() {
        drop(Box::from_raw(it));
    }
}

/// Extracted initial data `a_0..a_{m-1}` into `buf`.
///
/// # Safety
/// `buf` must hold `len >= m` values.
#[no_mangle]
pub unsafe extern "C" fn ps_iterate_initial_data(it: *const PsIterate, buf: *mut f64, len: usize) -> PsStatus {
    guard(|| {
        nonnull(it, "iterate")?;
        copy_out(&(*it).0.initial_data(), buf, len)
    })
}

/// Constant `C`, final residual, sweep count, and whether `0 <= z <= W_m` held.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_iterate_summary(
    it: *const PsIterate,
    c: *mut f64,
    residual: *mut f64,
    iterations: *mut usize,
    sandwich: *mut i32,
) -> PsStatus {
    guard(|| {
        nonnull(it, "iterate")?;
        nonnull(c, "c")?;
        nonnull(residual, "residual")?;
        nonnull(iterations, "iterations")?;
        nonnull(sandwich, "sandwich")?;
        let s = &(*it).0;
        *c = s.c;
        *residual = s.residual;
        *iterations = s.iterations;
        *sandwich = s.sandwich as i32;
        Ok(())
    })
}

/// Reads the last error as an owned string (Rust callers and tests).
pub fn last_error_string() -> Option<String> {
    LAST_ERROR.with(|e| e.borrow().as_ref().map(|c| c.to_string_lossy().into_owned()))
}

#[doc(hidden)]
pub fn version_str() -> &'static str {
    unsafe { CStr::from_ptr(ps_version()) }.to_str().unwrap_or("")
}
