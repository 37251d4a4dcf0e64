//! C ABI for the polaritron model.
//!
//! Parameters and spectra live behind opaque handles created and released by
//! this library. Every fallible call returns a `PolaritronStatus`; the message
//! of the most recent failure on the calling thread is available from
//! `polaritron_last_error`. Frequencies and rates are angular, in rad/s.

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use polaritron::langevin::{build_drift_matrix, eigensolve};
use polaritron::model::PhysicalParams;
use polaritron::spectra::{
    coldest_angle, heterodyne_spectrum, mechanical_spectrum, occupation, FrequencyGrid, Spectrum,
};
use polaritron::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolaritronStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Unstable = 3,
    Singular = 4,
    GridTooNarrow = 5,
    InvalidGrid = 6,
    BufferTooSmall = 7,
    Numerical = 8,
    Panic = 9,
}

/// Scalar fields of the parameter set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolaritronField {
    Delta = 0,
    Kappa = 1,
    OmegaX0 = 2,
    OmegaY0 = 3,
    GammaMx = 4,
    GammaMy = 5,
    Gx = 6,
    Gy = 7,
    NThX = 8,
    NThY = 9,
    GammaNx = 10,
    GammaNy = 11,
    Eta = 12,
    OmegaLo = 13,
}

/// Opaque parameter set.
pub struct PolaritronParams {
    inner: PhysicalParams,
}

/// Opaque sampled spectrum.
pub struct PolaritronSpectrum {
    inner: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PolaritronStatus {
    match e {
        Error::InvalidParameter { .. } | Error::Domain(_) | Error::IndexOutOfRange(_) => {
            PolaritronStatus::InvalidParameter
        }
        Error::Unstable { .. } => PolaritronStatus::Unstable,
        Error::Singular { .. } => PolaritronStatus::Singular,
        Error::GridTooNarrow { .. } => PolaritronStatus::GridTooNarrow,
        Error::InvalidGrid(_) => PolaritronStatus::InvalidGrid,
        _ => PolaritronStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic for `polaritron_last_error`.
fn guard(f: impl FnOnce() -> Result<(), PolaritronStatus>) -> PolaritronStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PolaritronStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            PolaritronStatus::Panic
        }
    }
}

fn lib<T>(r: polaritron::Result<T>) -> Result<T, PolaritronStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> PolaritronStatus {
    set_error("null pointer argument".into());
    PolaritronStatus::NullPointer
}

unsafe fn params_ref<'a>(p: *const PolaritronParams) -> Result<&'a PhysicalParams, PolaritronStatus> {
    p.as_ref().map(|h| &h.inner).ok_or_else(null)
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), PolaritronStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn polaritron_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn polaritron_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// New parameter set holding the library defaults. Release with
/// `polaritron_params_free`.
#[no_mangle]
pub extern "C" fn polaritron_params_new() -> *mut PolaritronParams {
    Box::into_raw(Box::new(PolaritronParams { inner: PhysicalParams::default() }))
}

/// # Safety
/// `p` must be null or a handle from `polaritron_params_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polaritron_params_free(p: *mut PolaritronParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn field_from(code: c_int) -> Result<PolaritronField, PolaritronStatus> {
    use PolaritronField::*;
    const ALL: [PolaritronField; 14] =
        [Delta, Kappa, OmegaX0, OmegaY0, GammaMx, GammaMy, Gx, Gy, NThX, NThY, GammaNx, GammaNy, Eta, OmegaLo];
    usize::try_from(code).ok().and_then(|i| ALL.get(i).copied()).ok_or_else(|| {
        set_error(format!("unknown field code {code}"));
        PolaritronStatus::InvalidParameter
    })
}

fn field_mut(p: &mut PhysicalParams, f: PolaritronField) -> &mut f64 {
    match f {
        PolaritronField::Delta => &mut p.delta,
        PolaritronField::Kappa => &mut p.kappa,
        PolaritronField::OmegaX0 => &mut p.omega_x0,
        PolaritronField::OmegaY0 => &mut p.omega_y0,
        PolaritronField::GammaMx => &mut p.gamma_mx,
        PolaritronField::GammaMy => &mut p.gamma_my,
        PolaritronField::Gx => &mut p.g_x,
        PolaritronField::Gy => &mut p.g_y,
        PolaritronField::NThX => &mut p.n_th_x,
        PolaritronField::NThY => &mut p.n_th_y,
        PolaritronField::GammaNx => &mut p.gamma_nx,
        PolaritronField::GammaNy => &mut p.gamma_ny,
        PolaritronField::Eta => &mut p.eta,
        PolaritronField::OmegaLo => &mut p.omega_lo,
    }
}

/// Sets one field (a `PolaritronField` code). The whole set is validated;
/// an invalid value is rejected and the previous value kept.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn polaritron_params_set(p: *mut PolaritronParams, field: c_int, value: f64) -> PolaritronStatus {
    guard(|| {
        let h = p.as_mut().ok_or_else(null)?;
        let field = field_from(field)?;
        let mut next = h.inner;
        *field_mut(&mut next, field) = value;
        lib(next.validate())?;
        h.inner = next;
        Ok(())
    })
}

/// Reads one field (a `PolaritronField` code).
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn polaritron_params_get(
    p: *const PolaritronParams,
    field: c_int,
    out: *mut f64,
) -> PolaritronStatus {
    guard(|| {
        let mut v = *params_ref(p)?;
        let field = field_from(field)?;
        write_out(out, *field_mut(&mut v, field))
    })
}

/// Writes 1 to `out` when every drift eigenvalue has a positive real part.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn polaritron_is_stable(p: *const PolaritronParams, out: *mut c_int) -> PolaritronStatus {
    guard(|| {
        let sol = lib(eigensolve(&build_drift_matrix(params_ref(p)?)))?;
        write_out(out, c_int::from(sol.is_stable()))
    })
}

/// Eigenfrequencies, half-widths and photonic fractions of the three
/// conjugate pairs in ascending frequency. Each output holds 3 doubles; any
/// output may be null.
///
/// # Safety
/// `p` must be a live handle; non-null outputs must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn polaritron_eigenmodes(
    p: *const PolaritronParams,
    frequencies: *mut f64,
    half_widths: *mut f64,
    photonic: *mut f64,
) -> PolaritronStatus {
    guard(|| {
        let sol = lib(eigensolve(&build_drift_matrix(params_ref(p)?)))?;
        for (k, q) in sol.pairs.iter().enumerate() {
            if !frequencies.is_null() {
                *frequencies.add(k) = q.frequency();
            }
            if !half_widths.is_null() {
                *half_widths.add(k) = q.half_width();
            }
            if !photonic.is_null() {
                *photonic.add(k) = q.composition.photonic;
            }
        }
        Ok(())
    })
}

fn grid(start: f64, stop: f64, n: usize) -> Result<FrequencyGrid, PolaritronStatus> {
    lib(FrequencyGrid::new(start, stop, n))
}

unsafe fn emit(spec: Spectrum, out: *mut *mut PolaritronSpectrum) -> Result<(), PolaritronStatus> {
    write_out(out, Box::into_raw(Box::new(PolaritronSpectrum { inner: spec })))
}

/// Shot-noise-normalised heterodyne spectrum on `n` points from `start` to
/// `stop` (offset from the local oscillator). Release with
/// `polaritron_spectrum_free`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn polaritron_heterodyne_spectrum(
    p: *const PolaritronParams,
    start: f64,
    stop: f64,
    n: usize,
    out: *mut *mut PolaritronSpectrum,
) -> PolaritronStatus {
    guard(|| {
        let params = params_ref(p)?;
        emit(lib(heterodyne_spectrum(params, &grid(start, stop, n)?))?, out)
    })
}

/// `S_bb` along the direction `theta` (rad from X towards Y).
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn polaritron_mechanical_spectrum(
    p: *const PolaritronParams,
    theta: f64,
    start: f64,
    stop: f64,
    n: usize,
    out: *mut *mut PolaritronSpectrum,
) -> PolaritronStatus {
    guard(|| {
        let params = params_ref(p)?;
        let (bb, _) = lib(mechanical_spectrum(params, theta, &grid(start, stop, n)?))?;
        emit(bb, out)
    })
}

/// # Safety
/// `s` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn polaritron_spectrum_free(s: *mut PolaritronSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn polaritron_spectrum_len(s: *const PolaritronSpectrum) -> usize {
    s.as_ref().map_or(0, |h| h.inner.values.len())
}

/// Copies frequencies and values into caller buffers of `len` doubles;
/// either buffer may be null.
///
/// # Safety
/// `s` must be a live handle; non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn polaritron_spectrum_copy(
    s: *const PolaritronSpectrum,
    frequencies: *mut f64,
    values: *mut f64,
    len: usize,
) -> PolaritronStatus {
    guard(|| {
        let h = s.as_ref().ok_or_else(null)?;
        let n = h.inner.values.len();
        if len < n {
            set_error(format!("buffer holds {len} samples, {n} needed"));
            return Err(PolaritronStatus::BufferTooSmall);
        }
        for (i, w) in h.inner.grid.points().enumerate() {
            if !frequencies.is_null() {
                *frequencies.add(i) = w;
            }
            if !values.is_null() {
                *values.add(i) = h.inner.values[i];
            }
        }
        Ok(())
    })
}

/// Trapezoidal `∫ S dΩ/2π` over the spectrum grid.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn polaritron_spectrum_integral(s: *const PolaritronSpectrum, out: *mut f64) -> PolaritronStatus {
    guard(|| {
        let h = s.as_ref().ok_or_else(null)?;
        write_out(out, h.inner.integral())
    })
}

/// Occupation along `theta`, integrated over `n` points from `start` to `stop`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn polaritron_occupation(
    p: *const PolaritronParams,
    theta: f64,
    start: f64,
    stop: f64,
    n: usize,
    out: *mut f64,
) -> PolaritronStatus {
    guard(|| {
        let params = params_ref(p)?;
        write_out(out, lib(occupation(params, theta, &grid(start, stop, n)?))?)
    })
}

/// Direction of least motion (rad) and its occupation.
///
/// # Safety
/// `p` must be a live handle and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn polaritron_coldest_angle(
    p: *const PolaritronParams,
    start: f64,
    stop: f64,
    n: usize,
    theta: *mut f64,
    n_min: *mut f64,
) -> PolaritronStatus {
    guard(|| {
        let params = params_ref(p)?;
        if theta.is_null() || n_min.is_null() {
            return Err(null());
        }
        let c = lib(coldest_angle(params, &grid(start, stop, n)?))?;
        write_out(theta, c.theta)?;
        write_out(n_min, c.n_min)
    })
}
