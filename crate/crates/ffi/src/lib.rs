//! C interface to the `coqam` library.
//!
//! Objects are opaque heap handles created by `coqam_*_new`-style functions
//! and released with the matching `_free`. Every fallible call returns a
//! [`CoqamStatus`]; the message of the most recent failure on the calling
//! thread is available from [`coqam_last_error`].
//!
//! Complex sample buffers are interleaved `re, im` doubles. Real grids are
//! row-major `K x 2M` doubles in the staggered column layout.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use coqam::channel::theoretical_qpsk_ser;
use coqam::modem::{mf_receive_wcp, synth_wcp_staggered};
use coqam::pulse::{gen_gaussian, gen_raised_cosine, gen_rectangular};
use coqam::{
    check_oqam_ofdm, check_wcp_coqam, orthogonalize_oqam, Error, FrameParams, Pulse, RealGrid,
    Waveform,
};
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoqamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Panic = 5,
}

/// Orthogonality condition family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoqamFamily {
    OqamOfdm = 0,
    WcpCoqam = 1,
}

/// Lattice parameters (opaque).
pub struct CoqamParams {
    inner: FrameParams,
}

/// Prototype pulse (opaque).
pub struct CoqamPulse {
    inner: Pulse,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> CoqamStatus {
    match err {
        Error::DimensionMismatch { .. } => CoqamStatus::DimensionMismatch,
        Error::InvalidLattice(_) | Error::InvalidParameter(_) | Error::Parse(_) | Error::Io(_) => {
            CoqamStatus::InvalidArgument
        }
        _ => CoqamStatus::Numerical,
    }
}

/// Run `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), CoqamStatus>) -> CoqamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoqamStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            CoqamStatus::Panic
        }
    }
}

fn lift<T>(r: coqam::Result<T>) -> Result<T, CoqamStatus> {
    r.map_err(|e| {
        let status = status_of(&e);
        set_error(e.to_string());
        status
    })
}

fn null(what: &str) -> CoqamStatus {
    set_error(format!("{what} is null"));
    CoqamStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, CoqamStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), CoqamStatus> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn input<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], CoqamStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn output<'a, T>(data: *mut T, len: usize, what: &str) -> Result<&'a mut [T], CoqamStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(data, len))
}

fn expect_len(what: &str, expected: usize, found: usize) -> Result<(), CoqamStatus> {
    if expected == found {
        Ok(())
    } else {
        set_error(format!("{what}: expected {expected} values, found {found}"));
        Err(CoqamStatus::DimensionMismatch)
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn coqam_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Create lattice parameters with `k` subcarriers, `m` slots and a cyclic
/// prefix of `cp_len` samples.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn coqam_params_new(
    k: usize,
    m: usize,
    cp_len: usize,
    out: *mut *mut CoqamParams,
) -> CoqamStatus {
    guard(|| {
        let inner = lift(FrameParams::new(k, m, cp_len))?;
        emit(out, CoqamParams { inner })
    })
}

/// Samples per frame, `N = K * M`; zero for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coqam_params_n(params: *const CoqamParams) -> usize {
    params.as_ref().map_or(0, |p| p.inner.n())
}

/// # Safety
/// `params` must be null or a handle from `coqam_params_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coqam_params_free(params: *mut CoqamParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Unit-energy Gaussian pulse with width parameter `beta`.
///
/// # Safety
/// `params` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_gaussian(
    params: *const CoqamParams,
    beta: f64,
    out: *mut *mut CoqamPulse,
) -> CoqamStatus {
    guard(|| {
        let params = deref(params, "params")?;
        let inner = lift(gen_gaussian(&params.inner, beta))?;
        emit(out, CoqamPulse { inner })
    })
}

/// Unit-energy raised-cosine pulse.
///
/// # Safety
/// `params` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_raised_cosine(
    params: *const CoqamParams,
    rolloff: f64,
    out: *mut *mut CoqamPulse,
) -> CoqamStatus {
    guard(|| {
        let params = deref(params, "params")?;
        let inner = lift(gen_raised_cosine(&params.inner, rolloff))?;
        emit(out, CoqamPulse { inner })
    })
}

/// Rectangular pulse over the first `K` samples.
///
/// # Safety
/// `params` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_rectangular(
    params: *const CoqamParams,
    out: *mut *mut CoqamPulse,
) -> CoqamStatus {
    guard(|| {
        let params = deref(params, "params")?;
        emit(
            out,
            CoqamPulse {
                inner: gen_rectangular(&params.inner),
            },
        )
    })
}

/// Pulse from `len` caller-supplied taps (copied).
///
/// # Safety
/// `taps` must point to `len` readable doubles and `out` be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_from_taps(
    taps: *const f64,
    len: usize,
    out: *mut *mut CoqamPulse,
) -> CoqamStatus {
    guard(|| {
        let taps = input(taps, len, "taps")?;
        let inner = lift(Pulse::from_taps(taps.to_vec()))?;
        emit(out, CoqamPulse { inner })
    })
}

/// Orthogonalize `pulse` for the lattice; the result is a new handle.
///
/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_orthogonalize(
    params: *const CoqamParams,
    pulse: *const CoqamPulse,
    out: *mut *mut CoqamPulse,
) -> CoqamStatus {
    guard(|| {
        let params = deref(params, "params")?;
        let pulse = deref(pulse, "pulse")?;
        let inner = lift(orthogonalize_oqam(&pulse.inner, &params.inner))?;
        emit(out, CoqamPulse { inner })
    })
}

/// Number of taps; zero for a null handle.
///
/// # Safety
/// `pulse` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_len(pulse: *const CoqamPulse) -> usize {
    pulse.as_ref().map_or(0, |p| p.inner.len())
}

/// Copy the taps into `buf`, which must hold exactly `coqam_pulse_len` values.
///
/// # Safety
/// `pulse` must be live and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_copy_taps(
    pulse: *const CoqamPulse,
    buf: *mut f64,
    len: usize,
) -> CoqamStatus {
    guard(|| {
        let pulse = deref(pulse, "pulse")?;
        expect_len("tap buffer", pulse.inner.len(), len)?;
        output(buf, len, "buf")?.copy_from_slice(pulse.inner.taps());
        Ok(())
    })
}

/// # Safety
/// `pulse` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coqam_pulse_free(pulse: *mut CoqamPulse) {
    if !pulse.is_null() {
        drop(Box::from_raw(pulse));
    }
}

/// Evaluate one family of orthogonality conditions. Writes the largest
/// residual and whether it is within `tol` (1 or 0).
///
/// # Safety
/// Handles must be live; the output pointers valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn coqam_check(
    params: *const CoqamParams,
    pulse: *const CoqamPulse,
    family: CoqamFamily,
    tol: f64,
    max_residual: *mut f64,
    pass: *mut c_int,
) -> CoqamStatus {
    guard(|| {
        let params = deref(params, "params")?;
        let pulse = deref(pulse, "pulse")?;
        if max_residual.is_null() || pass.is_null() {
            return Err(null("output"));
        }
        let report = lift(match family {
            CoqamFamily::OqamOfdm => check_oqam_ofdm(&pulse.inner, &params.inner, tol),
            CoqamFamily::WcpCoqam => check_wcp_coqam(&pulse.inner, &params.inner, tol),
        })?;
        *max_residual = report.max_residual;
        *pass = c_int::from(report.pass);
        Ok(())
    })
}

/// Synthesize one CP-free WCP-COQAM frame. `grid` holds `2 * N` real
/// symbols (`K` rows of `2M` columns); `samples` receives `N` interleaved
/// complex samples (`2 * N` doubles).
///
/// # Safety
/// `grid` must be readable for `grid_len` doubles and `samples` writable for
/// `samples_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coqam_synth_wcp(
    params: *const CoqamParams,
    pulse: *const CoqamPulse,
    grid: *const f64,
    grid_len: usize,
    samples: *mut f64,
    samples_len: usize,
) -> CoqamStatus {
    guard(|| {
        let params = &deref(params, "params")?.inner;
        let pulse = &deref(pulse, "pulse")?.inner;
        expect_len("grid", 2 * params.n(), grid_len)?;
        expect_len("samples", 2 * params.n(), samples_len)?;
        let rg = lift(RealGrid::from_vec(
            params.k(),
            2 * params.m(),
            input(grid, grid_len, "grid")?.to_vec(),
        ))?;
        let w = lift(synth_wcp_staggered(&rg, pulse, params))?;
        let out = output(samples, samples_len, "samples")?;
        for (pair, s) in out.chunks_exact_mut(2).zip(&w.samples) {
            pair[0] = s.re;
            pair[1] = s.im;
        }
        Ok(())
    })
}

/// Matched-filter demodulation of `N` interleaved complex samples into a
/// `K x 2M` real grid.
///
/// # Safety
/// `samples` must be readable for `samples_len` doubles and `grid` writable
/// for `grid_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coqam_mf_receive_wcp(
    params: *const CoqamParams,
    pulse: *const CoqamPulse,
    samples: *const f64,
    samples_len: usize,
    grid: *mut f64,
    grid_len: usize,
) -> CoqamStatus {
    guard(|| {
        let params = &deref(params, "params")?.inner;
        let pulse = &deref(pulse, "pulse")?.inner;
        expect_len("samples", 2 * params.n(), samples_len)?;
        expect_len("grid", 2 * params.n(), grid_len)?;
        let w = Waveform::new(
            input(samples, samples_len, "samples")?
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        );
        let rg = lift(mf_receive_wcp(&w, pulse, params))?;
        output(grid, grid_len, "grid")?.copy_from_slice(rg.as_slice());
        Ok(())
    })
}

/// Gray-coded QPSK symbol error rate over AWGN at `es_n0_db`.
#[no_mangle]
pub extern "C" fn coqam_theoretical_qpsk_ser(es_n0_db: f64) -> f64 {
    theoretical_qpsk_ser(es_n0_db)
}
