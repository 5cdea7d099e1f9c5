//! C ABI over `pdc-core`.
//!
//! Every fallible call returns a [`PdcStatus`]; results go through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`pdc_last_error_message`]. Handles are opaque and must be released with
//! their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pdc_core::coupling::{Couplings, CrystalConfig, Method, TransferMatrix};
use pdc_core::dispersion::{DispersionKind, DispersionModel};
use pdc_core::ensemble::{analytic_moments, monte_carlo_moments, EnsembleMoments, VacuumEnsemble};
use pdc_core::phasematch::{matched_triple, solve_theta, Process};
use pdc_core::scenarios::{photon_pair_intensity, zwm_visibility, LossModel, ZwmSetup, HALF_PUMP};
use pdc_core::PdcError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    InvalidModel = 4,
    Evanescent = 5,
    NoSolution = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdcDispersionKind {
    Constant = 0,
    Linear = 1,
    Sellmeier = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdcProcess {
    Down = 0,
    Up = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdcMethod {
    Exact = 0,
    Perturb2 = 1,
    Ode = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdcComplex {
    pub re: f64,
    pub im: f64,
}

/// Per-mode ensemble moments. `std_error` is NaN for analytic moments.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdcModeMoments {
    pub mean_intensity: f64,
    pub above_threshold: f64,
    pub count_rate: f64,
    pub std_error: f64,
}

/// Opaque dispersion model.
pub struct PdcDispersion(DispersionModel);

/// Opaque transfer matrix.
pub struct PdcTransfer(TransferMatrix);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &PdcError) -> PdcStatus {
    match e {
        PdcError::OutOfRange { .. } => PdcStatus::OutOfRange,
        PdcError::InvalidModel(_) => PdcStatus::InvalidModel,
        PdcError::Evanescent { .. } => PdcStatus::Evanescent,
        PdcError::NoSolution { .. } => PdcStatus::NoSolution,
        PdcError::StepCountTooSmall { .. }
        | PdcError::DimensionMismatch { .. }
        | PdcError::InvalidParameter(_) => PdcStatus::InvalidArgument,
    }
}

struct Fail(PdcStatus, String);

impl From<PdcError> for Fail {
    fn from(e: PdcError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PdcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PdcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PdcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PdcStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn dispersion<'a>(d: *const PdcDispersion) -> Result<&'a DispersionModel, Fail> {
    d.as_ref().map(|d| &d.0).ok_or_else(|| null("dispersion"))
}

unsafe fn transfer<'a>(t: *const PdcTransfer) -> Result<&'a TransferMatrix, Fail> {
    t.as_ref().map(|t| &t.0).ok_or_else(|| null("transfer"))
}

fn method(m: PdcMethod, ode_steps: usize) -> Method {
    match m {
        PdcMethod::Exact => Method::Exact,
        PdcMethod::Perturb2 => Method::Perturb2,
        PdcMethod::Ode => Method::Ode { steps: ode_steps },
    }
}

fn process(p: PdcProcess) -> Process {
    match p {
        PdcProcess::Down => Process::Down,
        PdcProcess::Up => Process::Up,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pdc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a dispersion model. `params` holds `n_params` values: `mu0` for
/// constant, `mu0, alpha` for linear, `B1, C1, B2, C2, ...` for Sellmeier.
///
/// # Safety
/// `params` must point to `n_params` doubles (or be null with `n_params == 0`)
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_dispersion_new(
    kind: PdcDispersionKind,
    params: *const f64,
    n_params: usize,
    pump_index: f64,
    omega_lo: f64,
    omega_hi: f64,
    out: *mut *mut PdcDispersion,
) -> PdcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let params = if n_params == 0 {
            Vec::new()
        } else if params.is_null() {
            return Err(null("params"));
        } else {
            std::slice::from_raw_parts(params, n_params).to_vec()
        };
        let kind = match kind {
            PdcDispersionKind::Constant => DispersionKind::Constant,
            PdcDispersionKind::Linear => DispersionKind::Linear,
            PdcDispersionKind::Sellmeier => DispersionKind::Sellmeier,
        };
        let model = DispersionModel::new(kind, params, pump_index, [omega_lo, omega_hi])?;
        out.write(Box::into_raw(Box::new(PdcDispersion(model))));
        Ok(())
    })
}

/// # Safety
/// `d` must come from [`pdc_dispersion_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pdc_dispersion_free(d: *mut PdcDispersion) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_mu(d: *const PdcDispersion, omega: f64, out: *mut f64) -> PdcStatus {
    guard(|| write(out, dispersion(d)?.mu(omega)?, "out"))
}

/// Smallest matching angle (internal, radians) for `process` at `omega`.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_solve_theta(
    d: *const PdcDispersion,
    omega: f64,
    process: PdcProcess,
    out: *mut f64,
) -> PdcStatus {
    guard(|| {
        let theta = solve_theta(dispersion(d)?, omega, self::process(process))?;
        write(out, theta, "out")
    })
}

/// Three-mode slab transfer for the triple matched for `process` at
/// `omega`. The matched angle is written to `theta_out` when non-null.
/// `ode_steps` is only read for [`PdcMethod::Ode`].
///
/// # Safety
/// `d` must be a live handle, `out` writable, `theta_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_transfer_build(
    d: *const PdcDispersion,
    omega: f64,
    process: PdcProcess,
    length: f64,
    g: f64,
    method: PdcMethod,
    ode_steps: usize,
    theta_out: *mut f64,
    out: *mut *mut PdcTransfer,
) -> PdcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let crystal = CrystalConfig::new(length, g)?;
        let (theta, triple) = matched_triple(dispersion(d)?, omega, self::process(process))?;
        let couplings = Couplings::from_triple(&triple, &crystal);
        let m = self::method(method, ode_steps).build(&couplings, length)?;
        if !theta_out.is_null() {
            theta_out.write(theta);
        }
        out.write(Box::into_raw(Box::new(PdcTransfer(m))));
        Ok(())
    })
}

/// Three-mode slab transfer from explicit couplings and mismatches.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_transfer_from_couplings(
    kappa_d: f64,
    kappa_u: f64,
    delta_d: f64,
    delta_u: f64,
    length: f64,
    method: PdcMethod,
    ode_steps: usize,
    out: *mut *mut PdcTransfer,
) -> PdcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let couplings = Couplings {
            kappa_d,
            kappa_u,
            delta_d,
            delta_u,
        };
        let m = self::method(method, ode_steps).build(&couplings, length)?;
        out.write(Box::into_raw(Box::new(PdcTransfer(m))));
        Ok(())
    })
}

/// # Safety
/// `t` must come from a `pdc_transfer_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pdc_transfer_free(t: *mut PdcTransfer) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of modes, 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdc_transfer_dim(t: *const PdcTransfer) -> usize {
    t.as_ref().map_or(0, |t| t.0.dim())
}

/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_transfer_get(
    t: *const PdcTransfer,
    row: usize,
    col: usize,
    out: *mut PdcComplex,
) -> PdcStatus {
    guard(|| {
        let m = transfer(t)?;
        let n = m.dim();
        if row >= n || col >= n {
            return Err(Fail(
                PdcStatus::InvalidArgument,
                format!("index ({row}, {col}) outside {n}x{n}"),
            ));
        }
        let z = m.get(row, col);
        write(out, PdcComplex { re: z.re, im: z.im }, "out")
    })
}

/// Largest entry of `|M^H eta M - eta|`.
///
/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_transfer_metric_defect(
    t: *const PdcTransfer,
    out: *mut f64,
) -> PdcStatus {
    guard(|| write(out, transfer(t)?.metric_defect(), "out"))
}

unsafe fn write_moments(
    moments: &EnsembleMoments,
    out: *mut PdcModeMoments,
    len: usize,
) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    let n = moments.modes.len();
    if len < n {
        return Err(Fail(
            PdcStatus::BufferTooSmall,
            format!("need room for {n} modes, got {len}"),
        ));
    }
    let dst = std::slice::from_raw_parts_mut(out, n);
    for (d, m) in dst.iter_mut().zip(&moments.modes) {
        *d = PdcModeMoments {
            mean_intensity: m.mean_intensity,
            above_threshold: m.above_threshold,
            count_rate: m.count_rate,
            std_error: m.stderr.unwrap_or(f64::NAN),
        };
    }
    Ok(())
}

/// Analytic vacuum moments, one entry per mode in `(a, b*, c)` order.
///
/// # Safety
/// `t` must be a live handle and `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn pdc_analytic_moments(
    t: *const PdcTransfer,
    out: *mut PdcModeMoments,
    len: usize,
) -> PdcStatus {
    guard(|| write_moments(&analytic_moments(transfer(t)?), out, len))
}

/// Sampled vacuum moments; depends only on `(seed, shots, M)`.
///
/// # Safety
/// `t` must be a live handle and `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn pdc_monte_carlo_moments(
    t: *const PdcTransfer,
    seed: u64,
    shots: usize,
    out: *mut PdcModeMoments,
    len: usize,
) -> PdcStatus {
    guard(|| {
        let m = transfer(t)?;
        let ens = VacuumEnsemble {
            n_modes: m.dim(),
            seed,
            shots,
        };
        write_moments(&monte_carlo_moments(m, &ens)?, out, len)
    })
}

/// `(kappa_d L)^2 sinc^2(delta_d L / 2)`.
#[no_mangle]
pub extern "C" fn pdc_photon_pair_intensity(kappa_d: f64, delta_d: f64, length: f64) -> f64 {
    photon_pair_intensity(kappa_d, delta_d, length)
}

/// Two identical slabs of `(length, g)` on the pair matched at half the
/// pump frequency, idler transmission `t` between them with vacuum noise
/// filling the loss. Writes the signal fringe visibility.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdc_zwm_visibility(
    d: *const PdcDispersion,
    length: f64,
    g: f64,
    t: f64,
    method: PdcMethod,
    ode_steps: usize,
    n_phi: usize,
    out: *mut f64,
) -> PdcStatus {
    guard(|| {
        let crystal = CrystalConfig::new(length, g)?;
        let (_, triple) = matched_triple(dispersion(d)?, HALF_PUMP, Process::Down)?;
        let setup = ZwmSetup {
            slabs: [crystal, crystal],
            transmission: t,
            triple,
            loss: LossModel::NoisePort,
        };
        let r = zwm_visibility(&setup, self::method(method, ode_steps), n_phi)?;
        write(out, r.visibility, "out")
    })
}
