//! C ABI over `dvr_recon`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_solve`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`DvrStatus`]; the message of the most recent failure on the
//! calling thread is available from [`dvr_last_error_message`].
//!
//! Pointer arguments must be null or valid for the access described on each
//! function; handles must be live and freed exactly once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;

use dvr_recon::config::basis_for_spacing;
use dvr_recon::modes::ModeSet;
use dvr_recon::sensing::{sample_field, ArraySpec};
use dvr_recon::{CwField, DvrBasis, EnvironmentModel, Error, Reconstruction};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvrStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Resolution = 3,
    Dimension = 4,
    Degenerate = 5,
    Config = 6,
    Window = 7,
    Consistency = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvrComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for DvrComplex {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<DvrComplex> for Complex64 {
    fn from(c: DvrComplex) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// Waveguide parameters in m, m/s, g/cm³ and dB·s²/m.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvrEnvironmentParams {
    pub c0: f64,
    pub delta_c: f64,
    pub z_c: f64,
    pub delta_z: f64,
    pub c_b: f64,
    pub water_depth: f64,
    pub basement_depth: f64,
    pub rho_wat: f64,
    pub rho_sed: f64,
    pub att_coeff: f64,
}

impl From<&EnvironmentModel> for DvrEnvironmentParams {
    fn from(e: &EnvironmentModel) -> Self {
        Self {
            c0: e.c0,
            delta_c: e.delta_c,
            z_c: e.z_c,
            delta_z: e.delta_z,
            c_b: e.c_b,
            water_depth: e.water_depth,
            basement_depth: e.basement_depth,
            rho_wat: e.rho_wat,
            rho_sed: e.rho_sed,
            att_coeff: e.att_coeff,
        }
    }
}

impl From<&DvrEnvironmentParams> for EnvironmentModel {
    fn from(p: &DvrEnvironmentParams) -> Self {
        Self {
            c0: p.c0,
            delta_c: p.delta_c,
            z_c: p.z_c,
            delta_z: p.delta_z,
            c_b: p.c_b,
            water_depth: p.water_depth,
            basement_depth: p.basement_depth,
            rho_wat: p.rho_wat,
            rho_sed: p.rho_sed,
            att_coeff: p.att_coeff,
        }
    }
}

pub struct DvrEnvironment(EnvironmentModel);
pub struct DvrBasisHandle(DvrBasis);
pub struct DvrModes(ModeSet);
pub struct DvrField(CwField);
pub struct DvrReconstruction(Reconstruction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DvrStatus {
    match e {
        Error::Domain(_) => DvrStatus::Domain,
        Error::Resolution(_) => DvrStatus::Resolution,
        Error::Dimension(_) => DvrStatus::Dimension,
        Error::Degenerate(_) => DvrStatus::Degenerate,
        Error::Config(_) => DvrStatus::Config,
        Error::Window(_) => DvrStatus::Window,
        Error::Consistency(_) => DvrStatus::Consistency,
        Error::Io(_) => DvrStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, recording failures and catching panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DvrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DvrStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            DvrStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            DvrStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_slice<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure::Null("buffer"));
    }
    if len != src.len() {
        return Err(Failure::Lib(Error::Dimension(format!(
            "buffer holds {len} values, {} required",
            src.len()
        ))));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 when there is no error.
///
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dvr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_environment_default_params(out: *mut DvrEnvironmentParams) -> DvrStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = DvrEnvironmentParams::from(&EnvironmentModel::default());
        Ok(())
    })
}

/// `params` must point to a valid struct and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_environment_new(
    params: *const DvrEnvironmentParams,
    out: *mut *mut DvrEnvironment,
) -> DvrStatus {
    guard(|| {
        let env = EnvironmentModel::from(get(params, "params")?);
        env.validate()?;
        put(out, DvrEnvironment(env))
    })
}

/// `env` must be null or a handle from `dvr_environment_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn dvr_environment_free(env: *mut DvrEnvironment) {
    free(env)
}

/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_basis_new(j_max: usize, l_eff: f64, out: *mut *mut DvrBasisHandle) -> DvrStatus {
    guard(|| put(out, DvrBasisHandle(dvr_recon::build_dvr(j_max, l_eff)?)))
}

/// Basis with hydrophone spacing `dz` on a fictitious depth reaching the
/// basement of `env`.
///
/// `env` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_basis_for_spacing(
    env: *const DvrEnvironment,
    dz: f64,
    out: *mut *mut DvrBasisHandle,
) -> DvrStatus {
    guard(|| put(out, DvrBasisHandle(basis_for_spacing(dz, &get(env, "env")?.0)?)))
}

/// `basis` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn dvr_basis_free(basis: *mut DvrBasisHandle) {
    free(basis)
}

/// `basis` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_basis_size(basis: *const DvrBasisHandle, j_max: *mut usize, l_eff: *mut f64) -> DvrStatus {
    guard(|| {
        let b = &get(basis, "basis")?.0;
        if j_max.is_null() || l_eff.is_null() {
            return Err(Failure::Null("out"));
        }
        *j_max = b.j_max();
        *l_eff = b.l_eff();
        Ok(())
    })
}

/// Writes all `j_max` DVR depths.
///
/// `basis` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dvr_basis_depths(basis: *const DvrBasisHandle, buf: *mut f64, len: usize) -> DvrStatus {
    guard(|| write_slice(get(basis, "basis")?.0.depths(), buf, len))
}

/// Number of DVR depths in `[0, h]`, i.e. hydrophones in the water column.
///
/// `basis` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_basis_hydrophones(basis: *const DvrBasisHandle, h: f64, out: *mut usize) -> DvrStatus {
    guard(|| {
        let array = ArraySpec::for_basis(&get(basis, "basis")?.0, h)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = array.count();
        Ok(())
    })
}

/// `env` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_modes_solve(env: *const DvrEnvironment, f_hz: f64, out: *mut *mut DvrModes) -> DvrStatus {
    guard(|| {
        let env = &get(env, "env")?.0;
        let grid = dvr_recon::DepthGrid::for_environment(env, f_hz)?;
        put(out, DvrModes(dvr_recon::solve_modes(env, f_hz, &grid)?))
    })
}

/// `modes` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn dvr_modes_free(modes: *mut DvrModes) {
    free(modes)
}

/// `modes` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_modes_count(modes: *const DvrModes, out: *mut usize) -> DvrStatus {
    guard(|| {
        let m = &get(modes, "modes")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = m.mode_count();
        Ok(())
    })
}

/// Horizontal wavenumbers in rad/m, descending.
///
/// `modes` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dvr_modes_wavenumbers(modes: *const DvrModes, buf: *mut f64, len: usize) -> DvrStatus {
    guard(|| write_slice(get(modes, "modes")?.0.wavenumbers(), buf, len))
}

/// Modal attenuations in Np/m.
///
/// `modes` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dvr_modes_attenuations(modes: *const DvrModes, buf: *mut f64, len: usize) -> DvrStatus {
    guard(|| write_slice(get(modes, "modes")?.0.attenuations(), buf, len))
}

/// CW field of a point source at depth `z_s` and range `r` on the mode grid.
///
/// `env` and `modes` must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_cw_field(
    env: *const DvrEnvironment,
    modes: *const DvrModes,
    z_s: f64,
    r: f64,
    out: *mut *mut DvrField,
) -> DvrStatus {
    guard(|| {
        let env = &get(env, "env")?.0;
        let modes = &get(modes, "modes")?.0;
        put(out, DvrField(dvr_recon::cw_field(env, modes, z_s, r, modes.grid())?))
    })
}

/// `field` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn dvr_field_free(field: *mut DvrField) {
    free(field)
}

/// `field` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_field_value(field: *const DvrField, z: f64, out: *mut DvrComplex) -> DvrStatus {
    guard(|| {
        let v = get(field, "field")?.0.value_at(z)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = v.into();
        Ok(())
    })
}

/// Samples `field` at the basis depths in `[0, h]`; `len` must equal the
/// hydrophone count.
///
/// Handles must be live and `buf` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn dvr_sample_field(
    field: *const DvrField,
    basis: *const DvrBasisHandle,
    h: f64,
    buf: *mut DvrComplex,
    len: usize,
) -> DvrStatus {
    guard(|| {
        let array = ArraySpec::for_basis(&get(basis, "basis")?.0, h)?;
        let meas = sample_field(&get(field, "field")?.0, &array)?;
        let values: Vec<DvrComplex> = meas.values.iter().map(|&v| v.into()).collect();
        write_slice(&values, buf, len)
    })
}

/// Reconstruction from the first `len` hydrophones, shallowest first.
///
/// `basis` must be a live handle, `samples` valid for `len` values and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_reconstruct(
    basis: *const DvrBasisHandle,
    samples: *const DvrComplex,
    len: usize,
    out: *mut *mut DvrReconstruction,
) -> DvrStatus {
    guard(|| {
        let basis = &get(basis, "basis")?.0;
        if samples.is_null() {
            return Err(Failure::Null("samples"));
        }
        let s: Vec<Complex64> = std::slice::from_raw_parts(samples, len).iter().map(|&c| c.into()).collect();
        put(out, DvrReconstruction(dvr_recon::reconstruct(basis, &s)?))
    })
}

/// `rec` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn dvr_reconstruction_free(rec: *mut DvrReconstruction) {
    free(rec)
}

/// `rec` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_reconstruction_eval(
    rec: *const DvrReconstruction,
    z: f64,
    out: *mut DvrComplex,
) -> DvrStatus {
    guard(|| {
        let v = get(rec, "reconstruction")?.0.eval(z);
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = v.into();
        Ok(())
    })
}

/// Fidelity of a reconstruction against the exact field over `[0, h]`.
///
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dvr_fidelity_cw(
    field: *const DvrField,
    rec: *const DvrReconstruction,
    h: f64,
    out: *mut f64,
) -> DvrStatus {
    guard(|| {
        let f = dvr_recon::fidelity_cw(&get(field, "field")?.0, &get(rec, "reconstruction")?.0, h)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = f.value;
        Ok(())
    })
}
