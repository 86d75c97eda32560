//! C ABI over the deep-kernel asymptotics library.
//!
//! Conventions: every constructor writes an opaque handle through an out
//! pointer and returns a status code; handles are released with the
//! matching `_free` function; buffers are caller-allocated with sizes
//! documented per function. On any non-OK status a thread-local message is
//! set, retrievable with `dka_last_error_message`.
//!
//! Pointer contract, uniform across the surface: handles must come from
//! this library and not be used after `_free`; out pointers must be valid
//! for writes; buffer pointers must cover the documented element counts.
//! Null handle/out/buffer pointers are rejected with `NullPointer` rather
//! than dereferenced.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use dka_core::error::Error;
use dka_core::iteration::{classify_regime, iterate_kernel, Regime, SymmetrySet};
use dka_core::kernels::{BuiltinKernel, Kernel};
use dka_core::rates::{matrix_b1, matrix_b2, rate_eval, ProfileEval, RateModel};
use dka_core::simulate::{centered_covariance, sample, Centering};
use dka_core::sphere::PointConfig;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkaStatus {
    Ok = 0,
    /// A parameter lies outside its admissible domain.
    InvalidArgument = 1,
    /// Numeric evaluation failed.
    NumericError = 2,
    /// The operation is undefined in the kernel's regime.
    RegimeError = 3,
    /// A required pointer was null.
    NullPointer = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

/// Regime tags mirrored as plain integers.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkaRegime {
    LowDisorder = 0,
    Sparse = 1,
    HighDisorder = 2,
}

/// Centering selector for sampling.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkaCentering {
    NorthPole = 0,
    SphericalAverage = 1,
}

/// Flattened regime report.
///
/// `has_fit`, `has_h`, `has_t_star` gate the validity of the corresponding
/// value fields; `symmetry_is_pair` is 1 when the unit set is {-1, 1}.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DkaRegimeInfo {
    pub kprime1: f64,
    pub regime: DkaRegime,
    pub symmetry_is_pair: i32,
    pub has_fit: i32,
    pub c: f64,
    pub rho: f64,
    pub fit_r_squared: f64,
    pub has_h: i32,
    pub h: f64,
    pub has_t_star: i32,
    pub t_star: f64,
}

/// Opaque kernel handle.
pub struct DkaKernel {
    inner: Kernel,
}

/// Opaque point-configuration handle.
pub struct DkaConfig {
    inner: PointConfig,
}

/// Opaque rate-model handle (limit covariance matrix + decomposition).
pub struct DkaRateModel {
    inner: RateModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DkaStatus {
    match err {
        Error::InvalidParameter(_) | Error::Config(_) | Error::Domain(_) => {
            DkaStatus::InvalidArgument
        }
        Error::RegimeMismatch(_) => DkaStatus::RegimeError,
        _ => DkaStatus::NumericError,
    }
}

fn fail(err: Error) -> DkaStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

/// Run `f` with panics converted into a status code.
fn guarded(f: impl FnOnce() -> DkaStatus) -> DkaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DkaStatus::Panic
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!("null pointer: ", stringify!($ptr)));
            return DkaStatus::NullPointer;
        }
    };
}

/// Copy the last error message into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length in bytes, excluding the NUL.
#[no_mangle]
pub unsafe extern "C" fn dka_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version string length copy, mirroring `dka_last_error_message`.
#[no_mangle]
pub unsafe extern "C" fn dka_version(buf: *mut c_char, len: usize) -> usize {
    let version = env!("CARGO_PKG_VERSION").as_bytes();
    if !buf.is_null() && len > 0 {
        let n = version.len().min(len - 1);
        std::ptr::copy_nonoverlapping(version.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    version.len()
}

fn kernel_out(kernel: Result<Kernel, Error>, out: *mut *mut DkaKernel) -> DkaStatus {
    match kernel {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(DkaKernel { inner })) };
            DkaStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Arc-cosine (ReLU) kernel.
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_relu(out: *mut *mut DkaKernel) -> DkaStatus {
    nonnull!(out);
    guarded(|| kernel_out(Kernel::builtin(BuiltinKernel::Relu), out))
}

/// Exponential-family kernel sqrt(gamma / (gamma + 1 - t^2)).
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_exponential(
    gamma: f64,
    out: *mut *mut DkaKernel,
) -> DkaStatus {
    nonnull!(out);
    guarded(|| kernel_out(Kernel::builtin(BuiltinKernel::Exponential { gamma }), out))
}

/// Identity kernel.
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_linear(out: *mut *mut DkaKernel) -> DkaStatus {
    nonnull!(out);
    guarded(|| kernel_out(Kernel::builtin(BuiltinKernel::Linear), out))
}

/// Kernel from nonnegative power-series coefficients (renormalized).
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_hermite(
    coeffs: *const f64,
    len: usize,
    out: *mut *mut DkaKernel,
) -> DkaStatus {
    nonnull!(coeffs);
    nonnull!(out);
    let slice = std::slice::from_raw_parts(coeffs, len);
    guarded(|| kernel_out(Kernel::from_hermite(slice), out))
}

/// Release a kernel handle.
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_free(kernel: *mut DkaKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Evaluate kappa(t).
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_eval(
    kernel: *const DkaKernel,
    t: f64,
    out: *mut f64,
) -> DkaStatus {
    nonnull!(kernel);
    nonnull!(out);
    guarded(|| {
        *out = (*kernel).inner.eval(t);
        DkaStatus::Ok
    })
}

/// Evaluate the depth-L composition kappa_L(t).
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_iterate(
    kernel: *const DkaKernel,
    t: f64,
    depth: u64,
    out: *mut f64,
) -> DkaStatus {
    nonnull!(kernel);
    nonnull!(out);
    guarded(|| {
        *out = iterate_kernel(&(*kernel).inner, t, depth);
        DkaStatus::Ok
    })
}

/// kappa'(1).
#[no_mangle]
pub unsafe extern "C" fn dka_kernel_derivative_at_one(
    kernel: *const DkaKernel,
    out: *mut f64,
) -> DkaStatus {
    nonnull!(kernel);
    nonnull!(out);
    guarded(|| {
        *out = (*kernel).inner.derivative_at_one();
        DkaStatus::Ok
    })
}

/// Classify the kernel's regime and flatten the report.
#[no_mangle]
pub unsafe extern "C" fn dka_classify(
    kernel: *const DkaKernel,
    out: *mut DkaRegimeInfo,
) -> DkaStatus {
    nonnull!(kernel);
    nonnull!(out);
    guarded(|| match classify_regime(&(*kernel).inner) {
        Ok(report) => {
            let fit = report.fit.as_ref();
            *out = DkaRegimeInfo {
                kprime1: report.kprime1,
                regime: match report.regime {
                    Regime::LowDisorder => DkaRegime::LowDisorder,
                    Regime::Sparse => DkaRegime::Sparse,
                    Regime::HighDisorder => DkaRegime::HighDisorder,
                },
                symmetry_is_pair: matches!(
                    report.symmetry_set,
                    Some(SymmetrySet::PlusMinusOne)
                ) as i32,
                has_fit: fit.is_some() as i32,
                c: fit.map_or(f64::NAN, |f| f.c),
                rho: fit.map_or(f64::NAN, |f| f.rho),
                fit_r_squared: fit.map_or(f64::NAN, |f| f.diagnostics.r_squared),
                has_h: report.h.is_some() as i32,
                h: report.h.unwrap_or(f64::NAN),
                has_t_star: report.t_star.is_some() as i32,
                t_star: report.t_star.unwrap_or(f64::NAN),
            };
            DkaStatus::Ok
        }
        Err(e) => fail(e),
    })
}

fn config_out(config: Result<PointConfig, Error>, out: *mut *mut DkaConfig) -> DkaStatus {
    match config {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(DkaConfig { inner })) };
            DkaStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Point configuration from row-major coordinates (m rows of dim+1 each);
/// rows are normalized onto the sphere.
#[no_mangle]
pub unsafe extern "C" fn dka_config_new(
    dim: usize,
    coords: *const f64,
    m: usize,
    out: *mut *mut DkaConfig,
) -> DkaStatus {
    nonnull!(coords);
    nonnull!(out);
    guarded(|| {
        let width = dim + 1;
        let flat = std::slice::from_raw_parts(coords, m * width);
        let rows: Vec<Vec<f64>> = flat.chunks_exact(width).map(|c| c.to_vec()).collect();
        config_out(PointConfig::new(dim, &rows), out)
    })
}

/// m i.i.d. uniform points on S^dim, deterministic in the seed.
#[no_mangle]
pub unsafe extern "C" fn dka_config_uniform(
    dim: usize,
    m: usize,
    seed: u64,
    out: *mut *mut DkaConfig,
) -> DkaStatus {
    nonnull!(out);
    guarded(|| config_out(PointConfig::uniform(dim, m, seed), out))
}

/// Release a configuration handle.
#[no_mangle]
pub unsafe extern "C" fn dka_config_free(config: *mut DkaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of points.
#[no_mangle]
pub unsafe extern "C" fn dka_config_len(config: *const DkaConfig, out: *mut usize) -> DkaStatus {
    nonnull!(config);
    nonnull!(out);
    *out = (*config).inner.len();
    DkaStatus::Ok
}

/// Copy the m x m Gram matrix (row-major) into `out`.
#[no_mangle]
pub unsafe extern "C" fn dka_config_gram(config: *const DkaConfig, out: *mut f64) -> DkaStatus {
    nonnull!(config);
    nonnull!(out);
    let cfg = &(*config).inner;
    let m = cfg.len();
    let dst = std::slice::from_raw_parts_mut(out, m * m);
    for i in 0..m {
        for j in 0..m {
            dst[i * m + j] = cfg.gram(i, j);
        }
    }
    DkaStatus::Ok
}

fn build_profile(kernel: &Kernel) -> Result<ProfileEval, Error> {
    let report = classify_regime(kernel)?;
    ProfileEval::from_kernel(kernel, &report)
}

fn model_out(model: Result<RateModel, Error>, out: *mut *mut DkaRateModel) -> DkaStatus {
    match model {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(DkaRateModel { inner })) };
            DkaStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Limit covariance matrix of the North-Pole-centered sequence at the
/// configuration. Fails in the high-disorder regime.
#[no_mangle]
pub unsafe extern "C" fn dka_rate_model_b1(
    kernel: *const DkaKernel,
    config: *const DkaConfig,
    out: *mut *mut DkaRateModel,
) -> DkaStatus {
    nonnull!(kernel);
    nonnull!(config);
    nonnull!(out);
    guarded(|| {
        let result = build_profile(&(*kernel).inner)
            .and_then(|profile| matrix_b1(&profile, &(*config).inner));
        model_out(result, out)
    })
}

/// Limit covariance matrix of the spherical-average-centered sequence.
#[no_mangle]
pub unsafe extern "C" fn dka_rate_model_b2(
    kernel: *const DkaKernel,
    config: *const DkaConfig,
    out: *mut *mut DkaRateModel,
) -> DkaStatus {
    nonnull!(kernel);
    nonnull!(config);
    nonnull!(out);
    guarded(|| {
        let cfg = &(*config).inner;
        let result = build_profile(&(*kernel).inner)
            .and_then(|profile| matrix_b2(&profile, cfg, cfg.dim()));
        model_out(result, out)
    })
}

/// Release a rate-model handle.
#[no_mangle]
pub unsafe extern "C" fn dka_rate_model_free(model: *mut DkaRateModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Copy the m x m limit matrix (row-major) into `out`.
#[no_mangle]
pub unsafe extern "C" fn dka_rate_model_matrix(
    model: *const DkaRateModel,
    out: *mut f64,
) -> DkaStatus {
    nonnull!(model);
    nonnull!(out);
    let inner = &(*model).inner;
    let m = inner.dim();
    let dst = std::slice::from_raw_parts_mut(out, m * m);
    for i in 0..m {
        for j in 0..m {
            dst[i * m + j] = inner.matrix()[(i, j)];
        }
    }
    DkaStatus::Ok
}

/// Quadratic-form rate value at `y` (length m). `finite` is 0 when the
/// argument leaves the range of the matrix, in which case `value` is +inf.
#[no_mangle]
pub unsafe extern "C" fn dka_rate_eval(
    model: *const DkaRateModel,
    y: *const f64,
    len: usize,
    value: *mut f64,
    finite: *mut i32,
) -> DkaStatus {
    nonnull!(model);
    nonnull!(y);
    nonnull!(value);
    nonnull!(finite);
    let inner = &(*model).inner;
    if len != inner.dim() {
        set_error("argument length does not match the model dimension");
        return DkaStatus::InvalidArgument;
    }
    let slice = std::slice::from_raw_parts(y, len);
    guarded(|| {
        let rv = rate_eval(inner, slice);
        *value = rv.value;
        *finite = rv.in_range as i32;
        DkaStatus::Ok
    })
}

/// Draw n exact joint Gaussian samples of the centered field at depth
/// `depth` into `out` (row-major n x m). Deterministic in the seed.
#[no_mangle]
pub unsafe extern "C" fn dka_sample(
    kernel: *const DkaKernel,
    config: *const DkaConfig,
    depth: u64,
    centering: DkaCentering,
    n: usize,
    seed: u64,
    out: *mut f64,
) -> DkaStatus {
    nonnull!(kernel);
    nonnull!(config);
    nonnull!(out);
    guarded(|| {
        let k = &(*kernel).inner;
        let cfg = &(*config).inner;
        let centering = match centering {
            DkaCentering::NorthPole => Centering::NorthPole,
            DkaCentering::SphericalAverage => Centering::SphericalAverage,
        };
        let result =
            centered_covariance(k, cfg, depth, centering).and_then(|cc| sample(k, &cc, n, seed));
        match result {
            Ok(batch) => {
                let dst = std::slice::from_raw_parts_mut(out, n * cfg.len());
                dst.copy_from_slice(&batch.draws);
                DkaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
