//! C ABI for `qtrace`.
//!
//! Every function returns a [`QtStatus`] and writes its result through an out
//! pointer. On failure the message is available from [`qt_last_error_message`]
//! on the same thread. Pairs are opaque handles created by [`qt_pair_new`] or
//! [`qt_witness_new`] and released with [`qt_pair_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{self, AssertUnwindSafe};
use std::slice;

use qtrace::divergences;
use qtrace::linalg::{self, HermitianOperator, OperatorPair};
use qtrace::scalar::{self, RenyiOrder};
use qtrace::verify::verification_quadrature;
use qtrace::witnesses::{make_witness, WitnessSpec};
use qtrace::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtStatus {
    Ok = 0,
    NullPointer = 1,
    /// Out-of-range order, dimension or parameter.
    InvalidArgument = 2,
    /// Matrix not Hermitian, not finite, or not (strictly) positive as required.
    InvalidMatrix = 3,
    /// Eigensolver or quadrature failure.
    Numerical = 4,
    Panic = 5,
}

/// Constants attached to an order `s`; see `qt_g_constant`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QtConstants {
    pub s: f64,
    pub g_s: f64,
    pub c_s: f64,
    pub c_s_over_s: f64,
    /// `+inf` when `r*` overflows (s below about 1.4e-3).
    pub r_star: f64,
    pub log1p_r_star: f64,
    pub ratio: f64,
    pub residual: f64,
}

/// Opaque pair `(rho, sigma)` with `sigma` strictly positive and `rho` positive semidefinite.
pub struct QtPair {
    inner: OperatorPair,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(QtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_)
            | Error::InvalidInput(_)
            | Error::DimensionTooLarge(_)
            | Error::DimensionMismatch(..)
            | Error::NotSquare { .. }
            | Error::MismatchedInput { .. } => QtStatus::InvalidArgument,
            Error::NonFinite
            | Error::NotHermitian(_)
            | Error::NotStrictlyPositive { .. }
            | Error::NotPositive(_)
            | Error::NotNormalized(_) => QtStatus::InvalidMatrix,
            _ => QtStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QtStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QtStatus {
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            QtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| p.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_last_error(&format!("panic: {msg}"));
            QtStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn pair_ref<'a>(pair: *const QtPair) -> Result<&'a OperatorPair, Failure> {
    pair.as_ref().map(|p| &p.inner).ok_or_else(|| null("pair"))
}

fn order(s: f64) -> Result<RenyiOrder, Failure> {
    Ok(RenyiOrder::new(s)?)
}

unsafe fn scalar_out(out: *mut f64, f: impl FnOnce() -> Result<f64, Failure>) -> QtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let v = f()?;
        write(out, v)
    })
}

unsafe fn pair_out(
    pair: *const QtPair,
    out: *mut f64,
    f: impl FnOnce(&OperatorPair) -> Result<f64, Error>,
) -> QtStatus {
    scalar_out(out, || Ok(f(pair_ref(pair)?)?))
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `qt_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be NULL or point to writable memory for one `QtConstants`.
#[no_mangle]
pub unsafe extern "C" fn qt_g_constant(s: f64, out: *mut QtConstants) -> QtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let c = scalar::g_constant(order(s)?);
        write(
            out,
            QtConstants {
                s: c.s,
                g_s: c.g_s,
                c_s: c.c_s,
                c_s_over_s: c.c_s_over_s,
                r_star: c.r_star,
                log1p_r_star: c.log1p_r_star,
                ratio: c.ratio,
                residual: c.residual,
            },
        )
    })
}

/// `c_s = s^s (1-s)^{1-s}` for `s` in `[0, 1]`.
///
/// # Safety
/// `out` must be NULL or point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qt_c_constant(s: f64, out: *mut f64) -> QtStatus {
    scalar_out(out, || Ok(scalar::c_constant(s)?))
}

/// # Safety
/// `out` must be NULL or point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qt_lambert_w_minus1(x: f64, out: *mut f64) -> QtStatus {
    scalar_out(out, || Ok(scalar::lambert_w_minus1(x)?))
}

/// Maximizer `r*` of `ln(1+r)/r^s`.
///
/// # Safety
/// `out` must be NULL or point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qt_critical_r(s: f64, out: *mut f64) -> QtStatus {
    scalar_out(out, || Ok(scalar::critical_r(order(s)?)))
}

unsafe fn operator(dim: usize, re: *const f64, im: *const f64, name: &str) -> Result<HermitianOperator, Failure> {
    if re.is_null() {
        return Err(null(name));
    }
    if dim == 0 || dim > linalg::MAX_DIM {
        return Err(Error::DimensionTooLarge(dim).into());
    }
    let n = dim * dim;
    let re = slice::from_raw_parts(re, n);
    let im = (!im.is_null()).then(|| slice::from_raw_parts(im, n));
    Ok(HermitianOperator::from_parts(dim, re, im)?)
}

/// Builds a pair from row-major `dim x dim` matrices. Imaginary parts may be NULL.
///
/// # Safety
/// Non-NULL matrix pointers must reference `dim * dim` readable doubles, and
/// `out` must be NULL or point to a writable `QtPair *`.
#[no_mangle]
pub unsafe extern "C" fn qt_pair_new(
    dim: usize,
    rho_re: *const f64,
    rho_im: *const f64,
    sigma_re: *const f64,
    sigma_im: *const f64,
    out: *mut *mut QtPair,
) -> QtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        if dim == 0 {
            return Err(Failure(QtStatus::InvalidArgument, "dim must be >= 1".into()));
        }
        let rho = operator(dim, rho_re, rho_im, "rho_re")?;
        let sigma = operator(dim, sigma_re, sigma_im, "sigma_re")?;
        let inner = OperatorPair::with_psd_rho(rho, sigma)?;
        write(out, Box::into_raw(Box::new(QtPair { inner })))
    })
}

/// The witness pair `(Π_k/k, (λ/d) I_d)`.
///
/// # Safety
/// `out` must be NULL or point to a writable `QtPair *`.
#[no_mangle]
pub unsafe extern "C" fn qt_witness_new(d: usize, k: usize, lambda: f64, out: *mut *mut QtPair) -> QtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let inner = make_witness(&WitnessSpec::new(d, k, lambda)?)?;
        write(out, Box::into_raw(Box::new(QtPair { inner })))
    })
}

/// Releases a pair. NULL is ignored.
///
/// # Safety
/// `pair` must be NULL or a handle from `qt_pair_new`/`qt_witness_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_pair_free(pair: *mut QtPair) {
    if !pair.is_null() {
        let _ = panic::catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(pair))));
    }
}

/// Dimension of the pair, or 0 for NULL.
///
/// # Safety
/// `pair` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_pair_dim(pair: *const QtPair) -> usize {
    pair.as_ref().map_or(0, |p| p.inner.dim())
}

/// `Q = Tr rho (log(rho + sigma) - log sigma)` by spectral calculus.
///
/// # Safety
/// `pair` must be NULL or a live handle; `out` NULL or a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qt_q_direct(pair: *const QtPair, out: *mut f64) -> QtStatus {
    pair_out(pair, out, divergences::q_direct)
}

/// `Q` from the layer-cake integral of the tail function.
///
/// # Safety
/// As for `qt_q_direct`.
#[no_mangle]
pub unsafe extern "C" fn qt_q_layercake(pair: *const QtPair, out: *mut f64) -> QtStatus {
    pair_out(pair, out, |p| divergences::q_layercake(p, &verification_quadrature()))
}

/// `Q` by integrating the BKM quadratic form along `sigma + t rho`.
///
/// # Safety
/// As for `qt_q_direct`.
#[no_mangle]
pub unsafe extern "C" fn qt_q_bkm_route(pair: *const QtPair, out: *mut f64) -> QtStatus {
    pair_out(pair, out, divergences::q_bkm_route)
}

/// # Safety
/// As for `qt_q_direct`.
#[no_mangle]
pub unsafe extern "C" fn qt_q2_bkm(pair: *const QtPair, out: *mut f64) -> QtStatus {
    pair_out(pair, out, divergences::q2_bkm)
}

/// `Q_2(rho || rho + sigma)` via the layer-cake route.
///
/// # Safety
/// As for `qt_q_direct`.
#[no_mangle]
pub unsafe extern "C" fn qt_q2_collision(pair: *const QtPair, out: *mut f64) -> QtStatus {
    pair_out(pair, out, |p| divergences::q2_collision(p, &verification_quadrature()))
}

/// Layer-cake `Q_{1+s}`.
///
/// # Safety
/// As for `qt_q_direct`.
#[no_mangle]
pub unsafe extern "C" fn qt_q_alpha_layercake(pair: *const QtPair, s: f64, out: *mut f64) -> QtStatus {
    scalar_out(out, || {
        let p = pair_ref(pair)?;
        Ok(divergences::q_alpha_layercake(p, order(s)?, &verification_quadrature())?)
    })
}

/// Sandwiched `Q̃_{1+s}`.
///
/// # Safety
/// As for `qt_q_direct`.
#[no_mangle]
pub unsafe extern "C" fn qt_q_alpha_sandwiched(pair: *const QtPair, s: f64, out: *mut f64) -> QtStatus {
    scalar_out(out, || {
        let p = pair_ref(pair)?;
        Ok(divergences::q_alpha_sandwiched(p, order(s)?)?)
    })
}

/// `R = ||sigma^{-1/2} rho sigma^{-1/2}||`.
///
/// # Safety
/// As for `qt_q_direct`.
#[no_mangle]
pub unsafe extern "C" fn qt_relative_sup(pair: *const QtPair, out: *mut f64) -> QtStatus {
    pair_out(pair, out, linalg::relative_sup)
}
