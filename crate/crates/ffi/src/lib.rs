//! C ABI over `moebius-lab`.
//!
//! Tables and Mertens series are exposed as opaque handles owned by the
//! caller and released with the matching `*_free`. Every fallible call returns
//! an [`MlStatus`]; the message for the last failure on the calling thread is
//! available from [`ml_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use moebius_lab::cache;
use moebius_lab::matrix;
use moebius_lab::spectral::{self, Window};
use moebius_lab::stats::{self, BoundReport};
use moebius_lab::{MertensSeries, MoebiusError, MuTable};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Io = 3,
    CorruptCache = 4,
    NumericalFailure = 5,
    IdentityViolation = 6,
    Resource = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlWindow {
    Rectangular = 0,
    Hann = 1,
}

/// Opaque μ table.
pub struct MlMuTable {
    inner: MuTable,
}

/// Opaque Mertens series.
pub struct MlMertens {
    inner: MertensSeries,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MlBoundReport {
    pub n: u64,
    pub alpha: f64,
    pub k_alpha_2: f64,
    pub bound: f64,
    pub observed_m: i64,
    pub holds: bool,
    pub holds_two_sided: bool,
    pub probability: f64,
}

impl From<&BoundReport> for MlBoundReport {
    fn from(r: &BoundReport) -> Self {
        MlBoundReport {
            n: r.n as u64,
            alpha: r.alpha,
            k_alpha_2: r.k_alpha_2,
            bound: r.bound,
            observed_m: r.observed_m,
            holds: r.holds,
            holds_two_sided: r.holds_two_sided,
            probability: r.probability,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(e: &MoebiusError) -> MlStatus {
    match e {
        MoebiusError::InvalidArgument(_) => MlStatus::InvalidArgument,
        MoebiusError::Resource { .. } => MlStatus::Resource,
        MoebiusError::NumericalFailure { .. } => MlStatus::NumericalFailure,
        MoebiusError::IdentityViolation { .. } => MlStatus::IdentityViolation,
        MoebiusError::CorruptCache { .. } => MlStatus::CorruptCache,
        MoebiusError::Io { .. } => MlStatus::Io,
    }
}

fn fail(status: MlStatus, msg: impl Into<String>) -> MlStatus {
    set_last_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), MlStatus>) -> MlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(MlStatus::Panic, "panic inside moebius-lab"),
    }
}

trait IntoStatus<T> {
    fn status(self) -> Result<T, MlStatus>;
}

impl<T> IntoStatus<T> for moebius_lab::Result<T> {
    fn status(self) -> Result<T, MlStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), MlStatus> {
    if p.is_null() {
        Err(fail(MlStatus::NullPointer, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ml_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn ml_status_name(status: MlStatus) -> *const c_char {
    let s: &'static CStr = match status {
        MlStatus::Ok => c"ok",
        MlStatus::InvalidArgument => c"invalid argument",
        MlStatus::NullPointer => c"null pointer",
        MlStatus::Io => c"i/o error",
        MlStatus::CorruptCache => c"corrupt cache",
        MlStatus::NumericalFailure => c"numerical failure",
        MlStatus::IdentityViolation => c"identity violation",
        MlStatus::Resource => c"resource exhausted",
        MlStatus::Panic => c"panic",
    };
    s.as_ptr()
}

unsafe fn put_table(out: *mut *mut MlMuTable, table: MuTable) {
    *out = Box::into_raw(Box::new(MlMuTable { inner: table }));
}

/// Builds μ(1..=n_max) by the divisor recursion.
///
/// # Safety
/// `out` must be valid for writes. On success `*out` owns a table to be
/// released with [`ml_mu_free`].
#[no_mangle]
pub unsafe extern "C" fn ml_mu_build_recursive(n_max: usize, out: *mut *mut MlMuTable) -> MlStatus {
    guard(|| {
        non_null(out, "out")?;
        let table = moebius_lab::build_mu_recursive(n_max).status()?;
        put_table(out, table);
        Ok(())
    })
}

/// Builds μ(1..=n_max) with the factorization sieve.
///
/// # Safety
/// As [`ml_mu_build_recursive`].
#[no_mangle]
pub unsafe extern "C" fn ml_mu_build_sieve(n_max: usize, out: *mut *mut MlMuTable) -> MlStatus {
    guard(|| {
        non_null(out, "out")?;
        let (table, _) = moebius_lab::build_mu_sieve(n_max).status()?;
        put_table(out, table);
        Ok(())
    })
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, MlStatus> {
    non_null(path, "path")?;
    CStr::from_ptr(path)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(MlStatus::InvalidArgument, "path is not UTF-8"))
}

/// Reads a MUT1 cache file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_load(path: *const c_char, out: *mut *mut MlMuTable) -> MlStatus {
    guard(|| {
        non_null(out, "out")?;
        let table = cache::read_table(path_arg(path)?).status()?;
        put_table(out, table);
        Ok(())
    })
}

/// Writes a MUT1 cache file.
///
/// # Safety
/// `table` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_save(table: *const MlMuTable, path: *const c_char) -> MlStatus {
    guard(|| {
        non_null(table, "table")?;
        cache::write_table(path_arg(path)?, &(*table).inner).status()
    })
}

/// Number of entries; 0 for NULL.
///
/// # Safety
/// `table` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_len(table: *const MlMuTable) -> usize {
    table.as_ref().map_or(0, |t| t.inner.n_max())
}

/// μ(n) for 1 ≤ n ≤ len.
///
/// # Safety
/// `table` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_get(table: *const MlMuTable, n: usize, out: *mut i8) -> MlStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(out, "out")?;
        let t = &(*table).inner;
        match t.get(n) {
            Some(v) => {
                *out = v;
                Ok(())
            }
            None => Err(fail(
                MlStatus::InvalidArgument,
                format!("n = {n} outside 1..={}", t.n_max()),
            )),
        }
    })
}

/// Copies μ(1..=min(len, capacity)) into `buf`; `*written` receives the count.
///
/// # Safety
/// `buf` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_copy(
    table: *const MlMuTable,
    buf: *mut i8,
    capacity: usize,
    written: *mut usize,
) -> MlStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(buf, "buf")?;
        non_null(written, "written")?;
        let values = (*table).inner.values();
        let count = values.len().min(capacity);
        ptr::copy_nonoverlapping(values.as_ptr(), buf, count);
        *written = count;
        Ok(())
    })
}

/// 64-bit FNV-1a of the value bytes.
///
/// # Safety
/// `table` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_checksum(table: *const MlMuTable, out: *mut u64) -> MlStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(out, "out")?;
        *out = cache::checksum((*table).inner.values());
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_free(table: *mut MlMuTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// μ(n) as the sum of primitive n-th roots of unity (n ≤ 10000).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_mu_root_of_unity(n: u64, out: *mut i8) -> MlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = moebius_lab::mu_root_of_unity(n).status()?;
        Ok(())
    })
}

/// Prefix sums of a table.
///
/// # Safety
/// `table` must come from this library and `out` be valid for writes. On
/// success `*out` must be released with [`ml_mertens_free`].
#[no_mangle]
pub unsafe extern "C" fn ml_mertens_new(
    table: *const MlMuTable,
    out: *mut *mut MlMertens,
) -> MlStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(out, "out")?;
        let series = moebius_lab::mertens_prefix((*table).inner.values()).status()?;
        *out = Box::into_raw(Box::new(MlMertens { inner: series }));
        Ok(())
    })
}

/// M(n) for 1 ≤ n ≤ len.
///
/// # Safety
/// `series` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_mertens_get(
    series: *const MlMertens,
    n: usize,
    out: *mut i64,
) -> MlStatus {
    guard(|| {
        non_null(series, "series")?;
        non_null(out, "out")?;
        let s = &(*series).inner;
        match s.get(n) {
            Some(m) => {
                *out = m;
                Ok(())
            }
            None => Err(fail(
                MlStatus::InvalidArgument,
                format!("n = {n} outside 1..={}", s.n_max()),
            )),
        }
    })
}

/// # Safety
/// `series` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_mertens_free(series: *mut MlMertens) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// det(R_n) for the n×n Redheffer matrix, 1 ≤ n ≤ 512.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_redheffer_determinant(n: usize, out: *mut i64) -> MlStatus {
    guard(|| {
        non_null(out, "out")?;
        let det = matrix::redheffer_determinant(n).status()?;
        *out = i64::try_from(det)
            .map_err(|_| fail(MlStatus::NumericalFailure, "determinant exceeds 64 bits"))?;
        Ok(())
    })
}

/// U·V = V·U = I for the n×n divisibility matrix and its Möbius inverse.
///
/// # Safety
/// `table` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_verify_inverse(
    table: *const MlMuTable,
    n: usize,
    out: *mut bool,
) -> MlStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(out, "out")?;
        *out = matrix::verify_inverse(n, (*table).inner.values()).status()?;
        Ok(())
    })
}

macro_rules! scalar_fn {
    ($(#[$doc:meta])* $name:ident($($arg:ident: $ty:ty),*) => $body:expr) => {
        $(#[$doc])*
        ///
        /// # Safety
        /// `out` must be valid for writes.
        #[no_mangle]
        pub unsafe extern "C" fn $name($($arg: $ty,)* out: *mut f64) -> MlStatus {
            guard(|| {
                non_null(out, "out")?;
                *out = $body.status()?;
                Ok(())
            })
        }
    };
}

scalar_fn!(
    /// Standard normal CDF.
    ml_normal_cdf(x: f64) => stats::normal_cdf(x)
);
scalar_fn!(
    /// Standard normal quantile for 0 < p < 1.
    ml_normal_quantile(p: f64) => stats::normal_quantile(p)
);
scalar_fn!(
    /// Asymptotic P{M(n) > C·√n}.
    ml_mertens_type_prob(c: f64) => stats::mertens_type_prob(c)
);
scalar_fn!(
    /// P{Σ|μ(k)| > C·n} under the normal approximation.
    ml_abs_sum_exceedance(c: f64, n: u64) => stats::abs_sum_exceedance(c, n)
);

/// √(6/π²)·K_{α/2}·√n bound evaluated against M(n).
///
/// # Safety
/// `series` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_clt_bound(
    series: *const MlMertens,
    n: usize,
    alpha: f64,
    out: *mut MlBoundReport,
) -> MlStatus {
    guard(|| {
        non_null(series, "series")?;
        non_null(out, "out")?;
        let report = stats::clt_bound(n, alpha, &(*series).inner).status()?;
        *out = MlBoundReport::from(&report);
        Ok(())
    })
}

/// Welch PSD of the table followed by its max/mean ratio over non-DC bins.
///
/// # Safety
/// `table` must come from this library; `out_ratio` and `out_segments` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_psd_peak_ratio(
    table: *const MlMuTable,
    segment_len: usize,
    overlap: f64,
    window: MlWindow,
    out_ratio: *mut f64,
    out_segments: *mut usize,
) -> MlStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(out_ratio, "out_ratio")?;
        non_null(out_segments, "out_segments")?;
        let window = match window {
            MlWindow::Rectangular => Window::Rectangular,
            MlWindow::Hann => Window::Hann,
        };
        let psd =
            spectral::welch_psd((*table).inner.values(), segment_len, overlap, window).status()?;
        *out_ratio = spectral::peak_ratio(&psd).status()?;
        *out_segments = psd.n_segments;
        Ok(())
    })
}
