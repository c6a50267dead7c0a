//! C ABI for the `t2ieval` metrics library.
//!
//! Every function returns a [`T2iStatus`]; on failure the message is kept
//! per thread and can be copied out with [`t2i_last_error_message`].
//! Statistics live behind the opaque [`T2iStats`] handle, released with
//! [`t2i_stats_free`]. Matrices are row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use t2ieval::io::{read_stats, write_stats};
use t2ieval::{EmbeddingMatrix, Error, GaussianStats, SimilarityMatrix};

/// Result code of every `t2i_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum T2iStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NumericalError = 4,
    IoError = 5,
    FormatError = 6,
    Panic = 7,
}

/// Gaussian statistics of a feature distribution.
pub struct T2iStats(GaussianStats);

/// Output of `t2i_compute_cmd`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct T2iCmdReport {
    pub dis_fr: f64,
    pub dis_fl: f64,
    pub dis_rl: f64,
    pub itdis: f64,
    pub cmd: f64,
    /// Set when the matching distance needed the ridge fallback.
    pub regularized_fr: bool,
    pub regularized_fl: bool,
    pub regularized_rl: bool,
}

/// Recall percentages at K = 1, 5, 10, in that order.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct T2iRecall {
    pub image_to_text: [f64; 3],
    pub text_to_image: [f64; 3],
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(T2iStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::FewerThanTwoSamples { .. }
            | Error::NonFiniteInput { .. }
            | Error::NonFiniteValue { .. }
            | Error::ZeroVector
            | Error::EmptyBatch
            | Error::EmptyInput
            | Error::InvalidParameter(_) => T2iStatus::InvalidArgument,
            Error::DimensionMismatch { .. } | Error::NonSquare { .. } | Error::ShapeMismatch(_) => {
                T2iStatus::ShapeMismatch
            }
            Error::NotSymmetric { .. }
            | Error::IndefiniteMatrix { .. }
            | Error::NumericalFailure(_) => T2iStatus::NumericalError,
            Error::MissingFile(_) | Error::Io { .. } => T2iStatus::IoError,
            Error::BadMagic { .. }
            | Error::UnsupportedVersion(_)
            | Error::UnsupportedDtype(_)
            | Error::TruncatedFile { .. }
            | Error::TrailingBytes(_)
            | Error::ManifestMismatch(_)
            | Error::OffsetsInvalid(_) => T2iStatus::FormatError,
        };
        Failure(status, format!("{}: {e}", e.class()))
    }
}

type Outcome = Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(T2iStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `body`, records any failure message and converts panics.
fn guard(body: impl FnOnce() -> Outcome) -> T2iStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            T2iStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside t2ieval".into());
            T2iStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn stats<'a>(handle: *const T2iStats, what: &str) -> Result<&'a GaussianStats, Failure> {
    handle.as_ref().map(|s| &s.0).ok_or_else(|| null(what))
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure(T2iStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Outcome {
    require(out)?;
    out.write(value);
    Ok(())
}

fn product(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure(T2iStatus::InvalidArgument, "size overflows".into()))
}

fn require<T>(out: *mut T) -> Outcome {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    Ok(())
}

unsafe fn put_handle(out: *mut *mut T2iStats, s: GaussianStats) -> Outcome {
    put(out, Box::into_raw(Box::new(T2iStats(s))))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the untruncated message length
/// plus one; the message is empty after a successful call.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn t2i_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn t2i_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Estimates statistics of `rows × dim` embeddings.
///
/// # Safety
/// `data` must point to `rows * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_estimate(
    data: *const f64,
    rows: usize,
    dim: usize,
    out: *mut *mut T2iStats,
) -> T2iStatus {
    guard(|| {
        require(out)?;
        let values = slice(data, product(rows, dim)?, "data")?;
        let emb = EmbeddingMatrix::new(rows, dim, values.to_vec())?;
        put_handle(out, t2ieval::estimate_stats(&emb)?)
    })
}

/// Builds statistics from a mean of length `dim` and a `dim × dim`
/// covariance.
///
/// # Safety
/// `mean` and `cov` must point to `dim` and `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_from_parts(
    n: u64,
    mean: *const f64,
    cov: *const f64,
    dim: usize,
    out: *mut *mut T2iStats,
) -> T2iStatus {
    guard(|| {
        require(out)?;
        let mean = DVector::from_column_slice(slice(mean, dim, "mean")?);
        let cov = DMatrix::from_row_slice(dim, dim, slice(cov, product(dim, dim)?, "cov")?);
        put_handle(out, GaussianStats::new(n, mean, cov)?)
    })
}

/// Reads a `.stats` file.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_load(file: *const c_char, out: *mut *mut T2iStats) -> T2iStatus {
    guard(|| {
        require(out)?;
        put_handle(out, read_stats(path(file)?)?)
    })
}

/// Writes a `.stats` file.
///
/// # Safety
/// `stats_handle` must be a live handle; `file` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_save(
    stats_handle: *const T2iStats,
    file: *const c_char,
) -> T2iStatus {
    guard(|| Ok(write_stats(path(file)?, stats(stats_handle, "stats")?)?))
}

/// Statistics of the union of two disjoint sample sets.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_merge(
    a: *const T2iStats,
    b: *const T2iStats,
    out: *mut *mut T2iStats,
) -> T2iStatus {
    guard(|| {
        require(out)?;
        put_handle(out, t2ieval::merge_stats(stats(a, "a")?, stats(b, "b")?)?)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `stats` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_free(stats: *mut T2iStats) {
    if !stats.is_null() {
        drop(Box::from_raw(stats));
    }
}

/// Feature dimension, or 0 for a null handle.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_dim(stats: *const T2iStats) -> usize {
    stats.as_ref().map_or(0, |s| s.0.dim())
}

/// Sample count, or 0 for a null handle.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_count(stats: *const T2iStats) -> u64 {
    stats.as_ref().map_or(0, |s| s.0.n())
}

/// Copies the mean (`dim` doubles) and covariance (`dim * dim` doubles,
/// row-major). Either output may be null to skip it.
///
/// # Safety
/// `stats_handle` must be a live handle; non-null outputs must have room
/// for the sizes above.
#[no_mangle]
pub unsafe extern "C" fn t2i_stats_copy(
    stats_handle: *const T2iStats,
    mean: *mut f64,
    cov: *mut f64,
) -> T2iStatus {
    guard(|| {
        let s = stats(stats_handle, "stats")?;
        if !mean.is_null() {
            ptr::copy_nonoverlapping(s.mean().as_ptr(), mean, s.dim());
        }
        if !cov.is_null() {
            // Symmetric, so column-major storage is also row-major.
            ptr::copy_nonoverlapping(s.cov().as_ptr(), cov, s.dim() * s.dim());
        }
        Ok(())
    })
}

/// Fréchet distance between two Gaussians.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn t2i_frechet_distance(
    a: *const T2iStats,
    b: *const T2iStats,
    out: *mut f64,
) -> T2iStatus {
    guard(|| {
        put(
            out,
            t2ieval::frechet_distance(stats(a, "a")?, stats(b, "b")?)?,
        )
    })
}

/// Cross Model Distance of generated (`f`), real (`r`) and text (`l`)
/// statistics.
///
/// # Safety
/// The handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn t2i_compute_cmd(
    f: *const T2iStats,
    r: *const T2iStats,
    l: *const T2iStats,
    out: *mut T2iCmdReport,
) -> T2iStatus {
    guard(|| {
        let rep = t2ieval::compute_cmd(stats(f, "f")?, stats(r, "r")?, stats(l, "l")?)?;
        put(
            out,
            T2iCmdReport {
                dis_fr: rep.dis_fr,
                dis_fl: rep.dis_fl,
                dis_rl: rep.dis_rl,
                itdis: rep.itdis,
                cmd: rep.cmd,
                regularized_fr: rep.regularized.dis_fr,
                regularized_fl: rep.regularized.dis_fl,
                regularized_rl: rep.regularized.dis_rl,
            },
        )
    })
}

unsafe fn scores(data: *const f64, m: usize) -> Result<SimilarityMatrix, Failure> {
    Ok(SimilarityMatrix::new(
        m,
        m,
        slice(data, product(m, m)?, "scores")?.to_vec(),
    )?)
}

/// Contrastive losses of an `m × m` score matrix (rows are images).
///
/// # Safety
/// `scores_data` must point to `m * m` doubles; `l1` and `l2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn t2i_contrastive_loss(
    scores_data: *const f64,
    m: usize,
    gamma: f64,
    l1: *mut f64,
    l2: *mut f64,
) -> T2iStatus {
    guard(|| {
        require(l1)?;
        require(l2)?;
        let (a, b) = t2ieval::contrastive_loss(&scores(scores_data, m)?, gamma)?;
        put(l1, a)?;
        put(l2, b)
    })
}

/// Recall@1/5/10 in both directions for an `m × m` score matrix whose
/// diagonal holds the true pairs.
///
/// # Safety
/// `scores_data` must point to `m * m` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn t2i_rank_retrieval(
    scores_data: *const f64,
    m: usize,
    out: *mut T2iRecall,
) -> T2iStatus {
    guard(|| {
        let rep = t2ieval::rank_retrieval(&scores(scores_data, m)?, &[1, 5, 10])?;
        let mut recall = T2iRecall::default();
        for (i, r) in rep.recalls.iter().enumerate() {
            recall.image_to_text[i] = r.image_to_text;
            recall.text_to_image[i] = r.text_to_image;
        }
        put(out, recall)
    })
}

/// Principal square root of a symmetric PSD `d × d` matrix.
///
/// # Safety
/// `matrix` must point to `d * d` doubles and `out` to `d * d` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn t2i_sqrtm_psd(matrix: *const f64, d: usize, out: *mut f64) -> T2iStatus {
    guard(|| {
        require(out)?;
        let a = DMatrix::from_row_slice(d, d, slice(matrix, product(d, d)?, "matrix")?);
        let root = t2ieval::sqrtm_psd(&a)?;
        let out = std::slice::from_raw_parts_mut(out, d * d);
        for (i, row) in root.row_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out[i * d + j] = *v;
            }
        }
        Ok(())
    })
}
