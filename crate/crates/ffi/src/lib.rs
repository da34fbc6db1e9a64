//! C ABI over `signembed`.
//!
//! Operators and test sets are opaque heap handles created by `se_*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns an [`SeStatus`]; on failure `se_last_error_message` describes the
//! most recent error on the calling thread. Matrices cross the boundary as
//! row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use signembed::ensembles::{
    column_randomize, gaussian_operator, partial_circulant, CirculantSpec, EmbeddingOperator,
    SignVector,
};
use signembed::experiments::{evaluate_bound, BoundParameters};
use signembed::geometry::{mean_width, sup_distortion, Exactness, TestSet};
use signembed::numerics::{circular_convolve, sym_eig, DenseMatrix, RngStream};
use signembed::regularity::sparse_distortion_exact;
use signembed::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeStatus {
    Ok = 0,
    Usage = 1,
    Numerical = 2,
    Resource = 3,
    NullPointer = 4,
    Panic = 5,
    Parse = 6,
    Io = 7,
}

/// Opaque embedding operator.
pub struct SeOperator(EmbeddingOperator);

/// Opaque test set.
pub struct SeTestSet(TestSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> SeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeStatus::Ok,
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("{name} is null"));
            SeStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            let status = match &e {
                Error::Usage(_) => SeStatus::Usage,
                Error::Numerical(_) => SeStatus::Numerical,
                Error::Resource(_) => SeStatus::Resource,
                Error::Parse(_) => SeStatus::Parse,
                Error::Io(_) => SeStatus::Io,
            };
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SeStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, name: &'static str) -> FfiResult {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    p.write(value);
    Ok(())
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

fn usage_error(msg: String) -> Fail {
    Fail::Lib(Error::Usage(msg))
}

/// Message for the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn se_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Normalized `m × n` Gaussian operator from stream `(seed, stream)`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn se_operator_gaussian(
    m: usize,
    n: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut SeOperator,
) -> SeStatus {
    guard(|| {
        let op = gaussian_operator(m, n, RngStream::new(seed, stream))?;
        write(out, Box::into_raw(Box::new(SeOperator(op))), "out")
    })
}

/// Normalized partial circulant with generator `generator[0..n]` (entries
/// ±1) restricted to rows `rows[0..m]`.
///
/// # Safety
/// `generator` must hold `n` values, `rows` must hold `m` values and `out`
/// must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn se_operator_circulant(
    generator: *const i8,
    n: usize,
    rows: *const usize,
    m: usize,
    out: *mut *mut SeOperator,
) -> SeStatus {
    guard(|| {
        let xi = SignVector::from_i8(slice(generator, n, "generator")?)?;
        let rows = slice(rows, m, "rows")?.to_vec();
        let op = partial_circulant(CirculantSpec::new(xi, rows)?)?;
        write(out, Box::into_raw(Box::new(SeOperator(op))), "out")
    })
}

/// Dense operator copied from a row-major `rows × cols` buffer.
///
/// # Safety
/// `data` must hold `rows * cols` values and `out` must be valid for a
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn se_operator_dense(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut SeOperator,
) -> SeStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| usage_error("rows * cols overflows".into()))?;
        let a = DenseMatrix::new(rows, cols, slice(data, len, "data")?.to_vec())?;
        write(
            out,
            Box::into_raw(Box::new(SeOperator(EmbeddingOperator::Dense(a)))),
            "out",
        )
    })
}

/// New handle for `base · diag(signs)`; `base` is left untouched.
///
/// # Safety
/// `base` must be a live operator handle, `signs` must hold `n` values and
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn se_operator_column_randomize(
    base: *const SeOperator,
    signs: *const i8,
    n: usize,
    out: *mut *mut SeOperator,
) -> SeStatus {
    guard(|| {
        let base = deref(base, "base")?;
        let eps = SignVector::from_i8(slice(signs, n, "signs")?)?;
        let op = column_randomize(base.0.clone(), eps)?;
        write(out, Box::into_raw(Box::new(SeOperator(op))), "out")
    })
}

/// # Safety
/// `op` must be a live operator handle; `m` and `n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn se_operator_dims(
    op: *const SeOperator,
    m: *mut usize,
    n: *mut usize,
) -> SeStatus {
    guard(|| {
        let (rows, cols) = deref(op, "op")?.0.dims();
        write(m, rows, "m")?;
        write(n, cols, "n")
    })
}

/// `y = A x` with `x_len = n` and `y_len = m`.
///
/// # Safety
/// `x` and `y` must hold `x_len` and `y_len` values.
#[no_mangle]
pub unsafe extern "C" fn se_operator_apply(
    op: *const SeOperator,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> SeStatus {
    guard(|| {
        let op = &deref(op, "op")?.0;
        let out = slice_mut(y, y_len, "y")?;
        if y_len != op.rows() {
            return Err(usage_error(format!(
                "y has length {y_len}, expected {}",
                op.rows()
            )));
        }
        let v = op.apply(slice(x, x_len, "x")?)?;
        out.copy_from_slice(&v);
        Ok(())
    })
}

/// Writes the dense `m × n` matrix, row-major, into `out[0..len]`.
///
/// # Safety
/// `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn se_operator_materialize(
    op: *const SeOperator,
    out: *mut f64,
    len: usize,
) -> SeStatus {
    guard(|| {
        let op = &deref(op, "op")?.0;
        let (m, n) = op.dims();
        if len != m * n {
            return Err(usage_error(format!(
                "buffer has length {len}, expected {}",
                m * n
            )));
        }
        let a = op.materialize()?;
        slice_mut(out, len, "out")?.copy_from_slice(a.data());
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn se_operator_free(op: *mut SeOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Finite set of `count` points in `R^n`, row-major.
///
/// # Safety
/// `data` must hold `count * n` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn se_test_set_points(
    data: *const f64,
    count: usize,
    n: usize,
    out: *mut *mut SeTestSet,
) -> SeStatus {
    guard(|| {
        let len = count
            .checked_mul(n)
            .ok_or_else(|| usage_error("count * n overflows".into()))?;
        let flat = slice(data, len, "data")?;
        let points: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let t = TestSet::finite_points(&points)?;
        write(out, Box::into_raw(Box::new(SeTestSet(t))), "out")
    })
}

/// Ball of the given radius in a random `d`-dimensional subspace of `R^n`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn se_test_set_subspace_ball(
    n: usize,
    d: usize,
    radius: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut SeTestSet,
) -> SeStatus {
    guard(|| {
        let t = TestSet::random_subspace_ball(n, d, radius, RngStream::new(seed, stream))?;
        write(out, Box::into_raw(Box::new(SeTestSet(t))), "out")
    })
}

/// Unit `k`-sparse vectors in `R^n`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn se_test_set_sparse_sphere(
    n: usize,
    k: usize,
    out: *mut *mut SeTestSet,
) -> SeStatus {
    guard(|| {
        let t = TestSet::sparse_sphere(n, k)?;
        write(out, Box::into_raw(Box::new(SeTestSet(t))), "out")
    })
}

/// `ℓ₁` ball of the given radius in `R^n`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn se_test_set_l1_ball(
    n: usize,
    radius: f64,
    out: *mut *mut SeTestSet,
) -> SeStatus {
    guard(|| {
        let t = TestSet::l1_ball(n, radius)?;
        write(out, Box::into_raw(Box::new(SeTestSet(t))), "out")
    })
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn se_test_set_free(t: *mut SeTestSet) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Exact `sup` over unit `k`-sparse `x` of `|‖Ax‖² − 1|` for a row-major
/// `rows × cols` matrix.
///
/// # Safety
/// `data` must hold `rows * cols` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn se_sparse_distortion_exact(
    data: *const f64,
    rows: usize,
    cols: usize,
    k: usize,
    out: *mut f64,
) -> SeStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| usage_error("rows * cols overflows".into()))?;
        let a = DenseMatrix::new(rows, cols, slice(data, len, "data")?.to_vec())?;
        write(out, sparse_distortion_exact(&a, k)?, "out")
    })
}

/// `sup_{t ∈ T} |‖At‖² − ‖t‖²|`. `exact` receives 1 when the value is exact
/// and 0 when it is a lower bound.
///
/// # Safety
/// Handles must be live; `value` and `exact` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn se_sup_distortion(
    op: *const SeOperator,
    set: *const SeTestSet,
    seed: u64,
    stream: u64,
    value: *mut f64,
    exact: *mut i32,
) -> SeStatus {
    guard(|| {
        let (v, e) = sup_distortion(
            &deref(op, "op")?.0,
            &deref(set, "set")?.0,
            RngStream::new(seed, stream),
        )?;
        write(value, v, "value")?;
        write(exact, i32::from(e == Exactness::Exact), "exact")
    })
}

/// Monte-Carlo mean width with its standard error.
///
/// # Safety
/// `set` must be live; `mean` and `std_error` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn se_mean_width(
    set: *const SeTestSet,
    samples: usize,
    seed: u64,
    stream: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> SeStatus {
    guard(|| {
        let w = mean_width(&deref(set, "set")?.0, samples, RngStream::new(seed, stream))?;
        write(mean, w.mean, "mean")?;
        write(std_error, w.std_error, "std_error")
    })
}

/// Reference error `u²(Λ·radius·δ·width + (δ·width)²)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn se_evaluate_bound(
    delta: f64,
    n: usize,
    width: f64,
    radius: f64,
    u: f64,
    out: *mut f64,
) -> SeStatus {
    guard(|| {
        let p = BoundParameters::new(delta, n, width, radius, u)?;
        write(out, evaluate_bound(&p), "out")
    })
}

/// `w_j = Σ_i u_{(j−i) mod n} v_i`.
///
/// # Safety
/// `u`, `v` and `w` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn se_circular_convolve(
    u: *const f64,
    v: *const f64,
    n: usize,
    w: *mut f64,
) -> SeStatus {
    guard(|| {
        let r = circular_convolve(slice(u, n, "u")?, slice(v, n, "v")?)?;
        slice_mut(w, n, "w")?.copy_from_slice(&r);
        Ok(())
    })
}

/// Ascending eigenvalues of a symmetric row-major `n × n` matrix.
///
/// # Safety
/// `data` must hold `n * n` values and `eigenvalues` must hold `n`.
#[no_mangle]
pub unsafe extern "C" fn se_sym_eig(data: *const f64, n: usize, eigenvalues: *mut f64) -> SeStatus {
    guard(|| {
        let len = n
            .checked_mul(n)
            .ok_or_else(|| usage_error("n * n overflows".into()))?;
        let m = DenseMatrix::new(n, n, slice(data, len, "data")?.to_vec())?;
        let r = sym_eig(&m)?;
        slice_mut(eigenvalues, n, "eigenvalues")?.copy_from_slice(&r.eigenvalues);
        Ok(())
    })
}
