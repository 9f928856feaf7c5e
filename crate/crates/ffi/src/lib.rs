//! C ABI for `codp-sketch`.
//!
//! Sketches and heavy-hitter trackers are exposed as opaque handles created by
//! `*_new` and released by `*_free`. Every fallible call returns a
//! [`CodpStatus`]; the message of the most recent failure on the calling
//! thread is available from [`codp_last_error`]. Panics never cross the
//! boundary and are reported as `CODP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use codp_sketch::bench::AnySketch;
use codp_sketch::heavy_hitters::{HhConfig, HhReport, LazyHeavyHitters};
use codp_sketch::noise::calibrate_sigma;
use codp_sketch::streamgen::ingest_hash;
use codp_sketch::{Error, PrivacyParams, SketchSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfSequence = 3,
    CapacityExceeded = 4,
    Io = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> CodpStatus {
    match err {
        Error::OutOfSequence { .. } => CodpStatus::OutOfSequence,
        Error::CapacityExceeded { .. } => CodpStatus::CapacityExceeded,
        Error::Io { .. } | Error::EmptyStream(_) | Error::Csv(_) | Error::Json(_) => CodpStatus::Io,
        _ => CodpStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), CodpStatus>) -> CodpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CodpStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside codp".into());
            CodpStatus::Panic
        }
    }
}

fn check<T>(r: codp_sketch::Result<T>) -> Result<T, CodpStatus> {
    r.map_err(|e| {
        let status = status_of(&e);
        set_error(e.to_string());
        status
    })
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), CodpStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        Err(CodpStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Opaque frequency sketch: any of cms, cs, lazy-cms, lazy-cs, punctual-cms,
/// punctual-cs.
pub struct CodpSketch(AnySketch);

/// Opaque private heavy-hitter tracker.
pub struct CodpHeavyHitters {
    inner: LazyHeavyHitters,
    report: std::sync::Arc<HhReport>,
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn codp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Gaussian binary-mechanism noise scale for `capacity` arrivals and
/// per-arrival L2 sensitivity `sensitivity`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn codp_calibrate_sigma(
    capacity: u64,
    epsilon: f64,
    delta: f64,
    sensitivity: u32,
    out: *mut f64,
) -> CodpStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = check(PrivacyParams::new(epsilon, delta))?;
        let scale = check(calibrate_sigma(capacity, params, sensitivity))?;
        *out = scale.sigma();
        Ok(())
    })
}

/// 64-bit key for a trace token, identical to the CLI's trace ingestion.
///
/// # Safety
/// `token` must point to `len` readable bytes of UTF-8.
#[no_mangle]
pub unsafe extern "C" fn codp_key_from_token(
    token: *const c_char,
    len: usize,
    out: *mut u64,
) -> CodpStatus {
    guard(|| {
        non_null(token, "token")?;
        non_null(out, "out")?;
        let bytes = std::slice::from_raw_parts(token.cast::<u8>(), len);
        let s = std::str::from_utf8(bytes).map_err(|e| {
            set_error(format!("token is not UTF-8: {e}"));
            CodpStatus::InvalidArgument
        })?;
        *out = ingest_hash(s);
        Ok(())
    })
}

/// Creates a sketch. `kind` is a NUL-terminated name such as `"lazy-cms"`;
/// `capacity` bounds the number of arrivals (ignored by plain sketches).
///
/// # Safety
/// `kind` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn codp_sketch_new(
    kind: *const c_char,
    depth: usize,
    width: usize,
    capacity: u64,
    epsilon: f64,
    delta: f64,
    seed: u64,
    out: *mut *mut CodpSketch,
) -> CodpStatus {
    guard(|| {
        non_null(kind, "kind")?;
        non_null(out, "out")?;
        let name = CStr::from_ptr(kind).to_str().map_err(|_| {
            set_error("kind is not UTF-8".into());
            CodpStatus::InvalidArgument
        })?;
        let spec: SketchSpec = check(name.parse())?;
        let params = check(PrivacyParams::new(epsilon, delta))?;
        let sketch = check(AnySketch::build(
            spec, depth, width, capacity, params, seed, false,
        ))?;
        *out = Box::into_raw(Box::new(CodpSketch(sketch)));
        Ok(())
    })
}

/// Records one arrival of `key`.
///
/// # Safety
/// `sketch` must be a live handle from [`codp_sketch_new`].
#[no_mangle]
pub unsafe extern "C" fn codp_sketch_update(sketch: *mut CodpSketch, key: u64) -> CodpStatus {
    guard(|| {
        non_null(sketch, "sketch")?;
        check((*sketch).0.update(key))
    })
}

/// Current (released) frequency estimate of `key`.
///
/// # Safety
/// `sketch` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn codp_sketch_query(
    sketch: *const CodpSketch,
    key: u64,
    out: *mut f64,
) -> CodpStatus {
    guard(|| {
        non_null(sketch, "sketch")?;
        non_null(out, "out")?;
        *out = (*sketch).0.query(key);
        Ok(())
    })
}

/// Memory footprint in 8-byte words.
///
/// # Safety
/// `sketch` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn codp_sketch_memory_words(
    sketch: *const CodpSketch,
    out: *mut usize,
) -> CodpStatus {
    guard(|| {
        non_null(sketch, "sketch")?;
        non_null(out, "out")?;
        *out = (*sketch).0.memory_words();
        Ok(())
    })
}

/// Releases a sketch. Null is ignored.
///
/// # Safety
/// `sketch` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn codp_sketch_free(sketch: *mut CodpSketch) {
    if !sketch.is_null() {
        drop(Box::from_raw(sketch));
    }
}

/// Creates a heavy-hitter tracker for at most `capacity` arrivals.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn codp_hh_new(
    k: usize,
    k_tilde: usize,
    capacity: u64,
    epsilon: f64,
    delta: f64,
    beta: f64,
    seed: u64,
    out: *mut *mut CodpHeavyHitters,
) -> CodpStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = check(PrivacyParams::new(epsilon, delta))?;
        let config = HhConfig {
            k,
            k_tilde,
            params,
            beta,
            capacity,
        };
        let inner = check(LazyHeavyHitters::new(config, seed))?;
        let report = inner.report();
        *out = Box::into_raw(Box::new(CodpHeavyHitters { inner, report }));
        Ok(())
    })
}

/// Records one arrival of `key`.
///
/// # Safety
/// `hh` must be a live handle from [`codp_hh_new`].
#[no_mangle]
pub unsafe extern "C" fn codp_hh_update(hh: *mut CodpHeavyHitters, key: u64) -> CodpStatus {
    guard(|| {
        non_null(hh, "hh")?;
        let h = &mut *hh;
        h.report = check(h.inner.update(key))?;
        Ok(())
    })
}

/// Time of the current report and its number of items.
///
/// # Safety
/// `hh` must be a live handle; `t` and `len` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn codp_hh_report_len(
    hh: *const CodpHeavyHitters,
    t: *mut u64,
    len: *mut usize,
) -> CodpStatus {
    guard(|| {
        non_null(hh, "hh")?;
        non_null(t, "t")?;
        non_null(len, "len")?;
        let r = &(&*hh).report;
        *t = r.t;
        *len = r.items.len();
        Ok(())
    })
}

/// Copies up to `cap` report items (estimate-descending) into `keys` and
/// `estimates`; the number copied is stored in `written`.
///
/// # Safety
/// `keys` and `estimates` must each point to `cap` writable elements.
#[no_mangle]
pub unsafe extern "C" fn codp_hh_report_items(
    hh: *const CodpHeavyHitters,
    keys: *mut u64,
    estimates: *mut f64,
    cap: usize,
    written: *mut usize,
) -> CodpStatus {
    guard(|| {
        non_null(hh, "hh")?;
        non_null(written, "written")?;
        let hh = &*hh;
        let items = &hh.report.items;
        let n = items.len().min(cap);
        if n > 0 {
            non_null(keys, "keys")?;
            non_null(estimates, "estimates")?;
        }
        for (i, item) in items.iter().take(n).enumerate() {
            *keys.add(i) = item.key;
            *estimates.add(i) = item.estimate;
        }
        *written = n;
        Ok(())
    })
}

/// Releases a tracker. Null is ignored.
///
/// # Safety
/// `hh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn codp_hh_free(hh: *mut CodpHeavyHitters) {
    if !hh.is_null() {
        drop(Box::from_raw(hh));
    }
}
