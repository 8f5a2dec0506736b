//! C ABI over the loss zoo and the asymmetry verifier.
//!
//! Conventions: every function returns an [`AsymStatus`] code; results come
//! back through out-pointers. Loss specs are parsed from their JSON
//! representation into opaque [`AsymLoss`] handles that must be released
//! with [`asymloss_loss_free`]. Strings returned by the library are
//! released with [`asymloss_string_free`]. The most recent error message
//! for the calling thread is available via [`asymloss_last_error`].
//!
//! The C header is generated into `include/asymloss.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use asymloss::losses::LossSpec;
use asymloss::simplex::{softmax, ClassLabel, ProbVector};
use asymloss::verifier::{verify_amse, AsymmetryWeights};
use asymloss::Error;

/// Status codes mirroring the library's error classes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymStatus {
    Ok = 0,
    /// Parameter or configuration out of its documented domain.
    ConfigError = 1,
    /// Runtime or numeric failure (invalid input, singular gradient).
    RuntimeError = 2,
    /// I/O or serialization failure.
    IoError = 3,
    /// A required pointer argument was null.
    NullPointer = 4,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 5,
}

/// Opaque handle around a validated loss specification.
pub struct AsymLoss {
    spec: LossSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_from(err: &Error) -> AsymStatus {
    match err.exit_code() {
        1 => AsymStatus::ConfigError,
        3 => AsymStatus::IoError,
        _ => AsymStatus::RuntimeError,
    }
}

fn fail(err: Error) -> AsymStatus {
    let status = status_from(&err);
    set_error(err.to_string());
    status
}

fn fail_null(what: &str) -> AsymStatus {
    set_error(format!("null pointer: {what}"));
    AsymStatus::NullPointer
}

/// Last error message for this thread, or null if none. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn asymloss_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Parses a loss spec from JSON (e.g. `{"kind":"amse","params":{"a":30.0,"q":2.0}}`)
/// into a handle. Release with [`asymloss_loss_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated C string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn asymloss_loss_parse(
    json: *const c_char,
    out: *mut *mut AsymLoss,
) -> AsymStatus {
    if json.is_null() {
        return fail_null("json");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let raw = match CStr::from_ptr(json).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("loss JSON is not valid UTF-8".into());
            return AsymStatus::InvalidUtf8;
        }
    };
    let spec: LossSpec = match serde_json::from_str(raw) {
        Ok(s) => s,
        Err(e) => return fail(Error::Json(e)),
    };
    if let Err(e) = spec.validate() {
        return fail(e);
    }
    *out = Box::into_raw(Box::new(AsymLoss { spec }));
    AsymStatus::Ok
}

/// Releases a handle returned by [`asymloss_loss_parse`]. Null is a no-op.
///
/// # Safety
/// `handle` must be a pointer previously returned by this library and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn asymloss_loss_free(handle: *mut AsymLoss) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

unsafe fn prob_from_raw(p: *const f64, k: usize) -> Result<ProbVector, Error> {
    let values = std::slice::from_raw_parts(p, k).to_vec();
    ProbVector::new(values)
}

/// Loss value at a probability vector `p` of length `k` with label `y`.
///
/// # Safety
/// `p` must point to `k` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn asymloss_loss_value(
    handle: *const AsymLoss,
    p: *const f64,
    k: usize,
    y: usize,
    out: *mut f64,
) -> AsymStatus {
    let Some(loss) = handle.as_ref() else {
        return fail_null("handle");
    };
    if p.is_null() {
        return fail_null("p");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let result = prob_from_raw(p, k)
        .and_then(|prob| ClassLabel::new(y, k).map(|label| (prob, label)))
        .and_then(|(prob, label)| loss.spec.value(&prob, label));
    match result {
        Ok(v) => {
            *out = v;
            AsymStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Per-class loss row at `p`; writes `k` doubles to `out`.
///
/// # Safety
/// `p` must point to `k` readable doubles; `out` to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn asymloss_loss_row(
    handle: *const AsymLoss,
    p: *const f64,
    k: usize,
    out: *mut f64,
) -> AsymStatus {
    let Some(loss) = handle.as_ref() else {
        return fail_null("handle");
    };
    if p.is_null() {
        return fail_null("p");
    }
    if out.is_null() {
        return fail_null("out");
    }
    match prob_from_raw(p, k).and_then(|prob| loss.spec.row(&prob)) {
        Ok(row) => {
            std::ptr::copy_nonoverlapping(row.as_ptr(), out, k);
            AsymStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Analytic gradient with respect to the probability entries; writes `k`
/// doubles to `out`.
///
/// # Safety
/// `p` must point to `k` readable doubles; `out` to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn asymloss_loss_grad_p(
    handle: *const AsymLoss,
    p: *const f64,
    k: usize,
    y: usize,
    out: *mut f64,
) -> AsymStatus {
    let Some(loss) = handle.as_ref() else {
        return fail_null("handle");
    };
    if p.is_null() {
        return fail_null("p");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let result = prob_from_raw(p, k)
        .and_then(|prob| ClassLabel::new(y, k).map(|label| (prob, label)))
        .and_then(|(prob, label)| loss.spec.grad_p(&prob, label));
    match result {
        Ok(g) => {
            std::ptr::copy_nonoverlapping(g.as_ptr(), out, k);
            AsymStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Gradient with respect to logits (chain rule through softmax); writes `k`
/// doubles to `out`.
///
/// # Safety
/// `logits` must point to `k` readable doubles; `out` to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn asymloss_loss_grad_logits(
    handle: *const AsymLoss,
    logits: *const f64,
    k: usize,
    y: usize,
    out: *mut f64,
) -> AsymStatus {
    let Some(loss) = handle.as_ref() else {
        return fail_null("handle");
    };
    if logits.is_null() {
        return fail_null("logits");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let z = std::slice::from_raw_parts(logits, k);
    let result =
        ClassLabel::new(y, k).and_then(|label| loss.spec.grad_logits(z, label));
    match result {
        Ok(g) => {
            std::ptr::copy_nonoverlapping(g.as_ptr(), out, k);
            AsymStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Numerically stable softmax; writes `k` doubles to `out`.
///
/// # Safety
/// `logits` must point to `k` readable doubles; `out` to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn asymloss_softmax(
    logits: *const f64,
    k: usize,
    out: *mut f64,
) -> AsymStatus {
    if logits.is_null() {
        return fail_null("logits");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let z = std::slice::from_raw_parts(logits, k);
    match softmax(z) {
        Ok(p) => {
            std::ptr::copy_nonoverlapping(p.values().as_ptr(), out, k);
            AsymStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Runs the full asymmetry verdict for the AMSE family at (q, a) against a
/// weight vector of length `k`: closed-form threshold, sup h, and the
/// brute-force oracle. On success `*json_out` receives a JSON report
/// (release with [`asymloss_string_free`]).
///
/// # Safety
/// `weights` must point to `k` readable doubles; `json_out` must be a valid
/// pointer to receive the string.
#[no_mangle]
pub unsafe extern "C" fn asymloss_verify_amse(
    q: f64,
    a: f64,
    weights: *const f64,
    k: usize,
    grid: usize,
    resolution: usize,
    json_out: *mut *mut c_char,
) -> AsymStatus {
    if weights.is_null() {
        return fail_null("weights");
    }
    if json_out.is_null() {
        return fail_null("json_out");
    }
    let w = std::slice::from_raw_parts(weights, k).to_vec();
    let verdict = AsymmetryWeights::new(w)
        .and_then(|weights| verify_amse(q, a, &weights, grid, resolution));
    match verdict {
        Ok(v) => {
            let json = match serde_json::to_string(&v) {
                Ok(j) => j,
                Err(e) => return fail(Error::Json(e)),
            };
            let c = CString::new(json).expect("serde_json output has no NUL bytes");
            *json_out = c.into_raw();
            AsymStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn asymloss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> *mut AsymLoss {
        let c = CString::new(json).unwrap();
        let mut handle: *mut AsymLoss = std::ptr::null_mut();
        let status = unsafe { asymloss_loss_parse(c.as_ptr(), &mut handle) };
        assert_eq!(status, AsymStatus::Ok);
        handle
    }

    #[test]
    fn value_round_trips_through_the_c_surface() {
        let handle = parse(r#"{"kind":"amse","params":{"a":2.0,"q":2.0}}"#);
        let p = [0.8, 0.2];
        let mut value = 0.0;
        let status = unsafe { asymloss_loss_value(handle, p.as_ptr(), 2, 0, &mut value) };
        assert_eq!(status, AsymStatus::Ok);
        assert!((value - 0.74).abs() < 1e-12);

        let mut grad = [0.0; 2];
        let status =
            unsafe { asymloss_loss_grad_p(handle, p.as_ptr(), 2, 0, grad.as_mut_ptr()) };
        assert_eq!(status, AsymStatus::Ok);
        assert!((grad[0] + 1.2).abs() < 1e-12);
        assert!((grad[1] - 0.2).abs() < 1e-12);
        unsafe { asymloss_loss_free(handle) };
    }

    #[test]
    fn row_and_softmax_work() {
        let handle = parse(r#"{"kind":"mae"}"#);
        let p = [0.5, 0.3, 0.2];
        let mut row = [0.0; 3];
        assert_eq!(
            unsafe { asymloss_loss_row(handle, p.as_ptr(), 3, row.as_mut_ptr()) },
            AsymStatus::Ok
        );
        assert!((row.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        unsafe { asymloss_loss_free(handle) };

        let logits = [1.0, 0.0];
        let mut probs = [0.0; 2];
        assert_eq!(
            unsafe { asymloss_softmax(logits.as_ptr(), 2, probs.as_mut_ptr()) },
            AsymStatus::Ok
        );
        assert!((probs[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn grad_logits_matches_ce_identity() {
        let handle = parse(r#"{"kind":"ce"}"#);
        let logits = [0.3, -1.2, 2.0];
        let mut g = [0.0; 3];
        assert_eq!(
            unsafe { asymloss_loss_grad_logits(handle, logits.as_ptr(), 3, 1, g.as_mut_ptr()) },
            AsymStatus::Ok
        );
        let mut p = [0.0; 3];
        unsafe { asymloss_softmax(logits.as_ptr(), 3, p.as_mut_ptr()) };
        for j in 0..3 {
            let e = if j == 1 { 1.0 } else { 0.0 };
            assert!((g[j] - (p[j] - e)).abs() < 1e-12);
        }
        unsafe { asymloss_loss_free(handle) };
    }

    #[test]
    fn errors_set_status_and_message() {
        let mut handle: *mut AsymLoss = std::ptr::null_mut();
        let bad = CString::new(r#"{"kind":"amse","params":{"a":0.5,"q":2.0}}"#).unwrap();
        let status = unsafe { asymloss_loss_parse(bad.as_ptr(), &mut handle) };
        assert_eq!(status, AsymStatus::ConfigError);
        let msg = unsafe { CStr::from_ptr(asymloss_last_error()) };
        assert!(msg.to_str().unwrap().contains("a >= 1"));

        let status = unsafe { asymloss_loss_parse(std::ptr::null(), &mut handle) };
        assert_eq!(status, AsymStatus::NullPointer);

        let handle = parse(r#"{"kind":"ce"}"#);
        let not_simplex = [0.9, 0.9];
        let mut value = 0.0;
        let status =
            unsafe { asymloss_loss_value(handle, not_simplex.as_ptr(), 2, 0, &mut value) };
        assert_eq!(status, AsymStatus::RuntimeError);
        unsafe { asymloss_loss_free(handle) };
    }

    #[test]
    fn verify_returns_verdict_json() {
        // K=10 symmetric 0.8 weights at the a = 9 boundary.
        let mut w = [0.8 / 9.0; 10];
        w[0] = 0.2;
        let mut out: *mut c_char = std::ptr::null_mut();
        let status =
            unsafe { asymloss_verify_amse(2.0, 9.0, w.as_ptr(), 10, 2000, 10_000, &mut out) };
        assert_eq!(status, AsymStatus::Ok);
        let json = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { asymloss_string_free(out) };
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["theorem_satisfied"], true);
        assert_eq!(v["oracle_vertex"], true);
        assert!((v["required_ratio"].as_f64().unwrap() - 2.25).abs() < 1e-9);
    }

    #[test]
    fn generated_header_covers_the_surface() {
        let header = std::fs::read_to_string(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/asymloss.h"),
        )
        .expect("header generated at build time");
        for symbol in [
            "asymloss_loss_parse",
            "asymloss_loss_free",
            "asymloss_loss_value",
            "asymloss_loss_row",
            "asymloss_loss_grad_p",
            "asymloss_loss_grad_logits",
            "asymloss_softmax",
            "asymloss_verify_amse",
            "asymloss_string_free",
            "asymloss_last_error",
            "typedef struct AsymLoss AsymLoss",
        ] {
            assert!(header.contains(symbol), "header missing {symbol}");
        }
    }
}
