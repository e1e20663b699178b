//! C ABI over the `ucoh` command set, with opaque handles for interactions
//! and locales. Every entry point returns a [`UcohStatus`]; the message of
//! the last failure on the calling thread is available from
//! [`ucoh_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uniform_cohomology::cli::{run_command_str, Overrides};
use uniform_cohomology::error::Error;
use uniform_cohomology::interaction::Interaction;
use uniform_cohomology::locale::{Locale, Vertex};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UcohStatus {
    Ok = 0,
    PropertyViolated = 1,
    InvalidInput = 2,
    NullPointer = 3,
    InvalidUtf8 = 4,
    Panic = 5,
}

/// Opaque interaction handle.
pub struct UcohInteraction(Interaction);

/// Opaque locale handle.
pub struct UcohLocale(Locale);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> UcohStatus {
    set_error(e.to_string());
    if e.is_property_violation() {
        UcohStatus::PropertyViolated
    } else {
        UcohStatus::InvalidInput
    }
}

fn guard(f: impl FnOnce() -> UcohStatus) -> UcohStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            UcohStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, UcohStatus> {
    if p.is_null() {
        set_error("null pointer argument");
        return Err(UcohStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not UTF-8");
        UcohStatus::InvalidUtf8
    })
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! nonnull {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return UcohStatus::NullPointer;
        }
    };
}

/// Message of the last failure on this thread; empty when none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ucoh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Runs a command on a JSON manifest. `*report` receives a JSON document to
/// be released with [`ucoh_string_free`]; the status mirrors the CLI exit
/// code (0, 1 or 2).
///
/// # Safety
/// `command` and `manifest` must be NUL-terminated strings; `report` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucoh_run(
    command: *const c_char,
    manifest: *const c_char,
    report: *mut *mut c_char,
) -> UcohStatus {
    guard(|| {
        nonnull!(report);
        *report = ptr::null_mut();
        let command = tri!(read_str(command));
        let manifest = tri!(read_str(manifest));
        let out = run_command_str(command, manifest, &Overrides::default());
        let body = CString::new(out.to_json_string()).unwrap_or_default();
        *report = body.into_raw();
        match out.code {
            0 => UcohStatus::Ok,
            1 => {
                set_error(format!("{command}: property violated"));
                UcohStatus::PropertyViolated
            }
            _ => {
                set_error(out.report.get("error").and_then(|e| e.as_str()).unwrap_or("invalid input").to_string());
                UcohStatus::InvalidInput
            }
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ucoh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a catalog interaction such as `exclusion` or `multispecies:3`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucoh_interaction_new(name: *const c_char, out: *mut *mut UcohInteraction) -> UcohStatus {
    guard(|| {
        nonnull!(out);
        *out = ptr::null_mut();
        let name = tri!(read_str(name));
        match Interaction::builtin(name) {
            Ok(i) => {
                *out = Box::into_raw(Box::new(UcohInteraction(i)));
                UcohStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `h` must come from [`ucoh_interaction_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ucoh_interaction_free(h: *mut UcohInteraction) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucoh_interaction_n_states(h: *const UcohInteraction, out: *mut usize) -> UcohStatus {
    guard(|| {
        nonnull!(h, out);
        *out = (*h).0.n_states();
        UcohStatus::Ok
    })
}

/// Dimension `c_φ` of the conserved quantities.
///
/// # Safety
/// `h` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucoh_interaction_consv_dim(h: *const UcohInteraction, out: *mut usize) -> UcohStatus {
    guard(|| {
        nonnull!(h, out);
        *out = (*h).0.conserved_quantities().dim();
        UcohStatus::Ok
    })
}

/// Copies `ξ⁽ⁱ⁾(s)` for all states into `values`, which must hold
/// `n_states` entries.
///
/// # Safety
/// `h` must be a live handle; `values` must point to `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn ucoh_interaction_consv_vector(
    h: *const UcohInteraction,
    i: usize,
    values: *mut i64,
    len: usize,
) -> UcohStatus {
    guard(|| {
        nonnull!(h, values);
        let basis = (*h).0.conserved_quantities();
        let Some(v) = basis.vectors.get(i) else {
            set_error(format!("basis index {i} out of range"));
            return UcohStatus::InvalidInput;
        };
        if len != v.len() {
            set_error(format!("expected {} entries", v.len()));
            return UcohStatus::InvalidInput;
        }
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(v);
        UcohStatus::Ok
    })
}

/// # Safety
/// `h` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucoh_interaction_is_exchangeable(h: *const UcohInteraction, out: *mut bool) -> UcohStatus {
    guard(|| {
        nonnull!(h, out);
        *out = (*h).0.exchange_table().is_exchangeable();
        UcohStatus::Ok
    })
}

/// Parses a locale descriptor such as `{"kind":"euclidean","d":2}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucoh_locale_from_json(json: *const c_char, out: *mut *mut UcohLocale) -> UcohStatus {
    guard(|| {
        nonnull!(out);
        *out = ptr::null_mut();
        let text = tri!(read_str(json));
        match serde_json::from_str::<Locale>(text) {
            Ok(l) => {
                *out = Box::into_raw(Box::new(UcohLocale(l)));
                UcohStatus::Ok
            }
            Err(e) => status_of(&Error::Json(e)),
        }
    })
}

/// # Safety
/// `h` must come from [`ucoh_locale_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ucoh_locale_free(h: *mut UcohLocale) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Graph distance between two vertices given as coordinate arrays.
///
/// # Safety
/// `h` must be a live handle; `x` and `y` must point to `len` entries each;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ucoh_locale_distance(
    h: *const UcohLocale,
    x: *const i64,
    y: *const i64,
    len: usize,
    out: *mut u64,
) -> UcohStatus {
    guard(|| {
        nonnull!(h, x, y, out);
        let x = Vertex::new(std::slice::from_raw_parts(x, len));
        let y = Vertex::new(std::slice::from_raw_parts(y, len));
        match (*h).0.distance(&x, &y) {
            Ok(Some(d)) => {
                *out = d;
                UcohStatus::Ok
            }
            Ok(None) => {
                set_error("distance not available on this locale");
                UcohStatus::InvalidInput
            }
            Err(e) => status_of(&e),
        }
    })
}
