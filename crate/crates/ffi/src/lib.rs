//! C ABI over the bratteli crate. Diagrams and measures are opaque handles; every call
//! returns a status code and leaves a message for `br_last_error_message` on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bratteli::linalg;
use bratteli::measures::{MeasureSpec, TailInvariantMeasure};
use bratteli::{Diagram, Error, VertexKey};

/// Opaque diagram handle.
pub struct BrDiagram(Diagram);

/// Opaque measure handle.
pub struct BrMeasure(TailInvariantMeasure);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    Spec = 4,
    Truncation = 5,
    Unsupported = 6,
    Domain = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BrStatus {
    match e {
        Error::InvalidParameter(_) => BrStatus::InvalidParameter,
        Error::Spec { .. } => BrStatus::Spec,
        Error::TruncationIncomplete { .. } => BrStatus::Truncation,
        Error::Unsupported(_) => BrStatus::Unsupported,
        _ => BrStatus::Domain,
    }
}

enum Fail {
    Status(BrStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BrStatus::Ok,
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            BrStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Status(BrStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Status(BrStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn null(what: &str) -> Fail {
    Fail::Status(BrStatus::NullArgument, format!("{what} is null"))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail::Status(BrStatus::Domain, "output contains NUL".into()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Builds a diagram from a JSON spec. The handle must be released with `br_diagram_free`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn br_diagram_from_json(json: *const c_char, out: *mut *mut BrDiagram) -> BrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let d = Diagram::from_json(text)?;
        *out = Box::into_raw(Box::new(BrDiagram(d)));
        Ok(())
    })
}

/// # Safety
/// `d` must come from `br_diagram_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn br_diagram_free(d: *mut BrDiagram) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Heights of the level-n window as JSON. Release the string with `br_string_free`.
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn br_heights_json(d: *const BrDiagram, level: usize, window: u64, out: *mut *mut c_char) -> BrStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("diagram"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let h = linalg::heights_window(&d.0, level, window)?;
        give_string(serde_json::to_string(&h).map_err(|e| Fail::Status(BrStatus::Domain, e.to_string()))?, out)
    })
}

/// Builds a measure from JSON such as {"measure":"binfty-mu-a","a":"1/2"}.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn br_measure_from_json(json: *const c_char, out: *mut *mut BrMeasure) -> BrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = MeasureSpec::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(BrMeasure(spec.build()?)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from `br_measure_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn br_measure_free(m: *mut BrMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Cylinder mass p^(n)_w as a rational string; the vertex is JSON (3 or [[1,2],[4,1]]).
///
/// # Safety
/// `m` must be a live handle, `vertex_json` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn br_cylinder_mass(
    m: *const BrMeasure,
    level: usize,
    vertex_json: *const c_char,
    out: *mut *mut c_char,
) -> BrStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("measure"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v: VertexKey = serde_json::from_str(read_str(vertex_json, "vertex_json")?)
            .map_err(|e| Fail::Lib(Error::Spec { path: "$".into(), message: e.to_string() }))?;
        give_string(m.0.cylinder_mass(level, &v)?.to_string(), out)
    })
}

/// Runs the exact invariance check; `all_pass` receives 1 or 0.
///
/// # Safety
/// `m` must be a live handle and `all_pass` valid.
#[no_mangle]
pub unsafe extern "C" fn br_verify_invariance(m: *const BrMeasure, n_max: usize, bound: u64, all_pass: *mut i32) -> BrStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("measure"))?;
        if all_pass.is_null() {
            return Err(null("all_pass"));
        }
        let r = m.0.verify_invariance(n_max, bound)?;
        *all_pass = r.all_pass as i32;
        Ok(())
    })
}

/// # Safety
/// `s` must be a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn br_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn br_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map(|c| c.as_ptr()).unwrap_or(std::ptr::null()))
}
