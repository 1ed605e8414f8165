//! C ABI over the golgol engine.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free` function. Every fallible call returns a `GolStatus`;
//! `golgol_last_error` describes the most recent failure on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use golgol::life::torus::TorusArena;
use golgol::life::{rle, step_n, Cell, WorldState};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GolStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Panic = 4,
}

/// An unbounded set of live cells.
pub struct GolWorld(WorldState);

/// A bit-packed toroidal grid.
pub struct GolTorus(TorusArena);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: GolStatus, msg: impl Into<String>) -> GolStatus {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

fn guard(f: impl FnOnce() -> GolStatus) -> GolStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(GolStatus::Panic, "internal panic"))
}

/// Message for the last failure on this thread; valid until the next call.
#[no_mangle]
pub extern "C" fn golgol_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn golgol_world_new() -> *mut GolWorld {
    Box::into_raw(Box::new(GolWorld(WorldState::new())))
}

/// # Safety
/// `w` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn golgol_world_free(w: *mut GolWorld) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Parses RLE text into a new world.
///
/// # Safety
/// `text` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn golgol_world_from_rle(text: *const u8, len: usize, out: *mut *mut GolWorld) -> GolStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(GolStatus::NullPointer, "null argument");
        }
        match rle::decode(std::slice::from_raw_parts(text, len)) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(GolWorld(d.state)));
                GolStatus::Ok
            }
            Err(e) => fail(GolStatus::Parse, e.to_string()),
        }
    })
}

/// Encodes a world as RLE; release the string with `golgol_string_free`.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn golgol_world_to_rle(w: *const GolWorld, out: *mut *mut c_char) -> GolStatus {
    guard(|| {
        if w.is_null() || out.is_null() {
            return fail(GolStatus::NullPointer, "null argument");
        }
        let text = rle::encode_positioned(&(*w).0);
        *out = CString::new(text).map(CString::into_raw).unwrap_or(ptr::null_mut());
        GolStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn golgol_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `w` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn golgol_world_set(w: *mut GolWorld, x: i64, y: i64, alive: bool) -> GolStatus {
    let Some(w) = w.as_mut() else {
        return fail(GolStatus::NullPointer, "null world");
    };
    if alive {
        w.0.insert(Cell::new(x, y));
    } else {
        w.0.remove(Cell::new(x, y));
    }
    GolStatus::Ok
}

/// # Safety
/// `w` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn golgol_world_get(w: *const GolWorld, x: i64, y: i64) -> bool {
    w.as_ref().is_some_and(|w| w.0.contains(Cell::new(x, y)))
}

/// # Safety
/// `w` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn golgol_world_population(w: *const GolWorld) -> u64 {
    w.as_ref().map_or(0, |w| w.0.len() as u64)
}

/// Advances the world `steps` generations on the unbounded plane.
///
/// # Safety
/// `w` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn golgol_world_step(w: *mut GolWorld, steps: u64) -> GolStatus {
    guard(|| {
        let Some(w) = w.as_mut() else {
            return fail(GolStatus::NullPointer, "null world");
        };
        w.0 = step_n(&w.0, steps as usize);
        GolStatus::Ok
    })
}

/// Creates an empty torus, at least 3x3.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_new(width: usize, height: usize, out: *mut *mut GolTorus) -> GolStatus {
    if out.is_null() {
        return fail(GolStatus::NullPointer, "null argument");
    }
    match TorusArena::new(width, height) {
        Ok(t) => {
            *out = Box::into_raw(Box::new(GolTorus(t)));
            GolStatus::Ok
        }
        Err(e) => fail(GolStatus::InvalidArgument, e.to_string()),
    }
}

/// Wraps a world onto a new torus.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_from_world(w: *const GolWorld, width: usize, height: usize, out: *mut *mut GolTorus) -> GolStatus {
    if w.is_null() || out.is_null() {
        return fail(GolStatus::NullPointer, "null argument");
    }
    match TorusArena::from_world(width, height, &(*w).0) {
        Ok(t) => {
            *out = Box::into_raw(Box::new(GolTorus(t)));
            GolStatus::Ok
        }
        Err(e) => fail(GolStatus::InvalidArgument, e.to_string()),
    }
}

/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_free(t: *mut GolTorus) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Coordinates wrap.
///
/// # Safety
/// `t` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_set(t: *mut GolTorus, x: i64, y: i64, alive: bool) -> GolStatus {
    let Some(t) = t.as_mut() else {
        return fail(GolStatus::NullPointer, "null torus");
    };
    t.0.set(Cell::new(x, y), alive);
    GolStatus::Ok
}

/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_get(t: *const GolTorus, x: i64, y: i64) -> bool {
    t.as_ref().is_some_and(|t| t.0.get(Cell::new(x, y)))
}

/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_population(t: *const GolTorus) -> u64 {
    t.as_ref().map_or(0, |t| t.0.population())
}

/// # Safety
/// `t` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_step(t: *mut GolTorus, steps: u64) -> GolStatus {
    guard(|| {
        let Some(t) = t.as_mut() else {
            return fail(GolStatus::NullPointer, "null torus");
        };
        t.0.step_n(steps);
        GolStatus::Ok
    })
}

/// Copies the torus contents into a new world.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn golgol_torus_to_world(t: *const GolTorus, out: *mut *mut GolWorld) -> GolStatus {
    if t.is_null() || out.is_null() {
        return fail(GolStatus::NullPointer, "null argument");
    }
    *out = Box::into_raw(Box::new(GolWorld((*t).0.to_world())));
    GolStatus::Ok
}

/// `Ok` when the nextCell formula agrees with the rule on all 512
/// neighbourhoods.
#[no_mangle]
pub extern "C" fn golgol_next_cell_check() -> GolStatus {
    guard(|| match golgol::values::check_next_cell_equals_step() {
        Ok(()) => GolStatus::Ok,
        Err(b) => fail(GolStatus::InvalidArgument, format!("counterexample {b:#011b}")),
    })
}

/// Reads the last error as an owned string; for tests and Rust callers.
pub fn last_error() -> String {
    unsafe { CStr::from_ptr(golgol_last_error()) }.to_string_lossy().into_owned()
}
