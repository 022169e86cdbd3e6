//! C interface to corrlab.
//!
//! Objects cross the boundary as opaque handles or as JSON strings in the
//! same formats the command-line tool reads and writes. Every function
//! returns a [`CorrlabStatus`]; on failure a message is available from
//! [`corrlab_last_error`] until the next call on the same thread.
//!
//! Strings returned through `char **` belong to the caller and must be
//! released with [`corrlab_string_free`]. Handles are released with their
//! matching `_free` function. Passing NULL to a free function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use corrlab::error::Error;
use corrlab::extension::k0::{K0Functor, K0Nerve};
use corrlab::extension::ncorr::{GammaFunctor, NCorrOracle};
use corrlab::extension::Engine;
use corrlab::nerve::{fill_horn, NCorrSimplex};
use corrlab::random::{self, Limits};
use corrlab::{bicat, selftest, serial, validate};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrlabStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An input string was not UTF-8.
    InvalidUtf8 = 2,
    /// Input was empty or not JSON.
    Parse = 3,
    /// JSON did not match the expected document layout.
    Schema = 4,
    /// The data describe no valid algebra, map or module.
    InvalidInput = 5,
    /// A coherence condition such as a pentagon or unit condition failed.
    InvariantViolated = 6,
    /// A horn could not be filled.
    Unfillable = 7,
    /// A dimension or index was out of the supported range.
    OutOfRange = 8,
    /// The call completed but reported failed checks.
    CheckFailed = 9,
    /// An internal error; the library state is unaffected.
    Panic = 10,
}

impl From<&Error> for CorrlabStatus {
    fn from(e: &Error) -> Self {
        use Error::*;
        match e {
            Parse(_) => CorrlabStatus::Parse,
            Schema { .. } => CorrlabStatus::Schema,
            InvalidAlgebra(_) | NotMultiplicative { .. } | NotStarPreserving { .. } | ShapeMismatch(_)
            | NotProjection(_) | LengthMismatch { .. } | BaseMismatch | EndpointMismatch(_) | NotMonotone(_)
            | ShapeViolation(_) | NotNested(_) | NotStableOnDiagram(_) => CorrlabStatus::InvalidInput,
            NotUnitary(_) | NotRightLinear(_) | NotIntertwining(_) | NotUnital(_) | NotBalanced(_)
            | UnitConditionViolated { .. } | PentagonViolated { .. } | FunctorialityViolated { .. }
            | CompatibilityViolated { .. } | BoundaryMismatch(_) => CorrlabStatus::InvariantViolated,
            Unfillable(_) | IncompatibleFaces(_) | NotAnEquivalence(_) | OracleFillFailed(_) => {
                CorrlabStatus::Unfillable
            }
            DimensionTooLarge { .. } | IndexOutOfRange { .. } => CorrlabStatus::OutOfRange,
        }
    }
}

/// An `n`-simplex of the correspondence nerve.
pub struct CorrlabSimplex(NCorrSimplex);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CorrlabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

type FfiResult = Result<CorrlabStatus, Failure>;

/// Runs `f`, records its error, and turns panics into [`CorrlabStatus::Panic`].
fn guard(f: impl FnOnce() -> FfiResult) -> CorrlabStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            CorrlabStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CorrlabStatus::NullArgument, format!("{what} is NULL"))
}

/// # Safety
/// `p` is NULL or a nul-terminated string.
unsafe fn input<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CorrlabStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `out` is NULL or writable.
unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| Failure(CorrlabStatus::Panic, "output contains a nul byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// # Safety
/// `out` is NULL or writable.
unsafe fn put_json(out: *mut *mut c_char, v: &impl serde::Serialize) -> Result<(), Failure> {
    put_string(out, serde_json::to_string(v).expect("records serialise"))
}

/// # Safety
/// `out` is NULL or writable.
unsafe fn put_simplex(out: *mut *mut CorrlabSimplex, s: NCorrSimplex) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(CorrlabSimplex(s)));
    Ok(())
}

/// # Safety
/// `p` is NULL or a live handle.
unsafe fn simplex<'a>(p: *const CorrlabSimplex) -> Result<&'a NCorrSimplex, Failure> {
    p.as_ref().map(|s| &s.0).ok_or_else(|| null("simplex"))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn corrlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn corrlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` is NULL or a string obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates an `ncorr_simplex` document.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_simplex_from_json(json: *const c_char, out: *mut *mut CorrlabSimplex) -> CorrlabStatus {
    guard(|| {
        let text = input(json, "json")?;
        let s: serial::SimplexJson = serial::parse_as(text, "ncorr_simplex")?;
        put_simplex(out, serial::simplex_from_json(&s, "$")?)?;
        Ok(CorrlabStatus::Ok)
    })
}

/// Serialises a simplex.
///
/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_simplex_to_json(s: *const CorrlabSimplex, out: *mut *mut c_char) -> CorrlabStatus {
    guard(|| {
        put_json(out, &serial::simplex_to_json(simplex(s)?))?;
        Ok(CorrlabStatus::Ok)
    })
}

/// Dimension of a simplex.
///
/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_simplex_dim(s: *const CorrlabSimplex, out: *mut usize) -> CorrlabStatus {
    guard(|| {
        let d = simplex(s)?.dim();
        *out.as_mut().ok_or_else(|| null("output pointer"))? = d;
        Ok(CorrlabStatus::Ok)
    })
}

/// The face `d_i`.
///
/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_simplex_face(
    s: *const CorrlabSimplex,
    i: usize,
    out: *mut *mut CorrlabSimplex,
) -> CorrlabStatus {
    guard(|| {
        put_simplex(out, simplex(s)?.face(i)?)?;
        Ok(CorrlabStatus::Ok)
    })
}

/// The degeneracy `s_i`.
///
/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_simplex_degeneracy(
    s: *const CorrlabSimplex,
    i: usize,
    out: *mut *mut CorrlabSimplex,
) -> CorrlabStatus {
    guard(|| {
        put_simplex(out, simplex(s)?.degeneracy(i)?)?;
        Ok(CorrlabStatus::Ok)
    })
}

/// Frobenius distance between two simplices with the same shape, or
/// infinity when the shapes differ.
///
/// # Safety
/// `a` and `b` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_simplex_distance(
    a: *const CorrlabSimplex,
    b: *const CorrlabSimplex,
    out: *mut f64,
) -> CorrlabStatus {
    guard(|| {
        let d = simplex(a)?.dist(simplex(b)?);
        *out.as_mut().ok_or_else(|| null("output pointer"))? = d;
        Ok(CorrlabStatus::Ok)
    })
}

/// Releases a simplex handle.
///
/// # Safety
/// `s` is NULL or a handle from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrlab_simplex_free(s: *mut CorrlabSimplex) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// A random simplex of dimension `dim ≤ 3`: the image of a random chain of
/// *-homomorphisms, twisted by random unitaries when `gauged` is nonzero.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_random_simplex(
    seed: u64,
    dim: usize,
    gauged: bool,
    out: *mut *mut CorrlabSimplex,
) -> CorrlabStatus {
    guard(|| {
        if dim > 3 {
            return Err(Error::DimensionTooLarge { got: dim, max: 3 }.into());
        }
        let lim = Limits {
            max_blocks: 2,
            max_size: if dim >= 3 { 2 } else { 3 },
        };
        let mut r = random::rng(seed);
        put_simplex(out, random::random_simplex(&mut r, dim, lim, gauged)?)?;
        Ok(CorrlabStatus::Ok)
    })
}

/// Validates any document and writes the JSON report to `report`.
/// Returns [`CorrlabStatus::CheckFailed`] when some invariant exceeds `eps`.
///
/// # Safety
/// `json` is a nul-terminated string; `report` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_validate_json(json: *const c_char, eps: f64, report: *mut *mut c_char) -> CorrlabStatus {
    guard(|| {
        let text = input(json, "json")?;
        let rep = validate::validate_text(text, eps)?;
        put_json(report, &rep)?;
        if rep.passed {
            Ok(CorrlabStatus::Ok)
        } else {
            let first = rep.checks.iter().find(|c| !c.passed).expect("a failed check");
            Err(Failure(
                CorrlabStatus::CheckFailed,
                format!("{}{}", first.invariant, first.detail.as_ref().map(|d| format!(": {d}")).unwrap_or_default()),
            ))
        }
    })
}

/// Γ of a `star_hom` document, as a `correspondence` document.
///
/// # Safety
/// `hom_json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_gamma_json(hom_json: *const c_char, out: *mut *mut c_char) -> CorrlabStatus {
    guard(|| {
        let h: serial::StarHomJson = serial::parse_as(input(hom_json, "hom_json")?, "star_hom")?;
        let g = bicat::gamma_of_hom(&serial::hom_from_json(&h, "$")?)?;
        put_json(out, &serial::corr_to_json(&g.corr))?;
        Ok(CorrlabStatus::Ok)
    })
}

/// Fills an inner or special outer horn given as a `horn` document.
///
/// # Safety
/// `horn_json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_fill_horn_json(horn_json: *const c_char, out: *mut *mut CorrlabSimplex) -> CorrlabStatus {
    guard(|| {
        let h: serial::HornJson = serial::parse_as(input(horn_json, "horn_json")?, "horn")?;
        put_simplex(out, fill_horn(&serial::horn_from_json(&h, "$")?)?)?;
        Ok(CorrlabStatus::Ok)
    })
}

/// The extension of K₀ evaluated on `s`, as JSON integer matrices.
///
/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_extend_k0(s: *const CorrlabSimplex, guided: bool, out: *mut *mut c_char) -> CorrlabStatus {
    guard(|| {
        let s = simplex(s)?;
        let mut eng = Engine::with_functor(&K0Nerve, &K0Functor, guided);
        put_json(out, &serial::k0_to_json(&eng.bar_f(s, None)?))?;
        Ok(CorrlabStatus::Ok)
    })
}

/// The extension of Γ evaluated on `s`; with `guided`, special horns are
/// filled through `s` itself.
///
/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_extend_gamma(
    s: *const CorrlabSimplex,
    guided: bool,
    out: *mut *mut CorrlabSimplex,
) -> CorrlabStatus {
    guard(|| {
        let s = simplex(s)?;
        let mut eng = Engine::with_functor(&NCorrOracle, &GammaFunctor, guided);
        put_simplex(out, eng.bar_f(s, guided.then_some(s))?)?;
        Ok(CorrlabStatus::Ok)
    })
}

/// Runs one self-test suite (`suite` in 1..=10) or all of them (`suite`
/// = 0) and writes the JSON report. Returns [`CorrlabStatus::CheckFailed`]
/// when a suite fails.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn corrlab_selftest(
    seed: u64,
    eps: f64,
    quick: bool,
    suite: usize,
    out: *mut *mut c_char,
) -> CorrlabStatus {
    guard(|| {
        if suite > selftest::SUITES.len() {
            return Err(Error::IndexOutOfRange {
                index: suite,
                dim: selftest::SUITES.len(),
            }
            .into());
        }
        let cfg = selftest::Config { seed, eps, quick };
        let report = if suite == 0 {
            selftest::run_all(&cfg)
        } else {
            let (rec, cases) = selftest::run_suite(suite, &cfg);
            selftest::Report {
                seed,
                eps,
                quick,
                passed: rec.passed,
                suites: vec![rec],
                cases,
            }
        };
        put_json(out, &report)?;
        if report.passed {
            Ok(CorrlabStatus::Ok)
        } else {
            Err(Failure(CorrlabStatus::CheckFailed, "self-test failed".into()))
        }
    })
}
