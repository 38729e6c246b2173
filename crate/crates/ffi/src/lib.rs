//! C ABI for `wforge-core`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`WforgeStatus`]; results go through
//!   out-pointers. On failure a message is available from
//!   [`wforge_last_error_message`] on the same thread.
//! * Surfaces are opaque [`WforgeSurface`] handles from
//!   [`wforge_surface_new`], released with [`wforge_surface_free`].
//! * Reports are returned as NUL-terminated JSON strings owned by the caller
//!   and released with [`wforge_string_free`].
//! * Panics never cross the boundary; they become [`WforgeStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use wforge_core::calc::StencilOrder;
use wforge_core::cli::{self, Command, RunConfig};
use wforge_core::darboux::{darboux, Conjugation, DarbouxOptions};
use wforge_core::error::WforgeError;
use wforge_core::flat::{flatness, FlatnessOptions};
use wforge_core::immersion::{generate, SurfaceSpec};
use wforge_core::meancurv::{harmonicity_residual, willmore_energy, Analysis};
use wforge_core::sequence::willmore_sequence;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WforgeStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument is out of range or a string is not valid UTF-8.
    InvalidArgument = 2,
    /// Unknown surface name or invalid surface parameters.
    BadSpec = 3,
    /// The input fails a numerical precondition (conformality, Willmore,
    /// complex structure).
    Validation = 4,
    /// A pointwise solve failed: singular matrix, degenerate differential,
    /// point at infinity.
    Singular = 5,
    /// Parallel transport failed: blow-up, spanning, domain topology.
    Transport = 6,
    /// A Willmore sequence step could not be computed.
    Sequence = 7,
    /// Reading or writing files failed.
    Io = 8,
    /// Configuration text rejected.
    Config = 9,
    /// Any other failure.
    Other = 10,
    /// A panic was caught at the boundary.
    Panic = 11,
}

impl WforgeStatus {
    fn of(e: &WforgeError) -> Self {
        use WforgeError as E;
        match e {
            E::BadSpec(_) | E::GridTooSmall { .. } | E::LambdaZero | E::AminusOneSingular => {
                WforgeStatus::BadSpec
            }
            E::ConformalityTooPoor { .. }
            | E::NotWillmore { .. }
            | E::NotComplexStructure { .. } => WforgeStatus::Validation,
            E::SingularMatrix { .. }
            | E::DegenerateDifferential { .. }
            | E::PointAtInfinity { .. }
            | E::WSolveSingular { .. }
            | E::TSingular { .. } => WforgeStatus::Singular,
            E::NotSimplyConnected | E::BlowUp { .. } | E::SpanningFailed { .. } => {
                WforgeStatus::Transport
            }
            E::HopfFieldZero { .. }
            | E::RankAmbiguous { .. }
            | E::StepDegenerate { .. }
            | E::NotClosed { .. } => WforgeStatus::Sequence,
            E::Io(_) => WforgeStatus::Io,
        }
    }
}

/// A sampled surface with its conformal Gauss map and Hopf fields.
pub struct WforgeSurface {
    spec: SurfaceSpec,
    name: String,
    analysis: Analysis,
}

/// `Ŝ = T⁻¹ S T` (`WFORGE_CONJUGATION_T_INV_S_T`) or `Ŝ = T S T⁻¹`.
pub const WFORGE_CONJUGATION_T_INV_S_T: c_int = 0;
pub const WFORGE_CONJUGATION_T_S_T_INV: c_int = 1;

struct Failure {
    status: WforgeStatus,
    message: String,
}

impl From<WforgeError> for Failure {
    fn from(e: WforgeError) -> Self {
        Failure {
            status: WforgeStatus::of(&e),
            message: e.to_string(),
        }
    }
}

fn fail(status: WforgeStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records failures and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WforgeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WforgeStatus::Ok
        }
        Ok(Err(fl)) => {
            set_last_error(&fl.message);
            fl.status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            WforgeStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(WforgeStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            WforgeStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

unsafe fn surface_arg<'a>(p: *const WforgeSurface) -> Result<&'a WforgeSurface, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(WforgeStatus::NullPointer, "surface handle is NULL"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(WforgeStatus::NullPointer, "output pointer is NULL"));
    }
    out.write(v);
    Ok(())
}

fn json_string<T: serde::Serialize>(v: &T) -> Result<*mut c_char, Failure> {
    let s = serde_json::to_string(v).map_err(|e| fail(WforgeStatus::Other, e.to_string()))?;
    Ok(CString::new(s)
        .map_err(|e| fail(WforgeStatus::Other, e.to_string()))?
        .into_raw())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wforge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn wforge_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wforge_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Samples surface `name` (`clifford`, `clifford_patch`, `mercator`,
/// `revolution`, `catenoid`, `enneper`, `twistor`, `twistor_torus`) on an
/// `nx × ny` grid with eighth-order stencils and analyzes it.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wforge_surface_new(
    name: *const c_char,
    nx: usize,
    ny: usize,
    out: *mut *mut WforgeSurface,
) -> WforgeStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(WforgeStatus::NullPointer, "output pointer is NULL"));
        }
        out.write(ptr::null_mut());
        let name = str_arg(name, "name")?;
        let spec = SurfaceSpec::from_name(name)
            .ok_or_else(|| fail(WforgeStatus::BadSpec, format!("unknown surface `{name}`")))?;
        let f = generate(&spec, nx, ny, StencilOrder::default())?;
        let analysis = Analysis::new(f)?;
        let s = Box::new(WforgeSurface {
            spec,
            name: name.to_string(),
            analysis,
        });
        out.write(Box::into_raw(s));
        Ok(())
    })
}

/// Releases a surface. NULL is ignored.
///
/// # Safety
/// `s` must come from [`wforge_surface_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wforge_surface_free(s: *mut WforgeSurface) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Grid size of the surface.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wforge_surface_grid(
    s: *const WforgeSurface,
    nx: *mut usize,
    ny: *mut usize,
) -> WforgeStatus {
    guard(|| {
        let g = surface_arg(s)?.analysis.f.grid;
        write_out(nx, g.nx)?;
        write_out(ny, g.ny)
    })
}

/// Copies the vertices `f = w + xi + yj + zk` as `(w, x, y, z)` quadruples
/// in row-major order (`x` index fastest). `len` is the capacity of `out` in
/// doubles and must be at least `4 nx ny`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wforge_surface_vertices(
    s: *const WforgeSurface,
    out: *mut f64,
    len: usize,
) -> WforgeStatus {
    guard(|| {
        let data = &surface_arg(s)?.analysis.f.f.data;
        if out.is_null() {
            return Err(fail(WforgeStatus::NullPointer, "output pointer is NULL"));
        }
        if len < 4 * data.len() {
            return Err(fail(
                WforgeStatus::InvalidArgument,
                format!("buffer holds {len} doubles, need {}", 4 * data.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, 4 * data.len());
        for (chunk, q) in dst.chunks_exact_mut(4).zip(data) {
            chunk.copy_from_slice(&[q.w, q.x, q.y, q.z]);
        }
        Ok(())
    })
}

/// Willmore energy `2∫⟨A ∧ *A⟩`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wforge_willmore_energy(
    s: *const WforgeSurface,
    out: *mut f64,
) -> WforgeStatus {
    guard(|| write_out(out, willmore_energy(&surface_arg(s)?.analysis.hopf)))
}

/// Scale-free interior residual of `d*A = 0` (small iff Willmore).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wforge_harmonicity_residual(
    s: *const WforgeSurface,
    out: *mut f64,
) -> WforgeStatus {
    guard(|| write_out(out, harmonicity_residual(&surface_arg(s)?.analysis.hopf).a))
}

/// Analysis report as JSON.
///
/// # Safety
/// Pointers must be valid; free the result with [`wforge_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wforge_analysis_report_json(
    s: *const WforgeSurface,
    out: *mut *mut c_char,
) -> WforgeStatus {
    guard(|| {
        let s = surface_arg(s)?;
        let r = s.analysis.report(&s.name)?;
        write_out(out, json_string(&r)?)
    })
}

/// Curvature of `d^λ` for the `n_lambdas` parameters in `lambdas`
/// (interleaved `re, im`), plus the parallel frame (patches) or monodromy
/// (tori) of `d^μ`, as JSON.
///
/// # Safety
/// `lambdas` must point to `2 n_lambdas` doubles; free the result with
/// [`wforge_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wforge_flatness_report_json(
    s: *const WforgeSurface,
    lambdas: *const f64,
    n_lambdas: usize,
    mu_re: f64,
    mu_im: f64,
    out: *mut *mut c_char,
) -> WforgeStatus {
    guard(|| {
        let s = surface_arg(s)?;
        if lambdas.is_null() && n_lambdas > 0 {
            return Err(fail(WforgeStatus::NullPointer, "lambdas is NULL"));
        }
        let raw = if n_lambdas == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(lambdas, 2 * n_lambdas)
        };
        let opts = FlatnessOptions {
            lambdas: raw
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
            mu: Complex64::new(mu_re, mu_im),
            basepoint: None,
        };
        if opts
            .lambdas
            .iter()
            .chain([&opts.mu])
            .any(|z| z.norm() == 0.0 || !z.is_finite())
        {
            return Err(fail(
                WforgeStatus::InvalidArgument,
                "spectral parameters must be finite and nonzero",
            ));
        }
        let r = flatness(&s.analysis.s, &s.analysis.hopf, &opts)?;
        write_out(out, json_string(&r)?)
    })
}

/// μ-Darboux transform of a patch surface; `conjugation` is
/// [`WFORGE_CONJUGATION_T_INV_S_T`] or [`WFORGE_CONJUGATION_T_S_T_INV`].
///
/// # Safety
/// Pointers must be valid; free the result with [`wforge_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wforge_darboux_report_json(
    s: *const WforgeSurface,
    mu_re: f64,
    mu_im: f64,
    conjugation: c_int,
    out: *mut *mut c_char,
) -> WforgeStatus {
    guard(|| {
        let s = surface_arg(s)?;
        let mut opts = DarbouxOptions::new(Complex64::new(mu_re, mu_im));
        opts.conjugation = match conjugation {
            WFORGE_CONJUGATION_T_INV_S_T => Conjugation::TInvST,
            WFORGE_CONJUGATION_T_S_T_INV => Conjugation::TSTInv,
            c => {
                return Err(fail(
                    WforgeStatus::InvalidArgument,
                    format!("unknown conjugation {c}"),
                ))
            }
        };
        let run = darboux(&s.analysis, &opts)?;
        write_out(out, json_string(&run.report)?)
    })
}

/// Willmore sequence with up to `n_max` steps each way, as JSON.
///
/// # Safety
/// Pointers must be valid; free the result with [`wforge_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wforge_sequence_report_json(
    s: *const WforgeSurface,
    n_max: usize,
    out: *mut *mut c_char,
) -> WforgeStatus {
    guard(|| {
        let s = surface_arg(s)?;
        let r = willmore_sequence(&s.analysis, s.spec.genus(), n_max)?;
        write_out(out, json_string(&r)?)
    })
}

/// Runs the `wforge` pipeline: `command` is `analyze`, `flatness`,
/// `darboux`, `sequence` or `export`; `config` is config-file text. Writes
/// the artifacts into `output.dir`, stores the CLI exit code (0 passed, 2
/// validation failure) in `exit_code` and, if `report_json` is not NULL,
/// the report.
///
/// # Safety
/// Strings must be NUL-terminated; free the report with
/// [`wforge_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wforge_run(
    command: *const c_char,
    config: *const c_char,
    exit_code: *mut c_int,
    report_json: *mut *mut c_char,
) -> WforgeStatus {
    guard(|| {
        let name = str_arg(command, "command")?;
        let text = str_arg(config, "config")?;
        let cmd = <Command as clap::ValueEnum>::from_str(name, false).map_err(|_| {
            fail(
                WforgeStatus::InvalidArgument,
                format!("unknown command `{name}`"),
            )
        })?;
        let cfg = RunConfig::load(cmd, text, "<config>", &[])
            .map_err(|e| fail(WforgeStatus::Config, e.to_string()))?;
        let outcome = cli::run(&cfg).map_err(|e| match e.downcast_ref::<WforgeError>() {
            Some(w) => fail(WforgeStatus::of(w), format!("{e:#}")),
            None => fail(WforgeStatus::Io, format!("{e:#}")),
        })?;
        write_out(exit_code, c_int::from(outcome.exit_code()))?;
        if !report_json.is_null() {
            report_json.write(json_string(&outcome.report)?);
        }
        Ok(())
    })
}
