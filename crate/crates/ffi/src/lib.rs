//! C ABI over the freebound library.
//!
//! Objects cross the boundary as opaque handles created by `fb_*_new` and
//! released by the matching `fb_*_free`. Every fallible call returns an
//! [`FbStatus`]; the message of the most recent failure on the calling
//! thread is available through [`fb_last_error`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use freebound::config::RunConfig;
use freebound::geometry::MeridianDomain;
use freebound::pipeline::{cmd_analyze, cmd_domain, cmd_radial, cmd_solve, RunStatus};
use freebound::radial::barrier::{delta_max, BarrierParams};
use freebound::radial::shooting::{flat_hat, lambda_star, ShootOptions};
use freebound::radial::ProblemParams;
use freebound::verify::cmd_verify;
use freebound::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbStatus {
    FbOk = 0,
    /// Null pointer or non-UTF-8 string argument.
    FbNullArgument = 1,
    /// Parameters or input files rejected before any computation.
    FbInvalidInput = 2,
    /// A numerical method failed to converge or a check did not hold.
    FbNumericalFailure = 3,
    /// The run finished but some sweep steps or acceptance checks failed.
    FbPartial = 4,
    FbPanic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn from_error(e: Error) -> FbStatus {
    let code = if e.is_invalid_input() {
        FbStatus::FbInvalidInput
    } else {
        FbStatus::FbNumericalFailure
    };
    set_error(e.to_string());
    code
}

fn guard<F: FnOnce() -> Result<(), FbStatus>>(f: F) -> FbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FbStatus::FbOk,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside freebound".into());
            FbStatus::FbPanic
        }
    }
}

fn null(what: &str) -> FbStatus {
    set_error(format!("null argument: {what}"));
    FbStatus::FbNullArgument
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FbStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FbStatus::FbNullArgument
    })
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, FbStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, FbStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Problem parameters `(N, α, β, λ)`.
pub struct FbProblem(ProblemParams);

/// Barrier data for a fixed `λ₀`, `δ` and `l₀`.
pub struct FbBarrier(BarrierParams);

/// Axisymmetric meridian domain.
pub struct FbDomain(MeridianDomain);

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fb_problem_new(dim: u32, alpha: f64, beta: f64, lambda: f64, out: *mut *mut FbProblem) -> FbStatus {
    guard(|| {
        let o = out_ref(out, "out")?;
        let p = ProblemParams::new(dim as usize, alpha, beta, lambda).map_err(from_error)?;
        *o = Box::into_raw(Box::new(FbProblem(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`fb_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fb_problem_free(p: *mut FbProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Whether the exponents satisfy the admissibility inequality.
///
/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_problem_admissible(p: *const FbProblem, out: *mut bool) -> FbStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(p, "problem")?.0.admissible();
        Ok(())
    })
}

/// Free-boundary radius `R_λ` of the flat-hat radial solution.
///
/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_support_radius(p: *const FbProblem, radius: *mut f64, center_value: *mut f64) -> FbStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let (r, c) = (out_ref(radius, "radius")?, out_ref(center_value, "center_value")?);
        let fh = flat_hat(&p.0, &ShootOptions::default()).map_err(from_error)?;
        *r = fh.radius;
        *c = fh.center_value;
        Ok(())
    })
}

/// `λ*` for a ball of the given radius, by scaling from the flat hat at the
/// problem's `λ`.
///
/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_lambda_star(p: *const FbProblem, ball_radius: f64, out: *mut f64) -> FbStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let o = out_ref(out, "out")?;
        *o = lambda_star(&p.0, ball_radius, &ShootOptions::default()).map_err(from_error)?;
        Ok(())
    })
}

/// Barrier with `δ = delta_factor · s*(λ₀)`.
///
/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_barrier_new(
    p: *const FbProblem,
    lambda0: f64,
    delta_factor: f64,
    l0: f64,
    out: *mut *mut FbBarrier,
) -> FbStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let o = out_ref(out, "out")?;
        if !(delta_factor > 0.0 && delta_factor < 1.0) {
            return Err(from_error(Error::InvalidParameter(format!(
                "delta_factor must lie in (0, 1), got {delta_factor}"
            ))));
        }
        let delta = delta_factor * delta_max(p.0.alpha, p.0.beta, lambda0);
        let b = BarrierParams::new(&p.0, lambda0, delta, l0).map_err(from_error)?;
        *o = Box::into_raw(Box::new(FbBarrier(b)));
        Ok(())
    })
}

/// # Safety
/// `b` must be null or a handle from [`fb_barrier_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fb_barrier_free(b: *mut FbBarrier) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Writes `δ`, `C` and `l₁`; any output may be null.
///
/// # Safety
/// `b` must be a valid handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fb_barrier_constants(b: *const FbBarrier, delta: *mut f64, edge_constant: *mut f64, l1: *mut f64) -> FbStatus {
    guard(|| {
        let b = &handle(b, "barrier")?.0;
        for (p, v) in [(delta, b.delta), (edge_constant, b.edge_constant), (l1, b.l1)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// The barrier profile `w(r)`, zero for `r ≥ C`.
///
/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_barrier_w(b: *const FbBarrier, r: f64, out: *mut f64) -> FbStatus {
    guard(|| {
        let b = handle(b, "barrier")?;
        *out_ref(out, "out")? = b.0.w(r).map_err(from_error)?;
        Ok(())
    })
}

/// The shifted barrier `v = w(|x| - l₀)` at `|x| ≥ l₀`.
///
/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_barrier_v(b: *const FbBarrier, x_radius: f64, out: *mut f64) -> FbStatus {
    guard(|| {
        let b = handle(b, "barrier")?;
        *out_ref(out, "out")? = b.0.supersolution_v(x_radius).map_err(from_error)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fb_domain_ball(radius: f64, out: *mut *mut FbDomain) -> FbStatus {
    guard(|| {
        let o = out_ref(out, "out")?;
        *o = Box::into_raw(Box::new(FbDomain(MeridianDomain::ball(radius).map_err(from_error)?)));
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fb_domain_dumbbell(r_cyl: f64, l_total: f64, fillet_length: f64, out: *mut *mut FbDomain) -> FbStatus {
    guard(|| {
        let o = out_ref(out, "out")?;
        let d = MeridianDomain::dumbbell(r_cyl, l_total, fillet_length).map_err(from_error)?;
        *o = Box::into_raw(Box::new(FbDomain(d)));
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle from `fb_domain_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fb_domain_free(d: *mut FbDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_domain_contains(d: *const FbDomain, rho: f64, z: f64, out: *mut bool) -> FbStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(d, "domain")?.0.contains(rho, z);
        Ok(())
    })
}

/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_domain_total_length(d: *const FbDomain, out: *mut f64) -> FbStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(d, "domain")?.0.total_length();
        Ok(())
    })
}

/// Inradius by a distance transform on a grid of spacing `grid_h`.
///
/// # Safety
/// Handle and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fb_domain_inradius(d: *const FbDomain, grid_h: f64, out: *mut f64) -> FbStatus {
    guard(|| {
        let d = handle(d, "domain")?;
        if !(grid_h > 0.0 && grid_h.is_finite()) {
            return Err(from_error(Error::InvalidParameter(format!("grid_h must be positive, got {grid_h}"))));
        }
        *out_ref(out, "out")? = d.0.inradius(grid_h);
        Ok(())
    })
}

/// Runs one pipeline command (`radial`, `domain`, `solve`, `analyze` or
/// `verify`) into `out_dir`. `config_path` may be null for the defaults.
///
/// # Safety
/// String arguments must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fb_run_command(command: *const c_char, config_path: *const c_char, out_dir: *const c_char) -> FbStatus {
    guard(|| {
        let cmd = str_arg(command, "command")?;
        let out_dir = Path::new(str_arg(out_dir, "out_dir")?);
        let cfg = if config_path.is_null() {
            RunConfig::default()
        } else {
            RunConfig::load(Path::new(str_arg(config_path, "config_path")?)).map_err(from_error)?
        };
        let status = match cmd {
            "radial" => cmd_radial(&cfg, out_dir),
            "domain" => cmd_domain(&cfg, out_dir),
            "solve" => cmd_solve(&cfg, out_dir),
            "analyze" => cmd_analyze(&cfg, out_dir),
            "verify" => cmd_verify(&cfg, out_dir).map(|(s, _)| s),
            other => Err(Error::InvalidParameter(format!("unknown command {other:?}"))),
        }
        .map_err(from_error)?;
        match status {
            RunStatus::Success => Ok(()),
            RunStatus::Partial => {
                set_error("run finished with failures".into());
                Err(FbStatus::FbPartial)
            }
            RunStatus::Failure => {
                set_error("run produced no usable result".into());
                Err(FbStatus::FbNumericalFailure)
            }
        }
    })
}
