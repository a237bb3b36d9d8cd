//! C ABI for the injectivity-capacity library.
//!
//! Conventions: every entry point returns a status code (`RELU_INJECT_OK` on
//! success); results and solver configurations are opaque handles created and
//! destroyed through paired `_new`/`_free` calls; the last error message is
//! kept per thread and read back with `relu_inject_last_error_message`. All
//! panics are caught at the boundary and reported as `RELU_INJECT_ERR_PANIC`.
//!
//! The matching C header lives at `include/relu_inject.h`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use relu_inject::rdt_objective::{
    phi0, InjectivityMode, Method, NetworkProfile, SaddleVariables,
};
use relu_inject::saddle_solver::{capacity_root, CapacityResult, SolverConfig};
use relu_inject::special_math::QuadratureGrid;
use relu_inject::Error;

/// Status codes returned by every entry point. Kept in sync with the enum in
/// `include/relu_inject.h`.
pub const RELU_INJECT_OK: c_int = 0;
pub const RELU_INJECT_ERR_INVALID_ARGUMENT: c_int = 1;
pub const RELU_INJECT_ERR_DOMAIN: c_int = 2;
pub const RELU_INJECT_ERR_NO_SIGN_CHANGE: c_int = 3;
pub const RELU_INJECT_ERR_NON_CONVERGENCE: c_int = 4;
pub const RELU_INJECT_ERR_NULL_POINTER: c_int = 5;
pub const RELU_INJECT_ERR_PANIC: c_int = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> c_int {
    match err {
        Error::NoSignChange { .. } => RELU_INJECT_ERR_NO_SIGN_CHANGE,
        Error::NonConvergence { .. } => RELU_INJECT_ERR_NON_CONVERGENCE,
        Error::DomainViolation(_) => RELU_INJECT_ERR_DOMAIN,
        _ => RELU_INJECT_ERR_INVALID_ARGUMENT,
    }
}

fn fail(err: &Error) -> c_int {
    set_error(&err.to_string());
    status_of(err)
}

fn null_pointer(what: &str) -> c_int {
    set_error(&format!("{what} must not be null"));
    RELU_INJECT_ERR_NULL_POINTER
}

/// Runs `f` with panics converted to `RELU_INJECT_ERR_PANIC`.
fn guarded(f: impl FnOnce() -> c_int) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic at the FFI boundary");
            RELU_INJECT_ERR_PANIC
        }
    }
}

fn mode_from(mode: c_int) -> Result<InjectivityMode, Error> {
    match mode {
        0 => Ok(InjectivityMode::Weak),
        1 => Ok(InjectivityMode::Strong),
        _ => Err(Error::InvalidArgument(format!(
            "mode must be 0 (weak) or 1 (strong), got {mode}"
        ))),
    }
}

fn method_from(method: c_int) -> Result<Method, Error> {
    match method {
        0 => Ok(Method::Plain),
        1 => Ok(Method::Lifted),
        _ => Err(Error::InvalidArgument(format!(
            "method must be 0 (plain) or 1 (lifted), got {method}"
        ))),
    }
}

/// Opaque solver-configuration handle.
pub struct ReluInjectSolver {
    config: SolverConfig,
}

/// Opaque capacity-result handle.
pub struct ReluInjectResult {
    inner: CapacityResult,
}

/// Returns the message of the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn relu_inject_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a solver handle with default tolerances and budgets. Never fails.
#[no_mangle]
pub extern "C" fn relu_inject_solver_new() -> *mut ReluInjectSolver {
    Box::into_raw(Box::new(ReluInjectSolver {
        config: SolverConfig::default(),
    }))
}

/// Destroys a solver handle; a null pointer is a no-op.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_solver_free(solver: *mut ReluInjectSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Sets the residual tolerance on |phi0| and the per-block stationarity /
/// relative bracket tolerance.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_solver_set_tolerances(
    solver: *mut ReluInjectSolver,
    objective_tol: f64,
    var_tol: f64,
) -> c_int {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            return null_pointer("solver");
        };
        let candidate = SolverConfig {
            objective_tol,
            var_tol,
            ..solver.config.clone()
        };
        match candidate.validate() {
            Ok(()) => {
                solver.config = candidate;
                RELU_INJECT_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Sets the evaluation budget, the number of jittered multistarts, and the
/// seed driving them.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_solver_set_budget(
    solver: *mut ReluInjectSolver,
    max_iters: usize,
    multistarts: usize,
    rng_seed: u64,
) -> c_int {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            return null_pointer("solver");
        };
        let candidate = SolverConfig {
            max_iters,
            multistarts,
            rng_seed,
            ..solver.config.clone()
        };
        match candidate.validate() {
            Ok(()) => {
                solver.config = candidate;
                RELU_INJECT_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Locates the capacity bound alpha_l for the admissible prefix
/// `prefix[0..prefix_len]`. `mode` is 0 (weak) or 1 (strong); `method` is 0
/// (plain) or 1 (lifted). On success writes a result handle to `out`, which
/// the caller must release with `relu_inject_result_free`.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_capacity(
    solver: *const ReluInjectSolver,
    prefix: *const f64,
    prefix_len: usize,
    mode: c_int,
    method: c_int,
    out: *mut *mut ReluInjectResult,
) -> c_int {
    guarded(|| {
        let Some(solver) = solver.as_ref() else {
            return null_pointer("solver");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        if prefix.is_null() || prefix_len == 0 {
            return null_pointer("prefix (with prefix_len >= 1)");
        }
        let prefix = std::slice::from_raw_parts(prefix, prefix_len);
        let (mode, method) = match (mode_from(mode), method_from(method)) {
            (Ok(m), Ok(me)) => (m, me),
            (Err(e), _) | (_, Err(e)) => return fail(&e),
        };
        match capacity_root(prefix, mode, method, &solver.config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ReluInjectResult { inner }));
                RELU_INJECT_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Destroys a result handle; a null pointer is a no-op.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_result_free(result: *mut ReluInjectResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// The located capacity bound alpha_l. NaN on a null handle.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_result_alpha_bound(
    result: *const ReluInjectResult,
) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.alpha_bound)
}

/// The relative expansion zeta_l = alpha_l / alpha_{l-1}. NaN on null.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_result_relative_expansion(
    result: *const ReluInjectResult,
) -> f64 {
    result
        .as_ref()
        .map_or(f64::NAN, |r| r.inner.relative_expansion)
}

/// |phi0| at the reported bound. NaN on null.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_result_residual(result: *const ReluInjectResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.residual)
}

/// 1 if all tolerance targets were met within budget, else 0; -1 on null.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_result_converged(
    result: *const ReluInjectResult,
) -> c_int {
    result
        .as_ref()
        .map_or(-1, |r| c_int::from(r.inner.converged))
}

/// Number of layers l of the solved program (prefix length + 1); 0 on null.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_result_layers(result: *const ReluInjectResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.alphas.len())
}

/// Copies the full expansion sequence alpha_1..alpha_l into `out`, which must
/// hold at least `relu_inject_result_layers` doubles.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_result_alphas(
    result: *const ReluInjectResult,
    out: *mut f64,
    out_len: usize,
) -> c_int {
    guarded(|| {
        let Some(r) = result.as_ref() else {
            return null_pointer("result");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        if out_len < r.inner.alphas.len() {
            set_error(&format!(
                "output buffer holds {out_len} doubles, need {}",
                r.inner.alphas.len()
            ));
            return RELU_INJECT_ERR_INVALID_ARGUMENT;
        }
        std::ptr::copy_nonoverlapping(r.inner.alphas.as_ptr(), out, r.inner.alphas.len());
        RELU_INJECT_OK
    })
}

/// Evaluates the objective phi0 at user-supplied saddle variables.
///
/// `alphas` has length `layers`; `r` and `gamma` have length `layers - 1`;
/// `gamma_bar` has length `layers`. For the plain method pass `c3 = 0`; for
/// the lifted method `c3` must be positive. Writes the objective value to
/// `out_total`.
#[no_mangle]
pub unsafe extern "C" fn relu_inject_phi0(
    alphas: *const f64,
    layers: usize,
    mode: c_int,
    method: c_int,
    r: *const f64,
    gamma_bar: *const f64,
    gamma: *const f64,
    nu: f64,
    c3: f64,
    out_total: *mut f64,
) -> c_int {
    guarded(|| {
        if out_total.is_null() {
            return null_pointer("out_total");
        }
        if alphas.is_null() || layers == 0 {
            return null_pointer("alphas (with layers >= 1)");
        }
        if gamma_bar.is_null() {
            return null_pointer("gamma_bar");
        }
        if layers > 1 && (r.is_null() || gamma.is_null()) {
            return null_pointer("r and gamma (for layers >= 2)");
        }
        let (mode, method) = match (mode_from(mode), method_from(method)) {
            (Ok(m), Ok(me)) => (m, me),
            (Err(e), _) | (_, Err(e)) => return fail(&e),
        };
        let alphas = std::slice::from_raw_parts(alphas, layers).to_vec();
        let vars = SaddleVariables {
            r: if layers > 1 {
                std::slice::from_raw_parts(r, layers - 1).to_vec()
            } else {
                Vec::new()
            },
            gamma_bar: std::slice::from_raw_parts(gamma_bar, layers).to_vec(),
            gamma: if layers > 1 {
                std::slice::from_raw_parts(gamma, layers - 1).to_vec()
            } else {
                Vec::new()
            },
            nu,
            c3: match method {
                Method::Plain => None,
                Method::Lifted => Some(c3),
            },
        };
        let profile = match NetworkProfile::new(alphas, mode) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        let grid = QuadratureGrid::standard();
        match phi0(&profile, method, &vars, &grid) {
            Ok(b) => {
                *out_total = b.total;
                RELU_INJECT_OK
            }
            Err(e) => fail(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(relu_inject_last_error_message())
                .to_string_lossy()
                .into_owned()
        }
    }

    #[test]
    fn phi0_reference_point_is_near_zero() {
        let alphas = [6.7004, 8.267];
        let r = [1.7697];
        let gamma_bar = [0.8935, 0.9642];
        let gamma = [0.3078];
        let mut total = f64::NAN;
        let status = unsafe {
            relu_inject_phi0(
                alphas.as_ptr(),
                2,
                0,
                0,
                r.as_ptr(),
                gamma_bar.as_ptr(),
                gamma.as_ptr(),
                0.5560,
                0.0,
                &mut total,
            )
        };
        assert_eq!(status, RELU_INJECT_OK, "error: {}", last_error());
        assert!(total.abs() < 5e-3, "phi0 at the reference saddle: {total}");
    }

    #[test]
    fn phi0_rejects_null_and_bad_enums() {
        let alphas = [6.7004, 8.267];
        let mut total = 0.0;
        let status = unsafe {
            relu_inject_phi0(
                std::ptr::null(),
                2,
                0,
                0,
                std::ptr::null(),
                std::ptr::null(),
                std::ptr::null(),
                0.5,
                0.0,
                &mut total,
            )
        };
        assert_eq!(status, RELU_INJECT_ERR_NULL_POINTER);
        assert!(last_error().contains("alphas"));

        let r = [1.7697];
        let gamma_bar = [0.8935, 0.9642];
        let gamma = [0.3078];
        let status = unsafe {
            relu_inject_phi0(
                alphas.as_ptr(),
                2,
                7,
                0,
                r.as_ptr(),
                gamma_bar.as_ptr(),
                gamma.as_ptr(),
                0.5,
                0.0,
                &mut total,
            )
        };
        assert_eq!(status, RELU_INJECT_ERR_INVALID_ARGUMENT);
        assert!(last_error().contains("mode"));
    }

    #[test]
    fn phi0_domain_violation_maps_to_domain_status() {
        // lifted moment diverges when c3 * gamma_bar / (1 + 4 g gb) >= 1/2
        let alphas = [6.7004, 8.267];
        let r = [1.7697];
        let gamma_bar = [0.8935, 0.9642];
        let gamma = [0.0];
        let mut total = 0.0;
        let status = unsafe {
            relu_inject_phi0(
                alphas.as_ptr(),
                2,
                0,
                1,
                r.as_ptr(),
                gamma_bar.as_ptr(),
                gamma.as_ptr(),
                0.5,
                5.0,
                &mut total,
            )
        };
        assert_eq!(status, RELU_INJECT_ERR_DOMAIN, "error: {}", last_error());
    }

    #[test]
    fn capacity_end_to_end_through_handles() {
        unsafe {
            let solver = relu_inject_solver_new();
            assert!(!solver.is_null());
            // loose-but-real tolerances keep this test fast
            assert_eq!(
                relu_inject_solver_set_tolerances(solver, 1e-4, 1e-4),
                RELU_INJECT_OK
            );
            assert_eq!(
                relu_inject_solver_set_budget(solver, 4000, 2, 0),
                RELU_INJECT_OK
            );

            let prefix = [6.7004];
            let mut result: *mut ReluInjectResult = std::ptr::null_mut();
            let status =
                relu_inject_capacity(solver, prefix.as_ptr(), 1, 0, 0, &mut result);
            assert_eq!(status, RELU_INJECT_OK, "error: {}", last_error());
            assert!(!result.is_null());

            let bound = relu_inject_result_alpha_bound(result);
            assert!(
                (bound - 8.267).abs() / 8.267 < 0.01,
                "capacity through FFI: {bound}"
            );
            assert_eq!(relu_inject_result_converged(result), 1);
            assert!(relu_inject_result_residual(result) >= 0.0);
            assert_eq!(relu_inject_result_layers(result), 2);
            let mut alphas = [0.0; 2];
            assert_eq!(
                relu_inject_result_alphas(result, alphas.as_mut_ptr(), 2),
                RELU_INJECT_OK
            );
            assert_eq!(alphas[0], 6.7004);
            assert_eq!(alphas[1], bound);
            let zeta = relu_inject_result_relative_expansion(result);
            assert!((zeta - bound / 6.7004).abs() < 1e-12);

            // undersized output buffer is a named error, not UB
            let mut one = [0.0; 1];
            assert_eq!(
                relu_inject_result_alphas(result, one.as_mut_ptr(), 1),
                RELU_INJECT_ERR_INVALID_ARGUMENT
            );

            relu_inject_result_free(result);
            relu_inject_solver_free(solver);
        }
    }

    #[test]
    fn invalid_tolerances_are_rejected_and_leave_config_intact() {
        unsafe {
            let solver = relu_inject_solver_new();
            assert_eq!(
                relu_inject_solver_set_tolerances(solver, -1.0, 1e-6),
                RELU_INJECT_ERR_INVALID_ARGUMENT
            );
            assert!(last_error().contains("tolerance"));
            // handle still usable afterwards
            assert_eq!(
                relu_inject_solver_set_tolerances(solver, 1e-6, 1e-5),
                RELU_INJECT_OK
            );
            relu_inject_solver_free(solver);
        }
    }

    #[test]
    fn null_frees_are_no_ops() {
        unsafe {
            relu_inject_solver_free(std::ptr::null_mut());
            relu_inject_result_free(std::ptr::null_mut());
        }
        assert!(unsafe { relu_inject_result_alpha_bound(std::ptr::null()) }.is_nan());
        assert_eq!(unsafe { relu_inject_result_converged(std::ptr::null()) }, -1);
    }
}
