//! Upper bounds on the injectivity capacity of deep ReLU networks.
//!
//! The library evaluates and saddle-point-optimizes the plain and partially
//! lifted random duality theory (RDT) functionals whose zero crossings in the
//! last-layer expansion coefficient bound the injectivity capacity of a deep
//! ReLU network with iid Gaussian weights. A finite-size Monte Carlo lab
//! cross-checks the underlying l0 spherical perceptron feasibility problem.
//!
//! Module layout:
//! - [`special_math`]: erf/erfc and Gaussian quadrature grids,
//! - [`rdt_kernels`]: closed-form scalar kernels f_q1, f_q2 and their lifted
//!   (exponential-moment) counterparts,
//! - [`rdt_objective`]: assembly of the l-layer objectives phi0 / phi0-lifted,
//! - [`saddle_solver`]: nested min-max solving, capacity root finding, and
//!   minimally admissible sequences,
//! - [`mc_lab`]: finite-n sampled networks and smoothed-l0 feasibility search.

pub mod mc_lab;
pub mod rdt_kernels;
pub mod rdt_objective;
pub mod saddle_solver;
pub mod special_math;

mod nelder_mead;

use std::sync::Once;

/// Environment variable capping the number of worker threads used by the
/// solver multistarts and the Monte Carlo lab.
pub const WORKERS_ENV: &str = "RELU_INJECT_WORKERS";

/// Errors produced by grid construction, kernel evaluation, objective
/// assembly, and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Quadrature grid rejected: too few nodes for the accuracy contract.
    #[error("quadrature grid too coarse: {n_nodes} nodes per half-line (minimum 8)")]
    GridTooCoarse { n_nodes: usize },
    /// Quadrature grid rejected: truncation cutoff outside the supported range.
    #[error("quadrature cutoff {cutoff} outside supported range [6, 12]")]
    CutoffOutOfRange { cutoff: f64 },
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A kernel was evaluated outside its analytic domain.
    #[error("kernel domain violation: {0}")]
    DomainViolation(String),
    /// Vector lengths inconsistent with the layer count.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// The capacity bracket showed no sign change even after expansion.
    #[error("no sign change in capacity bracket [{lo}, {hi}]: phi0 = {flo:.6e} and {fhi:.6e}")]
    NoSignChange { lo: f64, hi: f64, flo: f64, fhi: f64 },
    /// The saddle solver hit its iteration budget without meeting tolerances.
    #[error("solver did not converge within {max_iters} iterations (best |phi0| residual {residual:.3e})")]
    NonConvergence { max_iters: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

static WORKER_INIT: Once = Once::new();

/// Installs a global rayon thread pool sized from [`WORKERS_ENV`] when the
/// variable is set. Call once at process start; later calls are no-ops, as is
/// the whole function when the variable is absent or unparsable.
pub fn configure_workers_from_env() {
    WORKER_INIT.call_once(|| {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    // Ignore failure: a pool may already exist (e.g. in tests).
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}
