//! Nested min-max solving of the RDT functionals, capacity root finding, and
//! minimally admissible sequence construction.
//!
//! The saddle structure is min over (r, gamma_bar) of max over (nu, gamma),
//! with an outermost max over the lifting temperature c3 for the lifted
//! method. The outer minimization runs Nelder-Mead in log coordinates; every
//! outer evaluation solves the inner maximization to convergence, which is
//! separable: each gamma_i appears in exactly one layer term and nu only in
//! the last-layer term, so the inner block reduces to independent
//! one-dimensional concave maximizations.

use crate::nelder_mead::{minimize, NmOptions};
use crate::rdt_kernels::{fq1_lifted_raw, fq1_plain, fq2_lifted_t, fq2_plain_nu1, gamma_sph_hat};
use crate::rdt_objective::{
    phi0, InjectivityMode, Method, NetworkProfile, ObjectiveBreakdown, SaddleVariables,
};
use crate::special_math::QuadratureGrid;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Tolerances, budgets, and seeding for the saddle solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Acceptance residual on |phi0| at a capacity root.
    pub objective_tol: f64,
    /// Stationarity tolerance per variable block (log coordinates for the
    /// outer block) and relative bisection width on alpha_l.
    pub var_tol: f64,
    /// Objective-evaluation budget per outer Nelder-Mead run.
    pub max_iters: usize,
    /// Independent jittered restarts for cold saddle solves.
    pub multistarts: usize,
    pub rng_seed: u64,
    /// Initial capacity bracket is [base, alpha_bracket_factor * base].
    pub alpha_bracket_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            objective_tol: 1e-7,
            var_tol: 1e-6,
            max_iters: 4000,
            multistarts: 8,
            rng_seed: 0,
            alpha_bracket_factor: 5.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.objective_tol > 0.0 && self.var_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "solver tolerances must be positive".into(),
            ));
        }
        if self.multistarts < 1 || self.max_iters < 1 {
            return Err(Error::InvalidArgument(
                "multistarts and max_iters must be at least 1".into(),
            ));
        }
        if !(self.alpha_bracket_factor > 1.0) {
            return Err(Error::InvalidArgument(
                "alpha_bracket_factor must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

/// A solved saddle point: variables, objective breakdown at those variables,
/// and whether all tolerance targets were met within budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub vars: SaddleVariables,
    pub breakdown: ObjectiveBreakdown,
    pub converged: bool,
}

/// A capacity bound: the zero crossing of the saddle value in alpha_l.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Full expansion sequence: the admissible prefix plus the bound.
    pub alphas: Vec<f64>,
    /// The located capacity bound alpha_l.
    pub alpha_bound: f64,
    /// Saddle variables at the reported bound; absent for the supplied
    /// first-layer constant in a sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vars_at_opt: Option<SaddleVariables>,
    /// |phi0| at the reported point.
    pub residual: f64,
    pub mode: InjectivityMode,
    pub method: Method,
    /// zeta_l = alpha_bound / alpha_{l-1}, or alpha_bound itself when l = 1.
    pub relative_expansion: f64,
    pub converged: bool,
}

/// Warm-start state threaded across bisection probes, c3 evaluations, and
/// layers.
#[derive(Debug, Clone)]
struct Start {
    r: Vec<f64>,
    gamma_bar: Vec<f64>,
    gamma: Vec<f64>,
    nu: f64,
    c3: Option<f64>,
}

fn default_start(l: usize, mode: InjectivityMode) -> Start {
    Start {
        r: (0..l.saturating_sub(1))
            .map(|i| 1.77 * 2f64.powi(i as i32))
            .collect(),
        gamma_bar: vec![0.9; l],
        gamma: vec![0.3; l.saturating_sub(1)],
        nu: match mode {
            InjectivityMode::Weak => 0.55,
            InjectivityMode::Strong => 0.4,
        },
        c3: None,
    }
}

/// Golden-section maximization of a concave-ish scalar function on
/// [lo, +inf), with bracket expansion from `x0`. NaN values are treated as
/// -infinity.
fn maximize_1d(f: impl Fn(f64) -> f64, x0: f64, lo: f64, init_step: f64, xtol: f64) -> (f64, f64) {
    // best point ever evaluated; the bracket logic can end on a worse point
    // when the function is far from unimodal, and the caller must never
    // receive less than the best value seen
    let best = std::cell::Cell::new((f64::NAN, f64::NEG_INFINITY));
    let g = |x: f64| {
        let v = f(x);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if v > best.get().1 {
            best.set((x, v));
        }
        v
    };
    let margin = 1e-9 * (1.0 + lo.abs());
    let lo = if lo.is_finite() { lo + margin } else { lo };
    let clamp = |x: f64| x.max(lo);
    let mut b = clamp(x0);
    let mut a = clamp(b - init_step);
    let mut c = b + init_step;
    if a >= b {
        b = a + init_step;
        c = b + init_step;
    }
    let (mut fa, mut fb, mut fc) = (g(a), g(b), g(c));
    // expansion on an -infinity plateau cannot make progress; the
    // is_finite guards cut those walks short
    let mut k = 0;
    while fc >= fb && fc.is_finite() && k < 80 {
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + (b - a) * 2.0;
        fc = g(c);
        k += 1;
    }
    k = 0;
    while fa >= fb && fa.is_finite() && a > lo && k < 80 {
        c = b;
        b = a;
        fb = fa;
        a = clamp(b - (c - b) * 2.0);
        fa = g(a);
        k += 1;
    }
    if !fa.is_finite() && !fb.is_finite() && !fc.is_finite() {
        return best.get();
    }
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = c - (c - a) * INVPHI;
    let mut x2 = a + (c - a) * INVPHI;
    let (mut f1, mut f2) = (g(x1), g(x2));
    let mut it = 0;
    while (c - a) > xtol && it < 200 {
        if !f1.is_finite() && !f2.is_finite() {
            break;
        }
        if f1 >= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - (c - a) * INVPHI;
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + (c - a) * INVPHI;
            f2 = g(x2);
        }
        it += 1;
    }
    let xm = 0.5 * (a + c);
    g(xm);
    best.get()
}

/// One fixed-profile nested min-max problem (c3 fixed when lifted).
struct Nested<'a> {
    alphas: &'a [f64],
    kappa: f64,
    c3: Option<f64>,
    grid: &'a QuadratureGrid,
}

impl Nested<'_> {
    fn l(&self) -> usize {
        self.alphas.len()
    }

    /// Lower bound on gamma_i keeping both the plain h-integral and the
    /// lifted exponential moment finite.
    fn gamma_lower_bound(&self, rr_prev: f64, gb: f64) -> f64 {
        let plain = -1.0 / (4.0 * gb);
        match self.c3 {
            None => plain,
            Some(c3) => plain.max((2.0 * c3 * rr_prev * gb - 1.0) / (4.0 * gb)),
        }
    }

    fn layer_term(&self, i: usize, rr: &[f64], gb: f64, gamma: f64) -> f64 {
        let (rp, rn) = (rr[i], rr[i + 1]);
        match self.c3 {
            None => match fq1_plain(gb, gamma, self.grid) {
                Ok(f1) => rp * (gb + self.alphas[i] * f1 - gamma * rn * rn / (rp * rp)),
                Err(_) => f64::NEG_INFINITY,
            },
            Some(c3) => match fq1_lifted_raw(c3 * rp, gb, gamma, self.grid) {
                Ok(f1) if f1 > 0.0 => {
                    c3 * rp * rp / 2.0 + gb * rp - self.alphas[i] / c3 * f1.ln()
                        - gamma * rn * rn / rp
                }
                _ => f64::NEG_INFINITY,
            },
        }
    }

    fn last_term(&self, r_last: f64, gb_l: f64, nu: f64) -> f64 {
        let alpha_l = self.alphas[self.l() - 1];
        let nu1 = 4.0 * gb_l * nu / (r_last * r_last);
        let nu_term = -nu * (self.kappa - alpha_l);
        match self.c3 {
            None => {
                gb_l + alpha_l * r_last * r_last * fq2_plain_nu1(nu1) / (4.0 * gb_l) + nu_term
            }
            Some(c3) => {
                let f2 = fq2_lifted_t(c3 * r_last * r_last / (4.0 * gb_l), nu1);
                c3 * r_last * r_last / 2.0 + gb_l - alpha_l / c3 * f2.ln() + nu_term
            }
        }
    }

    fn constant_term(&self) -> f64 {
        match self.c3 {
            None => -1.0,
            Some(c3) => {
                let gs = gamma_sph_hat(c3);
                -gs + (1.0 - c3 / (2.0 * gs)).ln() / (2.0 * c3)
            }
        }
    }

    /// Inner maximization over (nu, gamma) at fixed (r, gamma_bar), warm
    /// started from and updating `gamma`/`nu` in place.
    fn inner_max(&self, rr: &[f64], gb: &[f64], gamma: &mut [f64], nu: &mut f64) -> f64 {
        let l = self.l();
        let mut total = 0.0;
        for i in 0..l - 1 {
            let lo = self.gamma_lower_bound(rr[i], gb[i]);
            let (mut g_opt, mut v) = maximize_1d(
                |g| self.layer_term(i, rr, gb[i], g),
                gamma[i],
                lo,
                0.05,
                1e-7 * (1.0 + gamma[i].abs()),
            );
            // at degenerate outer points the landscape in gamma varies on a
            // scale far below the search resolution; gamma = 0 is a cheap
            // anchor the reported supremum must never fall below
            if lo < 0.0 {
                let v0 = self.layer_term(i, rr, gb[i], 0.0);
                if v0 > v {
                    g_opt = 0.0;
                    v = v0;
                }
            }
            gamma[i] = g_opt;
            total += v;
        }
        let r_last = rr[l - 1];
        let (mut nu_opt, mut v) = maximize_1d(
            |n| self.last_term(r_last, gb[l - 1], n),
            *nu,
            0.0,
            0.05 * (1.0 + *nu),
            1e-7 * (1.0 + *nu),
        );
        let v0 = self.last_term(r_last, gb[l - 1], 0.0);
        if v0 > v {
            nu_opt = 0.0;
            v = v0;
        }
        *nu = nu_opt;
        total + v + self.constant_term()
    }

    /// Full nested solve: outer Nelder-Mead over (log r, log gamma_bar).
    fn solve(&self, start: &Start, init_step: f64, config: &SolverConfig) -> (f64, Start, bool) {
        let l = self.l();
        let dim = 2 * l - 1;
        let mut p0 = Vec::with_capacity(dim);
        p0.extend(start.r.iter().map(|v| v.ln()));
        p0.extend(start.gamma_bar.iter().map(|v| v.ln()));

        let mut gamma = start.gamma.clone();
        let mut nu = start.nu;
        // best finite evaluation seen, with the inner state that produced
        // it; the warm (gamma, nu) chain can be dragged through degenerate
        // regions during exploration, so re-evaluating at the end is not
        // reliable
        let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64)> = None;
        let p_ref = p0.clone();
        let mut objective = |p: &[f64]| -> f64 {
            // the saddle is a local min-max: far from any reasonable start
            // the functional is unbounded below (degenerate branches with
            // vanishing or exploding radii), so the outer search is confined
            // to a generous trust region around its start in log coordinates
            if p
                .iter()
                .zip(&p_ref)
                .any(|(v, v0)| v.abs() > 20.0 || (v - v0).abs() > 3.0)
            {
                return f64::INFINITY;
            }
            let mut rr = Vec::with_capacity(l);
            rr.push(1.0);
            rr.extend(p[..l - 1].iter().map(|v| v.exp()));
            let gb: Vec<f64> = p[l - 1..].iter().map(|v| v.exp()).collect();
            let v = self.inner_max(&rr, &gb, &mut gamma, &mut nu);
            // the true inner supremum is never hugely negative (the last
            // layer term is nonnegative at nu = 0), so such values signal a
            // failed inner search; never let the outer minimizer chase them
            if !v.is_finite() || v < -1e8 {
                return f64::INFINITY;
            }
            if best.as_ref().map_or(true, |(bv, ..)| v < *bv) {
                best = Some((v, p.to_vec(), gamma.clone(), nu));
            }
            v
        };

        let res = minimize(
            &mut objective,
            &p0,
            &NmOptions {
                init_step,
                xtol: config.var_tol,
                ftol: config.objective_tol * 1e-2,
                max_evals: config.max_iters,
            },
        );

        let (value, p, gamma, nu) = match best {
            Some(b) => b,
            None => (f64::INFINITY, p0, start.gamma.clone(), start.nu),
        };
        let out = Start {
            r: p[..l - 1].iter().map(|v| v.exp()).collect(),
            gamma_bar: p[l - 1..].iter().map(|v| v.exp()).collect(),
            gamma,
            nu,
            c3: self.c3,
        };
        (value, out, res.converged && value.is_finite())
    }
}

/// Shared solving engine: knows the profile prefix, mode, method, and grid,
/// and solves the saddle at any last-layer alpha with optional warm start.
struct Engine<'a> {
    prefix: &'a [f64],
    mode: InjectivityMode,
    method: Method,
    config: &'a SolverConfig,
    grid: QuadratureGrid,
}

impl Engine<'_> {
    fn jittered(&self, base: &Start, k: u64) -> Start {
        if k == 0 {
            return base.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        rng.set_stream(k);
        let mut s = base.clone();
        for v in s.r.iter_mut().chain(s.gamma_bar.iter_mut()) {
            *v *= f64::exp(rng.gen_range(-0.35..0.35));
        }
        for v in s.gamma.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
        s.nu *= f64::exp(rng.gen_range(-0.5..0.5));
        s
    }

    /// Nested solve at fixed c3 (None for plain). Cold solves are
    /// multistarted; warm solves with `race_cold` additionally run the cold
    /// default start and keep the lower minimum, because the outer landscape
    /// has a spurious near-alpha-independent valley that pure warm chains can
    /// get trapped in. Deterministic: replicas merge by (value, index).
    fn solve_fixed_c3(
        &self,
        alphas: &[f64],
        c3: Option<f64>,
        warm: Option<&Start>,
        race_cold: bool,
    ) -> (f64, Start, bool) {
        let nested = Nested {
            alphas,
            kappa: self.mode.kappa(),
            c3,
            grid: &self.grid,
        };
        let starts: Vec<(Start, f64)> = match warm {
            Some(s) => {
                let mut s = s.clone();
                s.c3 = c3;
                if race_cold {
                    let cold = default_start(alphas.len(), self.mode);
                    vec![(s, 0.03), (cold, 0.15)]
                } else {
                    vec![(s, 0.03)]
                }
            }
            None => {
                let base = default_start(alphas.len(), self.mode);
                (0..self.config.multistarts as u64)
                    .map(|k| (self.jittered(&base, k), 0.15))
                    .collect()
            }
        };
        let runs: Vec<(f64, Start, bool)> = starts
            .into_par_iter()
            .map(|(start, step)| nested.solve(&start, step, self.config))
            .collect();
        runs.into_iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
            .expect("at least one candidate start")
    }

    /// Saddle solve at a given last-layer alpha: fixed-c3 nested solve for
    /// plain, golden-section maximization over c3 for lifted.
    fn solve_at(&self, alpha_l: f64, warm: Option<&Start>) -> (f64, Start, bool) {
        let mut alphas = self.prefix.to_vec();
        alphas.push(alpha_l);
        match self.method {
            Method::Plain => self.solve_fixed_c3(&alphas, None, warm, true),
            Method::Lifted => {
                // anchor the basin once (multistart when cold, warm racing
                // cold otherwise), then chain warm-only solves through the
                // golden-section search over ln c3
                let (x0, step, anchor) = match warm.and_then(|w| w.c3) {
                    Some(c) => {
                        let a = self.solve_fixed_c3(&alphas, Some(c), warm, true);
                        (c.ln(), 0.15, a.1)
                    }
                    None => {
                        let c = 0.3;
                        let a = self.solve_fixed_c3(&alphas, Some(c), None, false);
                        (c.ln(), 0.8, a.1)
                    }
                };
                let state = std::cell::RefCell::new(anchor);
                let value_at = |ln_c3: f64| {
                    let mut warm_state = state.borrow_mut();
                    let (v, out, _) = self.solve_fixed_c3(
                        &alphas,
                        Some(ln_c3.exp()),
                        Some(&warm_state),
                        false,
                    );
                    // a failed nested solve reports +infinity for the outer
                    // minimizer; for this maximization it must read as
                    // -infinity, and the warm state is kept untouched
                    if !v.is_finite() {
                        return f64::NEG_INFINITY;
                    }
                    *warm_state = out;
                    v
                };
                let (ln_opt, _) = maximize_1d(value_at, x0, (1e-4f64).ln(), step, 5e-3);
                // final solve at the optimal temperature, warm started and
                // racing a cold start in case the warm chain degraded
                let warm_state = state.into_inner();
                self.solve_fixed_c3(&alphas, Some(ln_opt.exp()), Some(&warm_state), true)
            }
        }
    }
}

impl Start {
    fn into_vars(self) -> SaddleVariables {
        SaddleVariables {
            r: self.r,
            gamma_bar: self.gamma_bar,
            gamma: self.gamma,
            nu: self.nu,
            c3: self.c3,
        }
    }
}

/// Solves the nested min-max program for a fixed profile. The outer block
/// (r, gamma_bar) is minimized, the inner block (nu, gamma) maximized to
/// convergence per outer evaluation, and for the lifted method an outermost
/// golden-section maximization runs over c3.
pub fn saddle_solve(
    profile: &NetworkProfile,
    method: Method,
    config: &SolverConfig,
) -> Result<SaddleSolution> {
    config.validate()?;
    let alphas = profile.alphas();
    let (prefix, alpha_l) = (
        &alphas[..alphas.len() - 1],
        alphas[alphas.len() - 1],
    );
    let engine = Engine {
        prefix,
        mode: profile.mode(),
        method,
        config,
        grid: QuadratureGrid::standard(),
    };
    let (_, start, converged) = engine.solve_at(alpha_l, None);
    let vars = start.into_vars();
    let breakdown = phi0(profile, method, &vars, &engine.grid)?;
    Ok(SaddleSolution {
        vars,
        breakdown,
        converged,
    })
}

/// Locates the capacity bound: the alpha_l at which the saddle value crosses
/// zero (negative below the bound, positive above). Brackets on
/// [base, factor * base], expands once on a missing sign change, then runs
/// Illinois-damped regula falsi with warm-started saddle re-solves.
pub fn capacity_root(
    prefix_alphas: &[f64],
    mode: InjectivityMode,
    method: Method,
    config: &SolverConfig,
) -> Result<CapacityResult> {
    capacity_root_from(prefix_alphas, mode, method, config, None)
}

fn capacity_root_from(
    prefix: &[f64],
    mode: InjectivityMode,
    method: Method,
    config: &SolverConfig,
    init: Option<Start>,
) -> Result<CapacityResult> {
    config.validate()?;
    if prefix.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument(
            "prefix expansion coefficients must be positive".into(),
        ));
    }
    let engine = Engine {
        prefix,
        mode,
        method,
        config,
        grid: QuadratureGrid::standard(),
    };
    let base = prefix.last().copied().unwrap_or(1.0).max(1.0);
    let factor = config.alpha_bracket_factor;
    let mut warm: Option<Start> = init;

    let probe = |alpha: f64, warm: &mut Option<Start>| -> (f64, Start, bool) {
        let out = engine.solve_at(alpha, warm.as_ref());
        *warm = Some(out.1.clone());
        out
    };

    let mut lo = base;
    let mut hi = base * factor;
    let (mut flo, mut wlo, _) = probe(lo, &mut warm);
    let (mut fhi, mut whi, _) = probe(hi, &mut warm);

    // phi0 increases through the root; expand the bracket once if needed
    if flo >= 0.0 && fhi >= 0.0 {
        hi = lo;
        fhi = flo;
        whi = wlo.clone();
        lo = (lo / factor).max(0.2);
        let p = probe(lo, &mut warm);
        flo = p.0;
        wlo = p.1;
    } else if flo <= 0.0 && fhi <= 0.0 {
        lo = hi;
        flo = fhi;
        wlo = whi.clone();
        hi *= factor;
        let p = probe(hi, &mut warm);
        fhi = p.0;
        whi = p.1;
    }
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoSignChange { lo, hi, flo, fhi });
    }

    let mut best: (f64, f64, Start) = if flo.abs() <= fhi.abs() {
        (lo, flo, wlo.clone())
    } else {
        (hi, fhi, whi.clone())
    };
    // Illinois regula falsi: guarantees bracket shrinkage even when the
    // curve is one-sided
    let mut side = 0i8;
    for _ in 0..60 {
        if best.1.abs() <= config.objective_tol {
            break;
        }
        if hi - lo <= config.var_tol * base {
            break;
        }
        let mut x = hi - fhi * (hi - lo) / (fhi - flo);
        let guard = 0.01 * (hi - lo);
        if !(x > lo + guard && x < hi - guard) {
            x = 0.5 * (lo + hi);
        }
        let (fx, wx, _) = probe(x, &mut warm);
        if fx.abs() < best.1.abs() {
            best = (x, fx, wx.clone());
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            wlo = wx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            whi = wx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        let _ = (&wlo, &whi);
    }

    let (alpha_bound, start) = (best.0, best.2);
    // report the residual through the public objective assembly so that
    // re-evaluating the emitted variables reproduces it bit-exactly
    let vars = start.into_vars();
    let mut full = prefix.to_vec();
    full.push(alpha_bound);
    let profile = NetworkProfile::new(full, mode)?;
    let residual = phi0(&profile, method, &vars, &engine.grid)?.total.abs();
    // converged when the residual target is met or the root is localized to
    // the requested relative width (probe-to-probe solver noise bounds how
    // small the residual itself can get)
    let converged = residual <= config.objective_tol || hi - lo <= config.var_tol * base;
    let mut alphas = prefix.to_vec();
    alphas.push(alpha_bound);
    let relative_expansion = match prefix.last() {
        Some(&prev) => alpha_bound / prev,
        None => alpha_bound,
    };
    Ok(CapacityResult {
        alphas,
        alpha_bound,
        vars_at_opt: Some(vars),
        residual,
        mode,
        method,
        relative_expansion,
        converged,
    })
}

/// Builds the minimally injectively admissible sequence: iterates
/// [`capacity_root`] layer by layer, feeding each bound back as the next
/// prefix element. The single-layer capacity `alpha1` is a supplied constant
/// from prior work, not recomputed.
pub fn minimal_sequence(
    max_layers: usize,
    alpha1: f64,
    mode: InjectivityMode,
    method: Method,
    config: &SolverConfig,
) -> Result<Vec<CapacityResult>> {
    if max_layers < 1 {
        return Err(Error::InvalidArgument("max_layers must be at least 1".into()));
    }
    if !(alpha1 > 0.0 && alpha1.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "alpha1 must be positive and finite, got {alpha1}"
        )));
    }
    let mut results = vec![CapacityResult {
        alphas: vec![alpha1],
        alpha_bound: alpha1,
        vars_at_opt: None,
        residual: 0.0,
        mode,
        method,
        relative_expansion: alpha1,
        converged: true,
    }];
    let mut prefix = vec![alpha1];
    let mut warm: Option<Start> = None;
    for _ in 1..max_layers {
        let res = capacity_root_from(&prefix, mode, method, config, warm.take())?;
        prefix = res.alphas.clone();
        // extend the optimum heuristically as the next layer's warm start:
        // new radius doubles the last, the other blocks repeat their tails
        if let Some(v) = &res.vars_at_opt {
            let mut s = Start {
                r: v.r.clone(),
                gamma_bar: v.gamma_bar.clone(),
                gamma: v.gamma.clone(),
                nu: v.nu,
                c3: v.c3,
            };
            s.r.push(2.0 * s.r.last().copied().unwrap_or(0.885));
            s.gamma.push(s.gamma.last().copied().unwrap_or(0.3));
            let gb_last = *s.gamma_bar.last().expect("nonempty gamma_bar");
            s.gamma_bar.push(gb_last);
            warm = Some(s);
        }
        results.push(res);
    }
    Ok(results)
}
