//! Closed-form scalar kernels and their Gaussian averages.
//!
//! Plain kernels: `fq2_plain` (fully analytic) and `fq1_plain` (analytic in
//! the auxiliary variable h, quadrature in g). Lifted kernels are the
//! exponential moments E exp(-c3 * kernel) at inverse temperature c3, which
//! tighten the resulting capacity bounds; they reduce to the plain kernels in
//! the c3 -> 0 limit.

use crate::special_math::{erf, erfc, normal_cdf, QuadratureGrid};
use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.3989422804014326779399460599343818684;

/// Arguments of the plain kernels for one layer.
///
/// `nu1` is always the derived quantity 4 * gamma_bar * nu / r^2, never a free
/// variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlainKernelArgs {
    pub gamma_bar: f64,
    pub gamma: f64,
    pub nu1: f64,
}

impl PlainKernelArgs {
    pub fn new(gamma_bar: f64, gamma: f64, nu1: f64) -> Result<Self> {
        if !(gamma_bar > 0.0 && gamma_bar.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma_bar must be positive and finite, got {gamma_bar}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must be finite, got {gamma}"
            )));
        }
        if !(nu1 >= 0.0 && nu1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "nu1 must be nonnegative and finite, got {nu1}"
            )));
        }
        Ok(Self {
            gamma_bar,
            gamma,
            nu1,
        })
    }
}

/// Arguments of the lifted kernels for one layer.
///
/// `c3_eff` is the effective inverse temperature c3 * r_{i-1}; `r` is the
/// radius entering the last-layer kernel through c3 * r^2 / (4 gamma_bar).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedKernelArgs {
    pub c3_eff: f64,
    pub gamma_bar: f64,
    pub gamma: f64,
    pub nu1: f64,
    pub r: f64,
}

impl LiftedKernelArgs {
    pub fn new(c3_eff: f64, gamma_bar: f64, gamma: f64, nu1: f64, r: f64) -> Result<Self> {
        if !(c3_eff > 0.0 && c3_eff.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "c3_eff must be positive and finite, got {c3_eff}"
            )));
        }
        if !(gamma_bar > 0.0 && gamma_bar.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma_bar must be positive and finite, got {gamma_bar}"
            )));
        }
        if !(nu1 >= 0.0 && nu1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "nu1 must be nonnegative and finite, got {nu1}"
            )));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "r must be positive and finite, got {r}"
            )));
        }
        let denom = 1.0 + 4.0 * gamma * gamma_bar;
        if denom <= 0.0 {
            return Err(Error::DomainViolation(format!(
                "1 + 4*gamma*gamma_bar = {denom} must be positive"
            )));
        }
        let b_plus = c3_eff * gamma_bar / denom;
        if 1.0 - 2.0 * b_plus <= 0.0 {
            return Err(Error::DomainViolation(format!(
                "lifted f_q1 exponential moment diverges: 1 - 2*B = {}",
                1.0 - 2.0 * b_plus
            )));
        }
        Ok(Self {
            c3_eff,
            gamma_bar,
            gamma,
            nu1,
            r,
        })
    }
}

/// Component breakdown of the analytic average f2-bar underlying `fq2_plain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fq2Breakdown {
    /// a-bar = sqrt(2 * nu1)
    pub a_bar: f64,
    pub f_x: f64,
    pub f21: f64,
    pub f22: f64,
    pub f23: f64,
    /// f2-bar = f21 + f22 + f23
    pub total: f64,
}

impl Fq2Breakdown {
    /// Evaluates the closed-form components at the given nu1 >= 0.
    pub fn from_nu1(nu1: f64) -> Fq2Breakdown {
        let a_bar = (2.0 * nu1).sqrt();
        let tail = erfc(a_bar / SQRT_2);
        let f_x = -(f64::exp(-0.5 * a_bar * a_bar) * a_bar * INV_SQRT_2PI + 0.5 * tail);
        let f21 = -0.5 - 0.5 * nu1;
        let f22 = f_x + 0.5 * nu1 * tail;
        let f23 = -nu1 * (0.5 - 0.5 * tail);
        Fq2Breakdown {
            a_bar,
            f_x,
            f21,
            f22,
            f23,
            total: f21 + f22 + f23,
        }
    }
}

pub(crate) fn fq2_plain_nu1(nu1: f64) -> f64 {
    1.0 + Fq2Breakdown::from_nu1(nu1).total
}

/// Plain last-layer kernel average f_q2 = 1 + f2-bar; depends on the
/// arguments only through `nu1`. Zero at nu1 = 0 and strictly decreasing.
pub fn fq2_plain(args: &PlainKernelArgs) -> f64 {
    fq2_plain_nu1(args.nu1)
}

/// Inner-optimized scalar kernel f-bar_q1 at a single (g, h) point: the
/// minimum over z of (g - z)^2 / (4 gamma_bar) + max(z,0) h + gamma max(z,0)^2,
/// clamped at 0 from above when g <= 0.
pub fn fq1_pointwise(g: f64, h: f64, gamma_bar: f64, gamma: f64) -> f64 {
    let expr = g * g / (4.0 * gamma_bar)
        - (g - 2.0 * h * gamma_bar).max(0.0).powi(2)
            / (4.0 * gamma_bar * (1.0 + 4.0 * gamma * gamma_bar));
    if g <= 0.0 {
        expr.min(0.0)
    } else {
        expr
    }
}

/// Integrand of `fq1_plain` at a single quadrature node, with the h-integral
/// resolved analytically (I11 term).
fn fq1_node(g: f64, gamma_bar: f64, gamma: f64) -> f64 {
    let denom = 1.0 + 4.0 * gamma * gamma_bar;
    let a = g / (2.0 * gamma_bar);
    let b = gamma_bar / denom;
    let g2_term = g * g / (4.0 * gamma_bar);
    if g > 0.0 {
        let c = a;
        let i11 = b
            * (0.5 * (a * a + 1.0) * (erf(c / SQRT_2) + 1.0)
                + f64::exp(-0.5 * c * c) * (2.0 * a - c) * INV_SQRT_2PI);
        g2_term - i11
    } else {
        // The g <= 0 branch carries the min(0, .) clamp of the pointwise
        // kernel; the first term is only active on the h-region where the
        // clamp does not bind, hence the Phi(C) factor.
        let c = (g - g.abs() * denom.sqrt()) / (2.0 * gamma_bar);
        let i11 = b
            * (0.5 * (a * a + 1.0) * (erf(c / SQRT_2) + 1.0)
                + f64::exp(-0.5 * c * c) * (2.0 * a - c) * INV_SQRT_2PI);
        g2_term * normal_cdf(c) - i11
    }
}

/// Plain hidden-layer kernel average f_q1 = E f-bar_q1(g, h) over iid standard
/// normal (g, h), with the h-integral analytic and the g-integral on `grid`.
///
/// Fails when 1 + 4 * gamma * gamma_bar <= 0 (the h-integral diverges).
pub fn fq1_plain(gamma_bar: f64, gamma: f64, grid: &QuadratureGrid) -> Result<f64> {
    if !(gamma_bar > 0.0 && gamma_bar.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma_bar must be positive and finite, got {gamma_bar}"
        )));
    }
    let denom = 1.0 + 4.0 * gamma * gamma_bar;
    if denom <= 0.0 {
        return Err(Error::DomainViolation(format!(
            "1 + 4*gamma*gamma_bar = {denom} must be positive"
        )));
    }
    Ok(grid.expect(|g| fq1_node(g, gamma_bar, gamma)))
}

pub(crate) fn fq2_lifted_t(t: f64, nu1: f64) -> f64 {
    // t = c3 * r^2 / (4 gamma_bar): coefficient in E exp(-t * kernel)
    let a1 = (2.0 * nu1).sqrt() * (1.0 + 2.0 * t).sqrt();
    let tail = erfc((2.0 * nu1).sqrt() / SQRT_2);
    let f21 = 0.5 * f64::exp(t * nu1);
    let f22 = 0.5 * f64::exp(-t * nu1) * tail;
    let f23 = f64::exp(t * nu1) / (1.0 + 2.0 * t).sqrt() * (0.5 - 0.5 * erfc(a1 / SQRT_2));
    f21 + f22 + f23
}

/// Lifted last-layer kernel average f_q2^(lift) = E exp(-c3 * f-bar_q2),
/// fully analytic. Strictly positive; tends to 1 as c3 -> 0.
pub fn fq2_lifted(args: &LiftedKernelArgs) -> f64 {
    fq2_lifted_t(args.c3_eff * args.r / (4.0 * args.gamma_bar), args.nu1)
}

pub(crate) fn fq1_lifted_raw(
    c3_eff: f64,
    gamma_bar: f64,
    gamma: f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let denom = 1.0 + 4.0 * gamma * gamma_bar;
    if denom <= 0.0 {
        return Err(Error::DomainViolation(format!(
            "1 + 4*gamma*gamma_bar = {denom} must be positive"
        )));
    }
    let b_plus = c3_eff * gamma_bar / denom;
    let one_minus_2b = 1.0 - 2.0 * b_plus;
    if one_minus_2b <= 0.0 {
        return Err(Error::DomainViolation(format!(
            "lifted f_q1 exponential moment diverges: 1 - 2*B = {one_minus_2b}"
        )));
    }
    let sq = one_minus_2b.sqrt();
    Ok(grid.expect(|g| {
        let a = g / (2.0 * gamma_bar);
        let c = if g > 0.0 {
            a
        } else {
            (g - g.abs() * denom.sqrt()) / (2.0 * gamma_bar)
        };
        let i11 = 0.5 / sq
            * f64::exp(b_plus * a * a / one_minus_2b)
            * erfc(-(2.0 * b_plus * a + one_minus_2b * c) / (SQRT_2 * sq));
        let e = f64::exp(-c3_eff * g * g / (4.0 * gamma_bar));
        let tail = 1.0 - normal_cdf(c);
        if g > 0.0 {
            e * (tail + i11)
        } else {
            e * i11 + tail
        }
    }))
}

/// Lifted hidden-layer kernel average f_q1^(lift) = E exp(-c3_eff * f-bar_q1),
/// with the h-integral analytic (I11+ term) and the g-integral on `grid`.
/// Strictly positive on the valid domain.
pub fn fq1_lifted(args: &LiftedKernelArgs, grid: &QuadratureGrid) -> Result<f64> {
    fq1_lifted_raw(args.c3_eff, args.gamma_bar, args.gamma, grid)
}

/// Which closed form to use for the optimal spherical multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaSphForm {
    /// (c3 + sqrt(c3^2 + 4)) / 4 — the stationary point of the spherical term.
    Stationary,
    /// (c3 + sqrt(c3 + 4)) / 4 — kept for comparison; not stationary except
    /// near c3 = 0.
    Printed,
}

/// Optimal spherical multiplier gamma-hat_sph: the stationary point of
/// -gamma + (1/(2 c3)) * log(1 - c3/(2 gamma)), i.e. the positive root of
/// 4 gamma^2 - 2 c3 gamma - 1 = 0. Always satisfies 2 gamma > c3.
pub fn gamma_sph_hat(c3: f64) -> f64 {
    gamma_sph_hat_with(c3, GammaSphForm::Stationary)
}

/// `gamma_sph_hat` with an explicit choice of closed form.
pub fn gamma_sph_hat_with(c3: f64, form: GammaSphForm) -> f64 {
    match form {
        GammaSphForm::Stationary => 0.25 * (c3 + (c3 * c3 + 4.0).sqrt()),
        GammaSphForm::Printed => 0.25 * (c3 + (c3 + 4.0).sqrt()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::gauss_grid;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::standard()
    }

    // Independent adaptive-quadrature oracle values for
    // f_q2 = E k(g), k(g) = -nu1 (g<=0), g^2-nu1 (0<g<=sqrt(2 nu1)), nu1 (else),
    // computed with panels split at 0 and sqrt(2 nu1).
    const FQ2_ORACLE: [(f64, f64); 7] = [
        (0.1, -0.023322564278967),
        (0.5, -0.241970724519143),
        (0.685, -0.375649717771064),
        (1.0, -0.628904145185155),
        (2.0, -1.539731537181839),
        (3.5, -3.007420485670973),
        (5.0, -4.501456056441508),
    ];

    #[test]
    fn fq2_plain_matches_piecewise_quadrature_oracle() {
        for (nu1, want) in FQ2_ORACLE {
            let args = PlainKernelArgs::new(1.0, 0.0, nu1).unwrap();
            assert!(
                (fq2_plain(&args) - want).abs() < 1e-8,
                "fq2({nu1}) = {} want {want}",
                fq2_plain(&args)
            );
        }
    }

    #[test]
    fn fq2_plain_zero_and_monotone() {
        assert_eq!(fq2_plain_nu1(0.0), 0.0);
        let mut prev = f64::INFINITY;
        let mut nu1 = 0.0;
        while nu1 <= 5.0 + 1e-9 {
            let v = fq2_plain_nu1(nu1);
            assert!(v < prev, "fq2 not strictly decreasing at nu1 = {nu1}");
            prev = v;
            nu1 += 0.1;
        }
    }

    #[test]
    fn fq2_breakdown_consistency() {
        let b = Fq2Breakdown::from_nu1(0.7);
        assert_eq!(b.total, b.f21 + b.f22 + b.f23);
        assert!((b.a_bar - (1.4f64).sqrt()).abs() < 1e-15);
        let b0 = Fq2Breakdown::from_nu1(0.0);
        assert_eq!(b0.total, -1.0);
    }

    // Independent minimization-over-z oracle of the pointwise kernel
    // (2e6-point grid plus local refinement).
    const FQ1_POINTWISE_ORACLE: [(f64, f64, f64, f64, f64); 6] = [
        (1.0, 1.0, 1.0, 0.3, 0.25),
        (-1.0, 0.0, 1.0, 0.3, 0.0),
        (2.0, -1.0, 0.5, 0.2, -1.214285714286),
        (0.7, -0.4, 0.8935, 0.3078, -0.129584760027),
        (-1.3, 2.0, 1.5, 0.1, 0.0),
        (3.0, 0.5, 0.3, 0.25, 2.826923076923),
    ];

    #[test]
    fn fq1_pointwise_matches_z_minimization_oracle() {
        for (g, h, gb, gam, want) in FQ1_POINTWISE_ORACLE {
            let got = fq1_pointwise(g, h, gb, gam);
            assert!(
                (got - want).abs() < 1e-9,
                "fq1_pointwise({g},{h},{gb},{gam}) = {got} want {want}"
            );
        }
    }

    // Monte Carlo oracle: mean and standard error of fq1_pointwise over 1e6
    // iid standard normal (g, h) pairs, frozen from an independent
    // implementation (seed 12345).
    const FQ1_MC_ORACLE: [(f64, f64, f64, f64); 10] = [
        (0.8935, 0.3078, -0.127759773, 5.862e-4),
        (0.9642, 0.3078, -0.137925950, 5.916e-4),
        (0.8830, 0.3128, -0.123876753, 5.810e-4),
        (1.1224, 0.2952, -0.164910461, 6.187e-4),
        (0.5, 0.2, -0.099416842, 6.482e-4),
        (2.0, 0.1, -0.512510890, 1.299e-3),
        (1.0, 0.5, -0.072378456, 4.559e-4),
        (0.3, 0.8, 0.130899306, 5.817e-4),
        (1.5, -0.05, -1.088286205, 2.623e-3),
        (100.0, 0.3, -0.410933286, 9.223e-4),
    ];

    #[test]
    fn fq1_plain_matches_monte_carlo_oracle() {
        let grid = grid();
        for (gb, gam, mean, se) in FQ1_MC_ORACLE {
            let got = fq1_plain(gb, gam, &grid).unwrap();
            assert!(
                (got - mean).abs() < 3.0 * se,
                "fq1({gb},{gam}) = {got}, MC {mean} +- {se}"
            );
        }
    }

    #[test]
    fn fq1_plain_bounded_at_large_gamma_bar() {
        let v = fq1_plain(100.0, 0.3, &grid()).unwrap();
        assert!(v.is_finite() && v.abs() < 1.0);
    }

    #[test]
    fn fq1_plain_grid_convergence() {
        let g200 = grid();
        let g400 = gauss_grid(400, 8.0).unwrap();
        for (gb, gam) in [(0.8935, 0.3078), (0.5, 0.2), (2.0, 0.1)] {
            let a = fq1_plain(gb, gam, &g200).unwrap();
            let b = fq1_plain(gb, gam, &g400).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fq1_plain_rejects_invalid_domain() {
        assert!(matches!(
            fq1_plain(1.0, -0.3, &grid()),
            Err(Error::DomainViolation(_))
        ));
        assert!(fq1_plain(1.0, -0.2, &grid()).is_ok());
    }

    // Independent adaptive-quadrature oracle for E exp(-t * k(g)) with the
    // same piecewise kernel, panels split at 0 and sqrt(2 nu1).
    const FQ2_LIFTED_ORACLE: [(f64, f64, f64); 7] = [
        (0.3, 0.7, 1.134855102135),
        (0.1, 0.5, 1.025240538802),
        (0.05, 2.0, 1.081105063613),
        (0.8, 0.3, 1.118883122205),
        (0.2, 0.0, 1.000000000000),
        (0.5, 1.5, 1.815930671337),
        (1.2, 0.25, 1.148188952667),
    ];

    #[test]
    fn fq2_lifted_matches_piecewise_quadrature_oracle() {
        for (t, nu1, want) in FQ2_LIFTED_ORACLE {
            let got = fq2_lifted_t(t, nu1);
            assert!(
                (got - want).abs() < 1e-8,
                "fq2_lifted(t={t}, nu1={nu1}) = {got} want {want}"
            );
            assert!(got > 0.0);
        }
    }

    #[test]
    fn fq2_lifted_limits() {
        // c3 -> 0: exponential moment tends to 1
        assert!((fq2_lifted_t(1e-8, 0.7) - 1.0).abs() < 1e-7);
        // nu1 = 0: kernel vanishes a.e., moment is exactly 1
        let args = LiftedKernelArgs::new(0.2, 1.0, 0.1, 0.0, 1.0).unwrap();
        assert!((fq2_lifted(&args) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fq2_lifted_table7_log_check() {
        // Table 7 optimum: -(1/c3) log f_q2^(lift) against the independent
        // quadrature oracle of the same log-moment.
        let (c3, r, gb2, nu) = (0.1091, 1.7931, 0.9053, 0.5504);
        let nu1 = 4.0 * gb2 * nu / (r * r);
        let args = LiftedKernelArgs::new(c3 * r, gb2, 0.3361, nu1, r).unwrap();
        let got = -(fq2_lifted(&args)).ln() / c3;
        assert!((got - (-0.299105822355)).abs() < 1e-6);
    }

    #[test]
    fn fq1_lifted_bridge_to_plain() {
        let grid = grid();
        for (gb, gam) in [(0.8935, 0.3078), (0.5, 0.2), (1.2, 0.45)] {
            let plain = fq1_plain(gb, gam, &grid).unwrap();
            let c3 = 1e-6;
            let lifted = fq1_lifted_raw(c3, gb, gam, &grid).unwrap();
            assert!(
                (-lifted.ln() / c3 - plain).abs() < 1e-4,
                "bridge failed at ({gb},{gam})"
            );
        }
    }

    #[test]
    fn fq1_lifted_matches_monte_carlo_oracle() {
        // Frozen 1e6-sample MC of exp(-c3_eff * fq1_pointwise) at the Table 7
        // and Table 8 optima (mean, standard error).
        let grid = grid();
        let cases = [
            (0.1091, 0.8810, 0.3361, 1.014465218, 6.893e-5),
            (0.8315, 0.7862, 0.5728, 1.125248477, 1.478e-3),
        ];
        for (c3, gb, gam, mean, se) in cases {
            let got = fq1_lifted_raw(c3, gb, gam, &grid).unwrap();
            assert!(
                (got - mean).abs() < 3.0 * se,
                "fq1_lifted({c3},{gb},{gam}) = {got}, MC {mean} +- {se}"
            );
        }
    }

    #[test]
    fn fq1_lifted_lower_bound_property() {
        // E exp(-c3 X) >= exp(-c3 max X) over the grid support
        let grid = grid();
        let (c3, gb, gam) = (0.4, 0.9, 0.3);
        let val = fq1_lifted_raw(c3, gb, gam, &grid).unwrap();
        let max_kernel = grid
            .nodes()
            .iter()
            .map(|&g| g * g / (4.0 * gb))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(val >= f64::exp(-c3 * max_kernel));
        assert!(val > 0.0);
    }

    #[test]
    fn lifted_args_reject_divergent_moment() {
        // c3_eff * gamma_bar / (1 + 4 gamma gamma_bar) >= 1/2 diverges
        assert!(matches!(
            LiftedKernelArgs::new(2.0, 1.0, 0.0, 0.5, 1.0),
            Err(Error::DomainViolation(_))
        ));
        assert!(LiftedKernelArgs::new(0.4, 1.0, 0.0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn gamma_sph_hat_stationarity() {
        for c3 in [0.01, 0.1091, 0.8315, 2.0] {
            let gs = gamma_sph_hat(c3);
            assert!(2.0 * gs > c3);
            let f = |g: f64| -g + (1.0 - c3 / (2.0 * g)).ln() / (2.0 * c3);
            let d = (f(gs + 1e-6) - f(gs - 1e-6)) / 2e-6;
            assert!(d.abs() < 1e-8, "stationarity residual {d} at c3 = {c3}");
            // unique positive root of 4 g^2 - 2 c3 g - 1
            assert!((4.0 * gs * gs - 2.0 * c3 * gs - 1.0).abs() < 1e-12);
        }
        // printed form is not stationary away from c3 = 0
        let gs_printed = gamma_sph_hat_with(0.8315, GammaSphForm::Printed);
        let c3 = 0.8315;
        let f = |g: f64| -g + (1.0 - c3 / (2.0 * g)).ln() / (2.0 * c3);
        let d = (f(gs_printed + 1e-6) - f(gs_printed - 1e-6)) / 2e-6;
        assert!(d.abs() > 1e-3);
    }

    #[test]
    fn gamma_sph_hat_small_c3_limit() {
        assert!((gamma_sph_hat(1e-12) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn kernel_determinism() {
        let grid = grid();
        let a = fq1_plain(0.8935, 0.3078, &grid).unwrap();
        let b = fq1_plain(0.8935, 0.3078, &grid).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
