//! Assembly of the l-layer plain objective phi0 and lifted objective
//! phi0-lifted from the per-layer kernels.
//!
//! Conventions: r0 = 1 is fixed; nu1 for the last layer is always the derived
//! quantity 4 * gamma_bar_l * nu / r_{l-1}^2; the capacity bound in the last
//! layer ratio alpha_l is the zero crossing of the saddle value of phi0.

use crate::rdt_kernels::{
    fq1_lifted_raw, fq1_plain, fq2_lifted_t, fq2_plain_nu1, gamma_sph_hat_with, GammaSphForm,
};
use crate::special_math::QuadratureGrid;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Weak (recover the generating input) vs strong (recover every input)
/// injectivity; enters the objective through the threshold multiplier kappa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectivityMode {
    Weak,
    Strong,
}

impl InjectivityMode {
    /// Threshold multiplier: 2 for weak, 4 for strong.
    pub fn kappa(self) -> f64 {
        match self {
            InjectivityMode::Weak => 2.0,
            InjectivityMode::Strong => 4.0,
        }
    }
}

impl std::fmt::Display for InjectivityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InjectivityMode::Weak => write!(f, "weak"),
            InjectivityMode::Strong => write!(f, "strong"),
        }
    }
}

/// Plain vs partially lifted RDT functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plain,
    Lifted,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Plain => write!(f, "plain"),
            Method::Lifted => write!(f, "lifted"),
        }
    }
}

/// A problem instance: the layer expansion sequence alpha_1..alpha_l and the
/// injectivity mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    alphas: Vec<f64>,
    mode: InjectivityMode,
}

impl NetworkProfile {
    pub fn new(alphas: Vec<f64>, mode: InjectivityMode) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument(
                "profile needs at least one expansion coefficient".into(),
            ));
        }
        if let Some(&a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "expansion coefficients must be positive and finite, got {a}"
            )));
        }
        Ok(Self { alphas, mode })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn mode(&self) -> InjectivityMode {
        self.mode
    }

    /// Number of layers l.
    pub fn layers(&self) -> usize {
        self.alphas.len()
    }
}

/// The RDT optimization variables.
///
/// `r` and `gamma` have length l-1, `gamma_bar` has length l; `c3` is present
/// iff the lifted method is used. The convention r0 = 1 is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleVariables {
    pub r: Vec<f64>,
    pub gamma_bar: Vec<f64>,
    pub gamma: Vec<f64>,
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
}

impl SaddleVariables {
    /// Checks dimensions against a layer count and the sign/domain invariants.
    pub fn validate(&self, layers: usize) -> Result<()> {
        if self.gamma_bar.len() != layers
            || self.r.len() != layers - 1
            || self.gamma.len() != layers - 1
        {
            return Err(Error::DimensionMismatch(format!(
                "for l = {layers} expected |r| = |gamma| = {}, |gamma_bar| = {layers}; got |r| = {}, |gamma| = {}, |gamma_bar| = {}",
                layers - 1,
                self.r.len(),
                self.gamma.len(),
                self.gamma_bar.len()
            )));
        }
        if self.r.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("all r_i must be positive".into()));
        }
        if self.gamma_bar.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(
                "all gamma_bar_i must be positive".into(),
            ));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "nu must be nonnegative, got {}",
                self.nu
            )));
        }
        if let Some(c3) = self.c3 {
            if !(c3 > 0.0 && c3.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "c3 must be positive, got {c3}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-term decomposition of an objective value, for diagnostics and the
/// algebraic identity tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// One bracketed summand per hidden layer i = 1..l-1.
    pub layer_terms: Vec<f64>,
    pub last_layer_term: f64,
    /// -nu * (kappa - alpha_l)
    pub nu_term: f64,
    /// -1 for plain; the spherical terms for lifted.
    pub constant_term: f64,
    pub total: f64,
}

impl ObjectiveBreakdown {
    fn assemble(
        layer_terms: Vec<f64>,
        last_layer_term: f64,
        nu_term: f64,
        constant_term: f64,
    ) -> Self {
        let total =
            layer_terms.iter().sum::<f64>() + last_layer_term + nu_term + constant_term;
        ObjectiveBreakdown {
            layer_terms,
            last_layer_term,
            nu_term,
            constant_term,
            total,
        }
    }
}

/// Plain l-layer objective phi0.
///
/// phi0 = sum_i r_{i-1} (gamma_bar_i + alpha_i f_q1_i - gamma_i r_i^2 / r_{i-1}^2)
///      + gamma_bar_l + alpha_l r_{l-1}^2 f_q2 / (4 gamma_bar_l)
///      - nu (kappa - alpha_l) - 1.
pub fn phi0_plain(
    profile: &NetworkProfile,
    vars: &SaddleVariables,
    grid: &QuadratureGrid,
) -> Result<ObjectiveBreakdown> {
    if vars.c3.is_some() {
        return Err(Error::InvalidArgument(
            "plain objective takes no c3; use the lifted method".into(),
        ));
    }
    let l = profile.layers();
    vars.validate(l)?;
    let alphas = profile.alphas();
    let kappa = profile.mode().kappa();

    let mut rr = Vec::with_capacity(l);
    rr.push(1.0);
    rr.extend_from_slice(&vars.r);

    let mut layer_terms = Vec::with_capacity(l - 1);
    for i in 0..l - 1 {
        let f1 = fq1_plain(vars.gamma_bar[i], vars.gamma[i], grid)?;
        layer_terms.push(
            rr[i]
                * (vars.gamma_bar[i] + alphas[i] * f1
                    - vars.gamma[i] * rr[i + 1] * rr[i + 1] / (rr[i] * rr[i])),
        );
    }
    let gb_l = vars.gamma_bar[l - 1];
    let r_last = rr[l - 1];
    let nu1 = 4.0 * gb_l * vars.nu / (r_last * r_last);
    let last_layer_term =
        gb_l + alphas[l - 1] * r_last * r_last * fq2_plain_nu1(nu1) / (4.0 * gb_l);
    let nu_term = -vars.nu * (kappa - alphas[l - 1]);
    Ok(ObjectiveBreakdown::assemble(
        layer_terms,
        last_layer_term,
        nu_term,
        -1.0,
    ))
}

/// Lifted l-layer objective phi0-lifted at inverse temperature `vars.c3`,
/// with the stationary closed form of the spherical multiplier.
pub fn phi0_lifted(
    profile: &NetworkProfile,
    vars: &SaddleVariables,
    grid: &QuadratureGrid,
) -> Result<ObjectiveBreakdown> {
    phi0_lifted_with(profile, vars, grid, GammaSphForm::Stationary)
}

/// `phi0_lifted` with an explicit choice of the spherical-multiplier form
/// (the printed variant exists for comparison only).
pub fn phi0_lifted_with(
    profile: &NetworkProfile,
    vars: &SaddleVariables,
    grid: &QuadratureGrid,
    form: GammaSphForm,
) -> Result<ObjectiveBreakdown> {
    let l = profile.layers();
    vars.validate(l)?;
    let c3 = vars.c3.ok_or_else(|| {
        Error::InvalidArgument("lifted objective requires c3".into())
    })?;
    let alphas = profile.alphas();
    let kappa = profile.mode().kappa();

    let mut rr = Vec::with_capacity(l);
    rr.push(1.0);
    rr.extend_from_slice(&vars.r);

    let mut layer_terms = Vec::with_capacity(l - 1);
    for i in 0..l - 1 {
        let f1 = fq1_lifted_raw(c3 * rr[i], vars.gamma_bar[i], vars.gamma[i], grid)?;
        if !(f1 > 0.0 && f1.is_finite()) {
            return Err(Error::DomainViolation(format!(
                "lifted f_q1 for layer {} is not positive: {f1}",
                i + 1
            )));
        }
        layer_terms.push(
            c3 * rr[i] * rr[i] / 2.0 + vars.gamma_bar[i] * rr[i]
                - alphas[i] / c3 * f1.ln()
                - vars.gamma[i] * rr[i + 1] * rr[i + 1] / rr[i],
        );
    }
    let gb_l = vars.gamma_bar[l - 1];
    let r_last = rr[l - 1];
    let nu1 = 4.0 * gb_l * vars.nu / (r_last * r_last);
    let f2 = fq2_lifted_t(c3 * r_last * r_last / (4.0 * gb_l), nu1);
    let last_layer_term = c3 * r_last * r_last / 2.0 + gb_l - alphas[l - 1] / c3 * f2.ln();
    let nu_term = -vars.nu * (kappa - alphas[l - 1]);
    let gs = gamma_sph_hat_with(c3, form);
    let constant_term = -gs + (1.0 - c3 / (2.0 * gs)).ln() / (2.0 * c3);
    Ok(ObjectiveBreakdown::assemble(
        layer_terms,
        last_layer_term,
        nu_term,
        constant_term,
    ))
}

/// Dispatches to [`phi0_plain`] or [`phi0_lifted`] by `method`.
pub fn phi0(
    profile: &NetworkProfile,
    method: Method,
    vars: &SaddleVariables,
    grid: &QuadratureGrid,
) -> Result<ObjectiveBreakdown> {
    match method {
        Method::Plain => phi0_plain(profile, vars, grid),
        Method::Lifted => phi0_lifted(profile, vars, grid),
    }
}
