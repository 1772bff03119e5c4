//! Relative-entropy calculus for the quadratic entropy `eta(u) = u^2/2`.
//!
//! Given a jump `(u_minus, u_plus)` of a weak solution and a reference shock
//! `(u_ell, u_r)`, this module evaluates the entropy cost `E` of the jump,
//! the dissipation rate `D` of the shifted relative entropy, the two ways of
//! splitting `D` through the one-sided rates `D(u, u; ...)`, and the upper
//! bound on `D` in terms of `max(E, 0)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flux::{FluxModel, IntervalBounds};
use crate::quadrature::{adaptive_simpson, QuadratureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("reference shock needs u_ell > u_r (got u_ell = {u_ell}, u_r = {u_r})")]
    NotAShock { u_ell: f64, u_r: f64 },
    #[error("g-integral oracle failed: {0}")]
    Oracle(#[from] QuadratureError),
}

/// Left and right traces of a jump. Either ordering is allowed; an upward
/// jump (`u_minus < u_plus`) is non-entropic for a convex flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpPair {
    pub u_minus: f64,
    pub u_plus: f64,
}

impl JumpPair {
    pub fn new(u_minus: f64, u_plus: f64) -> Self {
        Self { u_minus, u_plus }
    }

    /// `u_plus - u_minus`
    pub fn delta(&self) -> f64 {
        self.u_plus - self.u_minus
    }
}

/// An entropic reference shock, `u_ell > u_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockDatum {
    pub u_ell: f64,
    pub u_r: f64,
}

impl ShockDatum {
    pub fn new(u_ell: f64, u_r: f64) -> Result<Self, EntropyError> {
        if !(u_ell > u_r) {
            return Err(EntropyError::NotAShock { u_ell, u_r });
        }
        Ok(Self { u_ell, u_r })
    }

    pub fn speed(&self, model: &FluxModel) -> f64 {
        model.shock_speed(self.u_ell, self.u_r)
    }

    /// Reference profile `u_ell 1_{x<0} + u_r 1_{x>0}` evaluated at `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.u_ell
        } else {
            self.u_r
        }
    }
}

/// Constants of the upper bound on `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DboundConstants {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
}

impl Default for DboundConstants {
    fn default() -> Self {
        Self {
            c1: 33.0,
            c2: 1.0 / 24.0,
        }
    }
}

/// The terms of the two splittings
/// `D = E + F_- + D(u_-, u_-) = E + F_+ + D(u_+, u_+)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitTerms {
    pub e: f64,
    pub f_minus: f64,
    pub f_plus: f64,
    pub d_at_uminus: f64,
    pub d_at_uplus: f64,
}

/// `eta(x | a) = (x - a)^2 / 2`
#[inline]
pub fn rel_entropy(x: f64, a: f64) -> f64 {
    let d = x - a;
    0.5 * d * d
}

/// `q(x; a) = q(x) - q(a) - a (f(x) - f(a))`
#[inline]
pub fn rel_flux(model: &FluxModel, x: f64, a: f64) -> f64 {
    model.q(x) - model.q(a) - a * (model.f(x) - model.f(a))
}

/// Entropy cost `E(u_-, u_+)`, the density of the entropy production per
/// unit time carried by a front with these traces.
#[inline]
pub fn jump_entropy_cost(model: &FluxModel, j: JumpPair) -> f64 {
    let (a, b) = (j.u_minus, j.u_plus);
    if a == b {
        return 0.0;
    }
    let sigma = model.shock_speed(a, b);
    model.q(b) - model.q(a) - sigma * 0.5 * (b - a) * (b + a)
}

/// Dissipation rate `D(u_-, u_+; u_ell, u_r)`.
#[inline]
pub fn dissipation_rate(model: &FluxModel, j: JumpPair, s: ShockDatum) -> f64 {
    let sigma = model.shock_speed(j.u_minus, j.u_plus);
    rel_flux(model, j.u_plus, s.u_r)
        - rel_flux(model, j.u_minus, s.u_ell)
        - sigma * (rel_entropy(j.u_plus, s.u_r) - rel_entropy(j.u_minus, s.u_ell))
}

/// `g(t) = f(t) - sigma t - (f(u_-) - sigma u_-)`, which vanishes at both
/// traces of the jump.
fn g_function(model: FluxModel, j: JumpPair) -> impl Fn(f64) -> f64 {
    let sigma = model.shock_speed(j.u_minus, j.u_plus);
    let offset = model.f(j.u_minus) - sigma * j.u_minus;
    move |t| model.f(t) - sigma * t - offset
}

/// Independent route to `D`: `D = -int_{u_r}^{u_+} g + int_{u_ell}^{u_-} g`,
/// integrated by adaptive Simpson.
pub fn dissipation_rate_g_oracle(
    model: &FluxModel,
    j: JumpPair,
    s: ShockDatum,
) -> Result<f64, EntropyError> {
    let g = g_function(*model, j);
    let span = [j.u_minus, j.u_plus, s.u_ell, s.u_r]
        .iter()
        .fold(1f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-13 * model.f(span).abs().max(1.0) * span;
    let right = adaptive_simpson(&g, s.u_r, j.u_plus, tol)?;
    let left = adaptive_simpson(&g, s.u_ell, j.u_minus, tol)?;
    Ok(left - right)
}

/// The split terms, with `F_-` and `F_+` evaluated from their explicit
/// formulas so that the two splittings are genuine identities to check.
pub fn dissipation_split_terms(model: &FluxModel, j: JumpPair, s: ShockDatum) -> SplitTerms {
    let (um, up) = (j.u_minus, j.u_plus);
    let (ul, ur) = (s.u_ell, s.u_r);
    let sigma = model.shock_speed(um, up);
    let eta = |x: f64| 0.5 * x * x;
    // eta(u_r) - eta(u_ell) - u_r eta'(u_r) + u_ell eta'(u_ell)
    let common = eta(ur) - eta(ul) - ur * ur + ul * ul;

    let f_minus = ur * (model.f(um) - model.f(up) + sigma * up - model.f1(um) * um)
        + (sigma - model.f1(um)) * (common - ul * um);
    let f_plus = ul * (model.f(um) - model.f(up) - sigma * um + model.f1(up) * up)
        + (sigma - model.f1(up)) * (common + ur * up);

    SplitTerms {
        e: jump_entropy_cost(model, j),
        f_minus,
        f_plus,
        d_at_uminus: dissipation_rate(model, JumpPair::new(um, um), s),
        d_at_uplus: dissipation_rate(model, JumpPair::new(up, up), s),
    }
}

/// Right-hand side of the bound
/// `D <= C1 (M/alpha)^3 max(E, 0) - C2 alpha (u_ell - u_r) [(u_ell - u_-)^2 + (u_r - u_+)^2]`.
///
/// `e` is the entropy cost of the jump and `bounds` must cover the convex hull
/// of the four states.
#[inline]
pub fn dbound_rhs(
    e: f64,
    j: JumpPair,
    s: ShockDatum,
    bounds: &IntervalBounds,
    constants: DboundConstants,
) -> f64 {
    let h = s.u_ell - j.u_minus;
    let k = s.u_r - j.u_plus;
    constants.c1 * bounds.stiffness() * e.max(0.0)
        - constants.c2 * bounds.alpha * (s.u_ell - s.u_r) * (h * h + k * k)
}

/// Burgers closed form `-D_0 = (1/4)(u_- - u_+)(H^2 + K^2) + (1/6)(H^3 - K^3)`
/// with `H = u_ell - u_-`, `K = u_r - u_+`.
pub fn burgers_minus_d0(j: JumpPair, s: ShockDatum) -> f64 {
    let h = s.u_ell - j.u_minus;
    let k = s.u_r - j.u_plus;
    0.25 * (j.u_minus - j.u_plus) * (h * h + k * k) + (h * h * h - k * k * k) / 6.0
}
