//! Uniformly convex flux models with closed-form derivatives and entropy flux.
//!
//! Every model has `f''` even and non-decreasing in `|u|`, and `f'` odd and
//! increasing. That makes the interval bounds `alpha = inf f''`,
//! `M = sup f''` and `S = sup |f'|` available in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("quartic flux needs a > 0 and b >= 0 (got a = {a}, b = {b})")]
    QuarticParams { a: f64, b: f64 },
    #[error("unknown flux model '{0}'")]
    UnknownModel(String),
    #[error("flux model '{model}' does not take parameter '{param}'")]
    UnknownParam { model: String, param: String },
    #[error("interval [{lo}, {hi}] is empty or not finite")]
    BadInterval { lo: f64, hi: f64 },
}

/// Which quantity [`FluxModel::evaluate`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxOrder {
    /// `f(u)`
    F,
    /// `f'(u)`
    F1,
    /// `f''(u)`
    F2,
    /// Entropy flux `q(u) = int_0^u t f'(t) dt` for `eta(u) = u^2/2`.
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum FluxModel {
    /// `f = u^2/2`
    Burgers,
    /// `f = a u^2/2 + b u^4/4`
    Quartic { a: f64, b: f64 },
    /// `f = cosh u`
    Cosh,
}

/// Closed-form extrema of `f''` and `|f'|` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalBounds {
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub lo: f64,
    pub hi: f64,
}

impl IntervalBounds {
    /// `M^3 / alpha^3`
    pub fn stiffness(&self) -> f64 {
        (self.m / self.alpha).powi(3)
    }
}

impl FluxModel {
    pub fn quartic(a: f64, b: f64) -> Result<Self, FluxError> {
        if !(a > 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(FluxError::QuarticParams { a, b });
        }
        Ok(FluxModel::Quartic { a, b })
    }

    /// Builds a model from a name and a flat parameter list, rejecting
    /// parameters the model does not use.
    pub fn from_name<'a>(
        name: &str,
        params: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Result<Self, FluxError> {
        let params: Vec<(&str, f64)> = params.into_iter().collect();
        let reject = |allowed: &[&str]| -> Result<(), FluxError> {
            match params.iter().find(|(k, _)| !allowed.contains(k)) {
                Some((k, _)) => Err(FluxError::UnknownParam {
                    model: name.to_string(),
                    param: k.to_string(),
                }),
                None => Ok(()),
            }
        };
        match name {
            "burgers" => {
                reject(&[])?;
                Ok(FluxModel::Burgers)
            }
            "cosh" => {
                reject(&[])?;
                Ok(FluxModel::Cosh)
            }
            "quartic" => {
                reject(&["a", "b"])?;
                let get = |key: &str, default: f64| {
                    params
                        .iter()
                        .find(|(k, _)| *k == key)
                        .map(|(_, v)| *v)
                        .unwrap_or(default)
                };
                FluxModel::quartic(get("a", 1.0), get("b", 0.0))
            }
            other => Err(FluxError::UnknownModel(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FluxModel::Burgers => "burgers",
            FluxModel::Quartic { .. } => "quartic",
            FluxModel::Cosh => "cosh",
        }
    }

    pub fn evaluate(&self, order: FluxOrder, u: f64) -> f64 {
        match order {
            FluxOrder::F => self.f(u),
            FluxOrder::F1 => self.f1(u),
            FluxOrder::F2 => self.f2(u),
            FluxOrder::Q => self.q(u),
        }
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match *self {
            FluxModel::Burgers => 0.5 * u * u,
            FluxModel::Quartic { a, b } => {
                let u2 = u * u;
                0.5 * a * u2 + 0.25 * b * u2 * u2
            }
            FluxModel::Cosh => u.cosh(),
        }
    }

    #[inline]
    pub fn f1(&self, u: f64) -> f64 {
        match *self {
            FluxModel::Burgers => u,
            FluxModel::Quartic { a, b } => a * u + b * u * u * u,
            FluxModel::Cosh => u.sinh(),
        }
    }

    #[inline]
    pub fn f2(&self, u: f64) -> f64 {
        match *self {
            FluxModel::Burgers => 1.0,
            FluxModel::Quartic { a, b } => a + 3.0 * b * u * u,
            FluxModel::Cosh => u.cosh(),
        }
    }

    #[inline]
    pub fn q(&self, u: f64) -> f64 {
        match *self {
            FluxModel::Burgers => u * u * u / 3.0,
            FluxModel::Quartic { a, b } => {
                let u3 = u * u * u;
                a * u3 / 3.0 + b * u3 * u * u / 5.0
            }
            FluxModel::Cosh => u * u.cosh() - u.sinh(),
        }
    }

    /// Rankine–Hugoniot speed `sigma(u_minus, u_plus)`, extended by `f'`
    /// on the diagonal.
    ///
    /// The divided difference is written in factored form per model, so it
    /// is symmetric in its arguments bit for bit. Below a relative gap of
    /// `1e-12` the midpoint derivative is returned.
    #[inline]
    pub fn shock_speed(&self, u_minus: f64, u_plus: f64) -> f64 {
        let gap = u_plus - u_minus;
        let scale = 1f64.max(u_minus.abs()).max(u_plus.abs());
        if gap.abs() <= 1e-12 * scale {
            return self.f1(0.5 * (u_minus + u_plus));
        }
        match *self {
            FluxModel::Burgers => 0.5 * (u_minus + u_plus),
            FluxModel::Quartic { a, b } => {
                let sum = u_minus + u_plus;
                let sq = u_minus * u_minus + u_plus * u_plus;
                0.5 * a * sum + 0.25 * b * sum * sq
            }
            FluxModel::Cosh => {
                // cosh y - cosh x = 2 sinh((x+y)/2) sinh((y-x)/2)
                2.0 * (0.5 * (u_minus + u_plus)).sinh() * (0.5 * gap).sinh() / gap
            }
        }
    }

    pub fn bounds_on_interval(&self, lo: f64, hi: f64) -> Result<IntervalBounds, FluxError> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(FluxError::BadInterval { lo, hi });
        }
        let nearest_zero = if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else if lo > 0.0 {
            lo
        } else {
            hi
        };
        let farthest = lo.abs().max(hi.abs());
        Ok(IntervalBounds {
            alpha: self.f2(nearest_zero),
            m: self.f2(farthest),
            s: self.f1(lo).abs().max(self.f1(hi).abs()),
            lo,
            hi,
        })
    }

    /// Bounds on the convex hull of a set of states.
    pub fn bounds_on_hull(&self, states: &[f64]) -> Result<IntervalBounds, FluxError> {
        let lo = states.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = states.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.bounds_on_interval(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn models() -> [FluxModel; 4] {
        [
            FluxModel::Burgers,
            FluxModel::quartic(1.0, 3.0).unwrap(),
            FluxModel::quartic(0.5, 0.0).unwrap(),
            FluxModel::Cosh,
        ]
    }

    #[test]
    fn closed_form_examples() {
        let q2 = adaptive_simpson(|t| t * t, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(q2, 8.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(FluxModel::Burgers.evaluate(FluxOrder::Q, 2.0), q2, epsilon = 1e-10);
        assert_eq!(FluxModel::Burgers.evaluate(FluxOrder::F1, 0.0), 0.0);

        let q1 = adaptive_simpson(|t| t * t.sinh(), 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(FluxModel::Cosh.q(1.0), q1, epsilon = 1e-10);
        assert_abs_diff_eq!(FluxModel::Cosh.q(1.0), 0.367879441171442, epsilon = 1e-12);
    }

    #[test]
    fn entropy_flux_matches_quadrature() {
        for m in models() {
            assert_eq!(m.q(0.0), 0.0);
            for &u in &[-2.5, -1.0, -0.3, 0.7, 1.9, 3.0] {
                let oracle = adaptive_simpson(|t| t * m.f1(t), 0.0, u, 1e-12).unwrap();
                assert_abs_diff_eq!(m.q(u), oracle, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn shock_speed_examples() {
        let b = FluxModel::Burgers;
        assert_eq!(b.shock_speed(1.0, -1.0), 0.0);
        assert_eq!(b.shock_speed(2.0, 2.0), 2.0);
        assert_eq!(b.shock_speed(2.0, 0.0), 1.0);
    }

    #[test]
    fn shock_speed_is_continuous_at_diagonal() {
        for m in models() {
            for &u in &[-1.3, 0.0, 0.4, 2.0] {
                let near = m.shock_speed(u, u + 1e-9);
                assert_abs_diff_eq!(near, m.f1(u), epsilon = 1e-7);
                assert_eq!(m.shock_speed(u, u), m.f1(u));
            }
        }
    }

    #[test]
    fn bounds_examples() {
        let b = FluxModel::Burgers.bounds_on_interval(-7.0, 3.0).unwrap();
        assert_eq!((b.alpha, b.m, b.s), (1.0, 1.0, 7.0));

        let c = FluxModel::Cosh.bounds_on_interval(-1.0, 1.0).unwrap();
        assert_eq!(c.alpha, 1.0);
        assert_abs_diff_eq!(c.m, 1.543080634815244, epsilon = 1e-12);
        assert_abs_diff_eq!(c.s, 1.175201193643801, epsilon = 1e-12);

        let q = FluxModel::quartic(1.0, 3.0).unwrap().bounds_on_interval(0.0, 1.0).unwrap();
        assert_eq!((q.alpha, q.m, q.s), (1.0, 10.0, 4.0));
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(FluxModel::quartic(0.0, 1.0).is_err());
        assert!(FluxModel::quartic(1.0, -1.0).is_err());
        assert!(FluxModel::Burgers.bounds_on_interval(1.0, 0.0).is_err());
        assert!(FluxModel::from_name("burgers", [("a", 1.0)]).is_err());
        assert!(FluxModel::from_name("logistic", []).is_err());
        assert_eq!(
            FluxModel::from_name("quartic", [("a", 1.0), ("b", 3.0)]).unwrap(),
            FluxModel::Quartic { a: 1.0, b: 3.0 }
        );
    }

    #[test]
    fn finite_differences_match_derivatives() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for m in models() {
            for _ in 0..1000 {
                let u: f64 = rng.random_range(-3.0..3.0);
                let d_f = (m.f(u + h) - m.f(u - h)) / (2.0 * h);
                let d_f1 = (m.f1(u + h) - m.f1(u - h)) / (2.0 * h);
                let d_q = (m.q(u + h) - m.q(u - h)) / (2.0 * h);
                let tol = 1e-7;
                assert!((d_f - m.f1(u)).abs() <= tol, "{m:?} f' at {u}");
                assert!((d_f1 - m.f2(u)).abs() <= tol, "{m:?} f'' at {u}");
                assert!((d_q - u * m.f1(u)).abs() <= tol, "{m:?} q' at {u}");
            }
        }
    }

    #[test]
    fn bounds_agree_with_dense_sampling() {
        for m in models() {
            for &(lo, hi) in &[(-2.0, 1.5), (0.3, 2.0), (-1.7, -0.2), (-0.5, 0.5)] {
                let b = m.bounds_on_interval(lo, hi).unwrap();
                let n = ((hi - lo) / 1e-3).round() as usize;
                let (mut amin, mut amax, mut smax) = (f64::INFINITY, 0.0f64, 0.0f64);
                for k in 0..=n {
                    let u = lo + (hi - lo) * k as f64 / n as f64;
                    amin = amin.min(m.f2(u));
                    amax = amax.max(m.f2(u));
                    smax = smax.max(m.f1(u).abs());
                }
                assert_abs_diff_eq!(b.alpha, amin, epsilon = 1e-9);
                assert_abs_diff_eq!(b.m, amax, epsilon = 1e-9);
                assert_abs_diff_eq!(b.s, smax, epsilon = 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn shock_speed_symmetric_and_between_characteristics(
            a in -3.0f64..3.0, b in -3.0f64..3.0, which in 0usize..4
        ) {
            let m = models()[which];
            prop_assert_eq!(m.shock_speed(a, b), m.shock_speed(b, a));
            let s = m.shock_speed(a, b);
            let (lo, hi) = (m.f1(a).min(m.f1(b)), m.f1(a).max(m.f1(b)));
            let tol = 1e-12 * 1f64.max(hi.abs());
            prop_assert!(s >= lo - tol && s <= hi + tol);
        }

        #[test]
        fn rankine_hugoniot_residual_small(a in -3.0f64..3.0, b in -3.0f64..3.0, which in 0usize..4) {
            let m = models()[which];
            let s = m.shock_speed(a, b);
            let r = m.f(b) - m.f(a) - s * (b - a);
            prop_assert!(r.abs() <= 1e-12 * 1f64.max(m.f(a).abs()).max(m.f(b).abs()));
        }
    }
}
