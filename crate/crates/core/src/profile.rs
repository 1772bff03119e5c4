//! Piecewise-constant spatial profiles and piecewise-linear space-time paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("expected {expected} values for {breakpoints} breakpoints, got {got}")]
    LengthMismatch {
        breakpoints: usize,
        expected: usize,
        got: usize,
    },
    #[error("breakpoints must be finite and strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("path needs at least two knots with strictly increasing times")]
    BadPath,
}

/// A piecewise-constant function of `x` with constant tails.
///
/// `values[i]` holds on `(breakpoints[i-1], breakpoints[i])`, with the
/// obvious conventions for the two tails. Adjacent values are distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    /// Builds a profile and merges equal adjacent values.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ProfileError> {
        Self::with_index_map(breakpoints, values).map(|(p, _)| p)
    }

    /// Like [`Profile::new`], also returning for each input breakpoint the
    /// index it has in the merged profile (`None` if it carried no jump).
    pub fn with_index_map(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<(Self, Vec<Option<usize>>), ProfileError> {
        if values.len() != breakpoints.len() + 1 {
            return Err(ProfileError::LengthMismatch {
                breakpoints: breakpoints.len(),
                expected: breakpoints.len() + 1,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ProfileError::NonFinite(i));
        }
        for (i, b) in breakpoints.iter().enumerate() {
            if !b.is_finite() || (i > 0 && *b <= breakpoints[i - 1]) {
                return Err(ProfileError::NotIncreasing(i));
            }
        }
        let mut out_b = Vec::with_capacity(breakpoints.len());
        let mut out_v = vec![values[0]];
        let mut map = Vec::with_capacity(breakpoints.len());
        for (i, &b) in breakpoints.iter().enumerate() {
            if values[i + 1] == *out_v.last().unwrap() {
                map.push(None);
            } else {
                map.push(Some(out_b.len()));
                out_b.push(b);
                out_v.push(values[i + 1]);
            }
        }
        Ok((
            Self {
                breakpoints: out_b,
                values: out_v,
            },
            map,
        ))
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![value],
        }
    }

    /// `left` for `x < at`, `right` for `x > at`.
    pub fn step(at: f64, left: f64, right: f64) -> Self {
        if left == right {
            Self::constant(left)
        } else {
            Self {
                breakpoints: vec![at],
                values: vec![left, right],
            }
        }
    }

    /// Builds a profile from jump positions that may coincide or be out of
    /// order by rounding; coincident jumps are collapsed into one.
    pub(crate) fn from_sorted_jumps(left_tail: f64, jumps: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut values = vec![left_tail];
        for (x, right) in jumps {
            match breakpoints.last() {
                Some(&last) if x <= last => {
                    // zero-width piece: overwrite the state to the right of `last`
                    *values.last_mut().unwrap() = right;
                }
                _ => {
                    breakpoints.push(x);
                    values.push(right);
                }
            }
            let n = values.len();
            if n >= 2 && values[n - 1] == values[n - 2] {
                values.pop();
                breakpoints.pop();
            }
        }
        Self {
            breakpoints,
            values,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_tail(&self) -> f64 {
        self.values[0]
    }

    pub fn right_tail(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at `x`; at a breakpoint the right value is returned.
    pub fn value_at(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.values[k]
    }

    /// Constant pieces `(lo, hi, value)` covering `[a, b]`.
    pub fn pieces(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let start = self.breakpoints.partition_point(|&x| x <= a);
        let end = self.breakpoints.partition_point(|&x| x < b);
        let inner = &self.breakpoints[start..end];
        let mut lo = a;
        let mut k = start;
        let mut idx = 0;
        std::iter::from_fn(move || {
            if lo >= b {
                return None;
            }
            let hi = if idx < inner.len() { inner[idx] } else { b };
            let piece = (lo, hi, self.values[k]);
            lo = hi;
            k += 1;
            idx += 1;
            Some(piece)
        })
    }

    /// `int_a^b phi(u(x)) dx`, exact for piecewise-constant `u`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, phi: F) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        self.pieces(a, b).map(|(lo, hi, u)| (hi - lo) * phi(u)).sum()
    }

    /// `int_a^b (u(x) - v(x))^2 dx` over the common refinement of both profiles.
    pub fn l2_distance_sq(&self, other: &Profile, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        let mut cuts: Vec<f64> = Vec::with_capacity(self.breakpoints.len() + other.breakpoints.len() + 2);
        cuts.push(a);
        let inside = |x: &&f64| **x > a && **x < b;
        let (mut i, mut j) = (
            self.breakpoints.iter().filter(inside).peekable(),
            other.breakpoints.iter().filter(inside).peekable(),
        );
        loop {
            let next = match (i.peek(), j.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x <= y {
                        i.next();
                        x
                    } else {
                        j.next();
                        y
                    }
                }
                (Some(&&x), None) => {
                    i.next();
                    x
                }
                (None, Some(&&y)) => {
                    j.next();
                    y
                }
                (None, None) => break,
            };
            if next > *cuts.last().unwrap() {
                cuts.push(next);
            }
        }
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let d = self.value_at(mid) - other.value_at(mid);
                (w[1] - w[0]) * d * d
            })
            .sum()
    }
}

/// A continuous piecewise-linear path `t -> x(t)` on `[t_start, t_end]`.
///
/// Slopes are stored alongside the knots so that a path built from known
/// speeds reports those speeds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    knots: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

impl Path {
    /// Path through the given `(t, x)` knots.
    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self, ProfileError> {
        if knots.len() < 2 || knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(ProfileError::BadPath);
        }
        if knots.iter().any(|(t, x)| !t.is_finite() || !x.is_finite()) {
            return Err(ProfileError::BadPath);
        }
        let slopes = knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        Ok(Self { knots, slopes })
    }

    /// Path starting at `(t0, x0)` and following `(duration-end time, slope)`
    /// pieces. Positions are accumulated from the slopes.
    pub fn from_slopes(t0: f64, x0: f64, pieces: &[(f64, f64)]) -> Result<Self, ProfileError> {
        let mut knots = vec![(t0, x0)];
        let mut slopes = Vec::with_capacity(pieces.len());
        for &(t1, slope) in pieces {
            let (tp, xp) = *knots.last().unwrap();
            if !(t1 > tp) || !slope.is_finite() {
                return Err(ProfileError::BadPath);
            }
            knots.push((t1, xp + slope * (t1 - tp)));
            slopes.push(slope);
        }
        if slopes.is_empty() {
            return Err(ProfileError::BadPath);
        }
        Ok(Self { knots, slopes })
    }

    /// Raw constructor for callers that already hold consistent knots and slopes.
    pub(crate) fn from_parts(knots: Vec<(f64, f64)>, slopes: Vec<f64>) -> Self {
        debug_assert_eq!(knots.len(), slopes.len() + 1);
        Self { knots, slopes }
    }

    /// Straight line `x = x0 + slope (t - t0)` on `[t0, t1]`.
    pub fn line(t0: f64, t1: f64, x0: f64, slope: f64) -> Self {
        Self {
            knots: vec![(t0, x0), (t1, x0 + slope * (t1 - t0))],
            slopes: vec![slope],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn t_start(&self) -> f64 {
        self.knots[0].0
    }

    pub fn t_end(&self) -> f64 {
        self.knots.last().unwrap().0
    }

    /// Index of the piece containing `t` (pieces are closed on the left).
    fn piece_index(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|&(tk, _)| tk <= t);
        k.saturating_sub(1).min(self.slopes.len() - 1)
    }

    /// Position at time `t`, extended linearly outside the domain.
    pub fn position(&self, t: f64) -> f64 {
        let i = self.piece_index(t);
        let (tk, xk) = self.knots[i];
        xk + self.slopes[i] * (t - tk)
    }

    pub fn slope_at(&self, t: f64) -> f64 {
        self.slopes[self.piece_index(t)]
    }

    /// Pieces `(t0, t1, x0, slope)` intersected with `[a, b]`.
    pub fn pieces_in(&self, a: f64, b: f64) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for (i, w) in self.knots.windows(2).enumerate() {
            let lo = w[0].0.max(a);
            let hi = w[1].0.min(b);
            if hi > lo {
                let x0 = w[0].1 + self.slopes[i] * (lo - w[0].0);
                out.push((lo, hi, x0, self.slopes[i]));
            }
        }
        out
    }

    /// Same path shifted by `-sigma t`.
    pub fn minus_drift(&self, sigma: f64) -> Path {
        Path {
            knots: self.knots.iter().map(|&(t, x)| (t, x - sigma * t)).collect(),
            slopes: self.slopes.iter().map(|s| s - sigma).collect(),
        }
    }

    /// Largest `|slope|`.
    pub fn lipschitz(&self) -> f64 {
        self.slopes.iter().fold(0.0, |acc, s| acc.max(s.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merges_equal_neighbours() {
        let (p, map) = Profile::with_index_map(vec![-1.0, 0.0, 1.0], vec![1.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.breakpoints(), &[0.0, 1.0]);
        assert_eq!(p.values(), &[1.0, 2.0, 0.0]);
        assert_eq!(map, vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Profile::new(vec![0.0, 0.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Profile::new(vec![0.0], vec![1.0]).is_err());
        assert!(Profile::new(vec![0.0], vec![1.0, f64::NAN]).is_err());
        assert!(Path::from_knots(vec![(0.0, 0.0)]).is_err());
        assert!(Path::from_knots(vec![(1.0, 0.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn integration_examples() {
        let c = Profile::constant(3.0);
        assert_eq!(c.integrate(-1.0, 2.0, |u| u), 9.0);
        let s = Profile::step(0.0, 1.0, -1.0);
        assert_eq!(s.integrate(-2.0, 2.0, |u| u), 0.0);
        let shifted = Profile::step(0.5, 1.0, -1.0);
        assert_eq!(s.l2_distance_sq(&shifted, -10.0, 10.0), 0.5 * 4.0);
    }

    #[test]
    fn collapses_coincident_jumps() {
        let p = Profile::from_sorted_jumps(1.0, [(0.0, 0.5), (0.0, 0.0), (0.0, -1.0), (2.0, -1.5)]);
        assert_eq!(p.breakpoints(), &[0.0, 2.0]);
        assert_eq!(p.values(), &[1.0, -1.0, -1.5]);
        let q = Profile::from_sorted_jumps(1.0, [(0.0, 0.5), (0.0, 1.0)]);
        assert_eq!(q, Profile::constant(1.0));
    }

    #[test]
    fn path_evaluation() {
        let p = Path::from_knots(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_eq!(p.position(0.5), 0.5);
        assert_eq!(p.position(1.5), 1.0);
        assert_eq!(p.slope_at(1.0), 0.0);
        assert_eq!(p.lipschitz(), 1.0);
        let h = p.minus_drift(0.5);
        assert_eq!(h.position(2.0), 0.0);
    }

    proptest! {
        #[test]
        fn integral_is_additive(
            vals in proptest::collection::vec(-3.0f64..3.0, 1..6),
            a in -5.0f64..0.0, m in 0.0f64..1.0, b in 1.0f64..5.0,
        ) {
            let bps: Vec<f64> = (0..vals.len() - 1).map(|i| i as f64 - 1.0).collect();
            let p = Profile::new(bps, vals).unwrap();
            let whole = p.integrate(a, b, |u| u * u);
            let split = p.integrate(a, m, |u| u * u) + p.integrate(m, b, |u| u * u);
            prop_assert!((whole - split).abs() <= 1e-12 * (1.0 + whole.abs()));
            prop_assert!(p.l2_distance_sq(&p, a, b) == 0.0);
        }
    }
}
