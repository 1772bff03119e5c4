//! Adaptive Simpson quadrature with Richardson correction.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("adaptive Simpson did not reach tolerance {tol:e} on [{a}, {b}]")]
pub struct QuadratureError {
    pub a: f64,
    pub b: f64,
    pub tol: f64,
}

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` (either orientation) to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
        .ok_or(QuadratureError { a, b, tol })
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        let v = adaptive_simpson(|t| t.powi(4) - 2.0 * t, -1.0, 2.0, 1e-13).unwrap();
        assert!((v - (33.0 / 5.0 - 3.0)).abs() < 1e-12);
        let v = adaptive_simpson(f64::cosh, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - 2f64.sinh()).abs() < 1e-12);
    }

    #[test]
    fn reversed_and_empty_ranges() {
        let fwd = adaptive_simpson(|t| t * t, 0.0, 1.0, 1e-13).unwrap();
        let back = adaptive_simpson(|t| t * t, 1.0, 0.0, 1e-13).unwrap();
        assert!((fwd + back).abs() < 1e-15);
        assert_eq!(adaptive_simpson(|t| t, 3.0, 3.0, 1e-13).unwrap(), 0.0);
    }

    #[test]
    fn nonconvergence_is_reported() {
        // integrand is not finite at the left end
        let r = adaptive_simpson(|t: f64| 1.0 / t.abs().sqrt(), 0.0, 1.0, 1e-14);
        assert!(r.is_err());
    }
}
