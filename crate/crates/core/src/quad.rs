//! Adaptive Simpson quadrature on bounded intervals.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Integral of `f` over `[a, b]` to within `tol` (absolute).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::TailBoundUnavailable(format!("quadrature over unbounded [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return Err(Error::ApproximationDepthExceeded(format!("quadrature on [{a}, {b}] did not reach {tol:e}")));
    }
    Ok(step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)? + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((simpson(|x| x * x, 0.0, 3.0, 1e-12).unwrap() - 9.0).abs() < 1e-12);
        let v = simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let v = simpson(|x| (-x).exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn rejects_unbounded() {
        assert!(simpson(|x| x, 0.0, f64::INFINITY, 1e-9).is_err());
    }
}
