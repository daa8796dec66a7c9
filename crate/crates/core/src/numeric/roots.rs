//! Bracketed scalar root finding.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{a}, {b}] (f(a) = {fa}, f(b) = {fb})")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("non-finite function value at {0}")]
    NonFinite(f64),
}

fn check_bracket(a: f64, b: f64, fa: f64, fb: f64) -> Result<(), RootError> {
    if !fa.is_finite() {
        return Err(RootError::NonFinite(a));
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite(b));
    }
    if fa * fb > 0.0 {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    Ok(())
}

/// Plain bisection on `[a, b]` until the bracket is narrower than `tol`.
pub fn bisect(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, RootError> {
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    check_bracket(a, b, flo, fhi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    // 200 halvings exhaust any f64 interval
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(RootError::NonFinite(mid));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton's method kept inside a shrinking bisection bracket.
///
/// `fdf` returns the value and derivative. Any step that leaves the bracket
/// or fails to halve the residual is replaced by a bisection step, so the
/// iteration never does worse than bisection.
pub fn newton_bracketed(
    mut fdf: impl FnMut(f64) -> (f64, f64),
    a: f64,
    b: f64,
    guess: Option<f64>,
    tol: f64,
) -> Result<f64, RootError> {
    let (fa, _) = fdf(a);
    let (fb, _) = fdf(b);
    check_bracket(a, b, fa, fb)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let (mut lo, mut hi) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut x = match guess {
        Some(g) if g > a.min(b) && g < a.max(b) => g,
        _ => 0.5 * (a + b),
    };
    let mut last_step = (b - a).abs();
    for _ in 0..200 {
        let (fx, dfx) = fdf(x);
        if !fx.is_finite() {
            return Err(RootError::NonFinite(x));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let inside = newton.is_finite() && (newton - lo) * (newton - hi) < 0.0;
        let step;
        if inside && (2.0 * fx.abs() <= (dfx * last_step).abs() || last_step == (b - a).abs()) {
            step = newton - x;
            x = newton;
        } else {
            let mid = 0.5 * (lo + hi);
            step = mid - x;
            x = mid;
        }
        last_step = step.abs();
        if last_step <= tol || (hi - lo).abs() <= tol {
            return Ok(x);
        }
    }
    Ok(x)
}
