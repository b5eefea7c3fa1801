//! Newton iteration guarded by a bisection bracket.

use crate::{Error, Result};

/// Find the root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs. Newton steps start from `seed`; any step that leaves the
/// current bracket, or fails to shrink it, falls back to bisection.
pub fn newton_bisect<F, D>(
    f: F,
    df: D,
    seed: f64,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::domain(format!(
            "newton_bisect: no sign change on [{lo}, {hi}]"
        )));
    }
    let mut x = seed.clamp(lo, hi);
    for _ in 0..max_iter {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        // Maintain the bracket.
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        if (hi - lo).abs() <= abs_tol * (1.0 + x.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (x - newton).abs() == 0.0 && (fx / d).abs() <= abs_tol * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Err(Error::Solver { lo, hi, max_iter })
}
