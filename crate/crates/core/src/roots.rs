//! Bracketed scalar root finding.

/// Find a root of `f` in `[a, b]` given values of opposite sign at the ends.
///
/// Illinois variant of regula falsi with a bisection fallback whenever the
/// secant step stalls. Stops when the bracket is shorter than `xtol` or an
/// exact zero is hit. Returns the endpoint of the final bracket with the
/// smaller residual together with that residual.
pub fn illinois<F, E>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    debug_assert!(fa * fb <= 0.0, "root is not bracketed");
    if fa == 0.0 {
        return Ok((a, fa));
    }
    if fb == 0.0 {
        return Ok((b, fb));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        let lo = a.min(b);
        let hi = a.max(b);
        let margin = 0.01 * (hi - lo);
        if !(c > lo + margin * 1e-3 && c < hi - margin * 1e-3) || !c.is_finite() {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok((c, 0.0));
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    // fa/fb may have been halved; the returned residual is what was last
    // computed for that endpoint, which is an upper bound on the true one.
    if fa.abs() <= fb.abs() {
        Ok((a, fa))
    } else {
        Ok((b, fb))
    }
}

/// Plain bisection on a predicate that is `false` at `a` and `true` at `b`.
pub fn bisect_predicate<F, E>(pred: F, a: f64, b: f64, xtol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<bool, E>,
{
    let (a, b) = bisect_bracket(pred, a, b, xtol)?;
    Ok(0.5 * (a + b))
}

/// Like [`bisect_predicate`] but returns the final bracket `(a, b)`, with the
/// predicate still `false` at `a` and `true` at `b`.
pub fn bisect_bracket<F, E>(mut pred: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<bool, E>,
{
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        if pred(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok((a, b))
}
