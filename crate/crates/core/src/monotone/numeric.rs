use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grade, sign_of, spread_ok, GridPoint, HypothesisChecks, Method, MonotoneError, MonotoneOptions, MonotonicityCertificate};
use crate::orbits::{Annulus, CoordinateScale, OrbitError};

type MonoResult<T> = Result<T, MonotoneError>;

/// Derivative at `x[1]` of the parabola through three points, evaluated at
/// `at`.
fn quadratic_slope(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let d012 = (d12 - d01) / (x[2] - x[0]);
    d01 + d012 * ((at - x[0]) + (at - x[1]))
}

/// Numeric certificate from the period profile.
///
/// The period is sampled at both boundary orbits and `n_grid` interior
/// Chebyshev nodes of the orbit coordinate, and `dT/dc` is estimated at
/// every node from the parabola through it and its neighbours. Values whose
/// size is below the profile's resolution (period tolerance over node
/// spacing) do not count as signed. The result is evidence, not proof.
pub fn certify_numeric(annulus: &Annulus, n_grid: usize, opts: &MonotoneOptions) -> MonoResult<MonotonicityCertificate> {
    if n_grid < 5 {
        return Err(MonotoneError::GridTooSmall { n: n_grid, min: 5 });
    }
    let profile = annulus.period_profile(n_grid)?;
    let c: Vec<f64> = profile.entries.iter().map(|e| e.c).collect();
    let t: Vec<f64> = profile.entries.iter().map(|e| e.period).collect();
    let n = c.len();
    let t_max = t.iter().copied().fold(0.0, f64::max);
    let noise = opts.period_tol * t_max;
    let mut grid = Vec::with_capacity(n);
    let mut threshold = opts.sign_tol;
    for k in 0..n {
        let m = k.clamp(1, n - 2);
        let slope = quadratic_slope([c[m - 1], c[m], c[m + 1]], [t[m - 1], t[m], t[m + 1]], c[k]);
        let spacing = (c[m + 1] - c[m - 1]).min(c[m] - c[m - 1]).min(c[m + 1] - c[m]);
        threshold = threshold.max(noise / spacing);
        grid.push(GridPoint { x: c[k], value: slope, sign: 0 });
    }
    for g in &mut grid {
        g.sign = sign_of(g.value, threshold);
    }
    let values: Vec<f64> = grid.iter().map(|g| g.value).collect();
    let verdict = grade(&values, threshold, || spread_ok(&t, opts.period_tol));
    let margin = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let mut checks = HypothesisChecks::default();
    checks.notes.push("values are dT/dc along the outward orbit coordinate".into());
    Ok(MonotonicityCertificate {
        subsystem: annulus.subsystem().label().to_string(),
        method: Method::NumericArea,
        verdict,
        label: "evidence".into(),
        margin,
        threshold,
        grid,
        checks,
        periods: t,
        fallback_from: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaPeriodRow {
    pub h: f64,
    pub area_derivative: f64,
    pub period: f64,
    pub rel_error: f64,
}

/// Finite-difference check that the energy derivative of the (weighted)
/// enclosed area equals the period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AreaPeriodCheck {
    pub rows: Vec<AreaPeriodRow>,
    pub max_rel_error: f64,
    pub rel_tol: f64,
    pub passed: bool,
}

/// Compare `dA/dh` with `T(h)` at `n` evenly spaced interior energies of an
/// energy-scaled annulus, with a five-point central difference.
pub fn area_period_check(annulus: &Annulus, n: usize, rel_tol: f64) -> MonoResult<AreaPeriodCheck> {
    let CoordinateScale::Energy { inner, outer } = annulus.scale else {
        return Err(MonotoneError::Orbit(OrbitError::InvalidAnnulus {
            detail: "the area-period check needs an energy coordinate".into(),
        }));
    };
    let span = outer - inner;
    let dc = 1e-2 / (n + 1) as f64;
    let rows: Result<Vec<AreaPeriodRow>, OrbitError> = (1..=n)
        .into_par_iter()
        .map(|k| {
            let c = k as f64 / (n + 1) as f64;
            let area = |c: f64| annulus.orbit_from_coordinate(c).map(|o| o.weighted_area);
            let (m2, m1, p1, p2) = (area(c - 2.0 * dc)?, area(c - dc)?, area(c + dc)?, area(c + 2.0 * dc)?);
            let d_area_dc = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * dc);
            let area_derivative = d_area_dc / span.abs();
            let period = annulus.period_at(c)?;
            Ok(AreaPeriodRow { h: inner + c * span, area_derivative, period, rel_error: (area_derivative - period).abs() / period })
        })
        .collect();
    let rows = rows?;
    let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(AreaPeriodCheck { rows, max_rel_error, rel_tol, passed: max_rel_error <= rel_tol })
}
