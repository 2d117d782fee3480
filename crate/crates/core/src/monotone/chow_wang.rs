use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grade, sign_of, spread_ok, GridPoint, HypothesisChecks, Method, MonotoneError, MonotoneOptions, MonotonicityCertificate};
use crate::orbits::{chebyshev_nodes, measure_period, Annulus, Newtonian, OrbitError, OrbitOptions, Subsystem};
use crate::roots::illinois;

/// Where the second derivative of `g` in the cubic term is taken.
///
/// The criterion as usually stated after translating the center to the
/// origin uses the constant `g''(x_c)`; with it the pendulum gives
/// `H = (1 - cos x)^2` and Duffing `x + x^3` gives `-3x^4/2 - x^6/2`, matching
/// their known monotone periods. `Point` evaluates `g''` at `x` instead, a
/// variant kept for comparison; it misjudges the pendulum near the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureAt {
    #[default]
    Center,
    Point,
}

/// The pieces of `H(x) = g^2 + g'' g^3 / (3 g'(x_c)^2) - 2 G g'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChowWangTerms {
    pub x: f64,
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
    pub dg_center: f64,
    /// `G(x) = ∫_{x_c}^x g`.
    pub potential: f64,
    pub h: f64,
    /// `H g'(x_c)^2 / g^4`, which stays of order one at the center; set to
    /// zero when `H` is within rounding of the cancellation of its terms.
    pub normalized: f64,
}

fn newtonian(sys: &Subsystem) -> Result<&Newtonian, MonotoneError> {
    sys.newtonian_data().ok_or(MonotoneError::WrongKind { method: Method::ChowWang, needed: "newtonian" })
}

fn domain<T>(r: Result<T, crate::expr::DomainError>) -> Result<T, MonotoneError> {
    r.map_err(|e| MonotoneError::Orbit(OrbitError::Domain(e)))
}

pub fn chow_wang_terms(sys: &Subsystem, x: f64, curvature: CurvatureAt) -> Result<ChowWangTerms, MonotoneError> {
    let n = newtonian(sys)?;
    let xc = sys.center()[0];
    let dg_center = domain(n.dg(xc))?;
    if dg_center <= 0.0 {
        return Err(MonotoneError::HypothesisViolated { detail: format!("g'({xc}) = {dg_center} is not positive") });
    }
    let g = domain(n.g(x))?;
    let dg = domain(n.dg(x))?;
    let d2g = domain(match curvature {
        CurvatureAt::Center => n.d2g(xc),
        CurvatureAt::Point => n.d2g(x),
    })?;
    let potential = sys.potential_at(x).expect("newtonian")?;
    let t1 = g * g;
    let t2 = d2g * g * g * g / (3.0 * dg_center * dg_center);
    let t3 = -2.0 * potential * dg;
    let h = t1 + t2 + t3;
    // Near the center g and G carry the rounding of x - x_c, which grows
    // like eps |x| / |x - x_c|; a residue below that level is not a sign.
    let conditioning = 64.0 * f64::EPSILON * (x.abs() + xc.abs()) / (x - xc).abs().max(f64::MIN_POSITIVE);
    let cancelled = h.abs() <= conditioning.max(1e-12) * (t1.abs() + t2.abs() + t3.abs());
    let normalized = if cancelled || g == 0.0 { 0.0 } else { h * dg_center * dg_center / (g * g * g * g) };
    Ok(ChowWangTerms { x, g, dg, d2g, dg_center, potential, h, normalized })
}

/// `H(x)` with `g''` taken at the center.
pub fn chow_wang_h(sys: &Subsystem, x: f64) -> Result<f64, MonotoneError> {
    chow_wang_terms(sys, x, CurvatureAt::Center).map(|t| t.h)
}

/// Abscissae where the outer orbit of a Newtonian annulus turns, i.e. the
/// roots of `G(x) = C` on either side of the center.
pub fn outer_turning_points(annulus: &Annulus) -> Result<(f64, f64), OrbitError> {
    let sys = annulus.subsystem();
    let xc = sys.center()[0];
    let level = match annulus.outer.energy {
        Some(e) => e,
        None => sys.energy(annulus.outer.seed).ok_or(OrbitError::InvalidAnnulus { detail: "no energy".into() })??,
    };
    let poly = annulus.outer.polyline();
    let lo = poly.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = poly.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let g = |x: f64| -> Result<f64, OrbitError> { Ok(sys.potential_at(x).expect("newtonian")? - level) };
    let refine = |edge: f64| -> Result<f64, OrbitError> {
        let far = edge + 0.01 * (edge - xc);
        let (f0, f1) = (g(xc)?, g(far)?);
        if f0 * f1 >= 0.0 {
            return Ok(edge);
        }
        Ok(illinois(g, xc, far, f0, f1, 1e-14 * far.abs().max(1.0))?.0)
    };
    Ok((refine(lo)?, refine(hi)?))
}

/// Chow–Wang certificate on `(α, β)`.
///
/// Checks `g'(x_c) > 0`, the sign condition `(x - x_c) g(x) > 0` and
/// `G(α) = G(β)`, then the sign of `H` on Chebyshev points on each side of
/// the center. `H ≡ 0` on the grid yields `isochronous` only after periods
/// at three amplitudes agree.
pub fn certify_chow_wang(
    sys: &Subsystem,
    interval: (f64, f64),
    opts: &MonotoneOptions,
) -> Result<MonotonicityCertificate, MonotoneError> {
    let n = newtonian(sys)?;
    let xc = sys.center()[0];
    let (alpha, beta) = interval;
    if !(alpha.is_finite() && beta.is_finite()) {
        return Err(MonotoneError::HypothesisViolated { detail: "the interval must be finite".into() });
    }
    if !(alpha < xc && xc < beta) {
        return Err(MonotoneError::HypothesisViolated { detail: format!("({alpha}, {beta}) does not contain the center {xc}") });
    }
    let mut checks = HypothesisChecks::default();
    let dg_center = domain(n.dg(xc))?;
    checks.center_slope_positive = Some(dg_center > 0.0);
    if dg_center <= 0.0 {
        return Err(MonotoneError::HypothesisViolated { detail: format!("g'({xc}) = {dg_center} is not positive") });
    }

    let nodes = chebyshev_nodes(opts.points_per_side.max(1));
    let xs: Vec<f64> = [alpha, beta].iter().flat_map(|end| nodes.iter().map(move |s| xc + s * (end - xc))).collect();
    for &x in &xs {
        let g = domain(n.g(x))?;
        if (x - xc) * g <= 0.0 {
            checks.sign_condition = Some(false);
            return Err(MonotoneError::HypothesisViolated { detail: format!("(x - x_c) g(x) > 0 fails at x = {x}") });
        }
    }
    checks.sign_condition = Some(true);

    let (ga, gb) = (sys.potential_at(alpha).expect("newtonian")?, sys.potential_at(beta).expect("newtonian")?);
    let equal = ga > 0.0 && gb > 0.0 && (ga - gb).abs() <= 1e-6 * ga.max(gb);
    checks.equal_potential_ends = Some(equal);
    if !equal {
        return Err(MonotoneError::HypothesisViolated { detail: format!("G(α) = {ga} and G(β) = {gb} differ") });
    }

    let terms: Result<Vec<ChowWangTerms>, MonotoneError> =
        xs.par_iter().map(|x| chow_wang_terms(sys, *x, CurvatureAt::Center)).collect();
    let terms = terms?;
    let thr = opts.sign_tol;
    let grid: Vec<GridPoint> =
        terms.iter().map(|t| GridPoint { x: t.x, value: t.normalized, sign: sign_of(t.normalized, thr) }).collect();
    let values: Vec<f64> = grid.iter().map(|g| g.value).collect();
    let mut periods = Vec::new();
    let verdict = grade(&values, thr, || {
        let reach = (xc - alpha).min(beta - xc);
        let orbit_opts = OrbitOptions::default();
        for f in [0.25, 0.5, 0.75] {
            match measure_period(sys, [xc + f * reach, 0.0], &orbit_opts) {
                Ok(o) => periods.push(o.period),
                Err(_) => return false,
            }
        }
        spread_ok(&periods, opts.period_tol)
    });
    let margin = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let label = if verdict.is_strict() { "criterion satisfied on grid" } else { "criterion not satisfied on grid" };
    Ok(MonotonicityCertificate {
        subsystem: sys.label().to_string(),
        method: Method::ChowWang,
        verdict,
        label: label.into(),
        margin,
        threshold: thr,
        grid,
        checks,
        periods,
        fallback_from: None,
    })
}
