//! Strict monotonicity of the period function on an annulus.
//!
//! Two routes: a numeric one that differentiates the sampled period profile
//! (equivalently the second derivative of the enclosed area in the energy),
//! and the Chow–Wang sign test for Newtonian subsystems `x'' + g(x) = 0`.

mod chow_wang;
mod numeric;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use chow_wang::{certify_chow_wang, chow_wang_h, chow_wang_terms, outer_turning_points, ChowWangTerms, CurvatureAt};
pub use numeric::{area_period_check, certify_numeric, AreaPeriodCheck, AreaPeriodRow};

use crate::orbits::{Annulus, OrbitError, SubsystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "numeric-area")]
    NumericArea,
    #[serde(rename = "chow-wang")]
    ChowWang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Increasing,
    Decreasing,
    Isochronous,
    Inconclusive,
}

impl Verdict {
    pub fn is_strict(self) -> bool {
        matches!(self, Verdict::Increasing | Verdict::Decreasing)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Increasing => "increasing",
            Verdict::Decreasing => "decreasing",
            Verdict::Isochronous => "isochronous",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub value: f64,
    pub sign: i8,
}

/// Outcome of the side conditions checked along the way. `None` means the
/// check does not apply to the method or was skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisChecks {
    /// `(x - x_c) g(x) > 0` on the punctured grid.
    pub sign_condition: Option<bool>,
    /// `g'(x_c) > 0`.
    pub center_slope_positive: Option<bool>,
    /// `G(α) = G(β)` for a user-supplied interval.
    pub equal_potential_ends: Option<bool>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotoneOptions {
    /// Smallest normalized value that counts as a strict sign.
    pub sign_tol: f64,
    /// Relative spread below which sampled periods count as equal.
    pub period_tol: f64,
    /// Chebyshev points on each side of the center for Chow–Wang.
    pub points_per_side: usize,
    /// Interior profile nodes for the numeric certificate.
    pub n_grid: usize,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        MonotoneOptions { sign_tol: 1e-9, period_tol: 1e-8, points_per_side: 257, n_grid: 17 }
    }
}

/// Verdict on the monotonicity of the period function, with its evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityCertificate {
    pub subsystem: String,
    pub method: Method,
    pub verdict: Verdict,
    /// `"evidence"` for numeric certificates, `"criterion satisfied on
    /// grid"` for Chow–Wang ones.
    pub label: String,
    /// Smallest `|value|` over the grid.
    pub margin: f64,
    /// Threshold a value had to clear to count as signed.
    pub threshold: f64,
    pub grid: Vec<GridPoint>,
    pub checks: HypothesisChecks,
    /// Periods sampled for the isochronous confirmation or the profile.
    pub periods: Vec<f64>,
    /// The Chow–Wang attempt that was inconclusive, when this certificate
    /// is its numeric fallback.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_from: Option<Box<MonotonicityCertificate>>,
}

impl MonotonicityCertificate {
    pub fn write_grid_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value", "sign"])?;
        for g in &self.grid {
            w.write_record([g.x.to_string(), g.value.to_string(), g.sign.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum MonotoneError {
    #[error("hypothesis violated: {detail}")]
    HypothesisViolated { detail: String },
    #[error("{method:?} needs a {needed} subsystem")]
    WrongKind { method: Method, needed: &'static str },
    #[error("grid of {n} points is too small (need at least {min})")]
    GridTooSmall { n: usize, min: usize },
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

fn sign_of(v: f64, thr: f64) -> i8 {
    if v > thr {
        1
    } else if v < -thr {
        -1
    } else {
        0
    }
}

/// Uniform sign across the grid, or the isochronous/inconclusive outcome.
fn grade(values: &[f64], thr: f64, periods_agree: impl FnOnce() -> bool) -> Verdict {
    if values.iter().all(|v| *v > thr) {
        Verdict::Increasing
    } else if values.iter().all(|v| *v < -thr) {
        Verdict::Decreasing
    } else if values.iter().all(|v| v.abs() <= thr) && periods_agree() {
        Verdict::Isochronous
    } else {
        Verdict::Inconclusive
    }
}

fn spread_ok(periods: &[f64], tol: f64) -> bool {
    let max = periods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = periods.iter().copied().fold(f64::INFINITY, f64::min);
    !periods.is_empty() && max - min <= tol * max
}

/// Chow–Wang for Newtonian annuli, on the interval spanned by the outer
/// orbit; the numeric certificate otherwise, and whenever Chow–Wang cannot
/// decide.
pub fn certify(annulus: &Annulus, opts: &MonotoneOptions) -> Result<MonotonicityCertificate, MonotoneError> {
    let sys = annulus.subsystem();
    if sys.kind() != SubsystemKind::Newtonian {
        return certify_numeric(annulus, opts.n_grid, opts);
    }
    let attempt = outer_turning_points(annulus)
        .map_err(MonotoneError::from)
        .and_then(|interval| certify_chow_wang(sys, interval, opts));
    match attempt {
        Ok(cw) if cw.verdict.is_strict() => Ok(cw),
        // An isochronous center is a failure of the mechanism, not of the test.
        Ok(cw) if cw.verdict == Verdict::Isochronous => Ok(cw),
        Ok(cw) => {
            let mut num = certify_numeric(annulus, opts.n_grid, opts)?;
            num.fallback_from = Some(Box::new(cw));
            Ok(num)
        }
        Err(e) => {
            let mut num = certify_numeric(annulus, opts.n_grid, opts)?;
            num.checks.notes.push(format!("Chow–Wang not applicable: {e}"));
            Ok(num)
        }
    }
}
