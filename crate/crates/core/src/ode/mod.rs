//! Adaptive integration of autonomous ODEs with dense output and events.
//!
//! The stepper is generic over the state dimension so that orbit
//! measurement can carry extra quadrature components (enclosed area)
//! alongside the planar state. The planar entry points take a [`FieldFn`].

mod dopri5;
mod event;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dopri5::DenseSegment;
pub use event::{integrate_until_event, integrate_until_event_n, Direction, EventHit, EventSpec};

use crate::expr::{CompiledExpr, DomainError, Expr};
use crate::Point;
use dopri5::Stepper;

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step length, if any.
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Required residual of the event function at a reported event.
    pub event_tol: f64,
    /// Width of the time bracket at which event refinement stops.
    pub time_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: None,
            max_steps: 50_000_000,
            event_tol: 1e-10,
            time_tol: 1e-12,
        }
    }
}

impl Tolerances {
    /// The tighter pair used for long switching horizons.
    pub fn precise() -> Self {
        Tolerances { rtol: 1e-12, atol: 1e-14, ..Self::default() }
    }

    pub fn with(rtol: f64, atol: f64) -> Self {
        Tolerances { rtol, atol, ..Self::default() }
    }

    pub fn with_max_step(self, max_step: f64) -> Self {
        Tolerances { max_step: Some(max_step), ..self }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.rtol.is_finite()
            && self.atol.is_finite()
            && self.event_tol > 0.0
            && self.time_tol > 0.0
            && self.max_step.is_none_or(|m| m > 0.0);
        if ok {
            Ok(())
        } else {
            Err(OdeError::BadTolerances(*self))
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("state became non-finite near t = {t}")]
    NonFiniteState { t: f64 },
    #[error("vector field undefined near t = {t}: {source}")]
    FieldUndefined { t: f64, source: DomainError },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("no event before t_max = {t_max}")]
    NoEventBeforeTmax { t_max: f64 },
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
    #[error("invalid tolerances {0:?}")]
    BadTolerances(Tolerances),
}

/// Counters accumulated by the stepper.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl Stats {
    pub fn absorb(&mut self, other: Stats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

type FieldClosure = dyn Fn(Point) -> Result<Point, DomainError> + Send + Sync;

/// An autonomous planar vector field.
#[derive(Clone)]
pub struct FieldFn {
    label: String,
    note: String,
    f: Arc<FieldClosure>,
}

impl fmt::Debug for FieldFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldFn").field("label", &self.label).field("note", &self.note).finish()
    }
}

impl FieldFn {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Point) -> Result<Point, DomainError> + Send + Sync + 'static,
    {
        FieldFn { label: label.into(), note: String::new(), f: Arc::new(f) }
    }

    /// Field from two component expressions.
    pub fn from_exprs(label: impl Into<String>, fx: &Expr, fy: &Expr) -> Self {
        let cx = CompiledExpr::new(fx);
        let cy = CompiledExpr::new(fy);
        let mut field = FieldFn::new(label, move |p: Point| Ok([cx.eval(p[0], p[1])?, cy.eval(p[0], p[1])?]));
        field.note = format!("({fx}, {fy})");
        field
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Free-form remark, e.g. where the field is Lipschitz.
    pub fn note(&self) -> &str {
        &self.note
    }

    #[inline]
    pub fn eval(&self, p: Point) -> Result<Point, DomainError> {
        (self.f)(p)
    }
}

/// Accepted nodes of an integration plus the interpolants between them.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    segments: Vec<DenseSegment<N>>,
    pub stats: Stats,
}

impl<const N: usize> Trajectory<N> {
    /// Order of the interpolant between nodes.
    pub const INTERPOLATION_ORDER: usize = 4;

    fn start(t0: f64, y0: [f64; N]) -> Self {
        Trajectory { times: vec![t0], states: vec![y0], segments: Vec::new(), stats: Stats::default() }
    }

    pub(crate) fn push(&mut self, seg: DenseSegment<N>) {
        self.times.push(seg.t1);
        self.states.push(seg.end());
        self.segments.push(seg);
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has a start node")
    }

    pub fn final_state(&self) -> [f64; N] {
        *self.states.last().expect("trajectory has a start node")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn segments(&self) -> &[DenseSegment<N>] {
        &self.segments
    }

    /// Dense-output value at `t`, or `None` outside the covered interval.
    pub fn at(&self, t: f64) -> Option<[f64; N]> {
        if !(t >= self.t_start() && t <= self.t_end()) {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.states[0]);
        }
        let idx = self.times.partition_point(|&tk| tk <= t);
        // idx is the first node strictly after t; the segment before it holds t.
        let seg = idx.saturating_sub(1).min(self.segments.len() - 1);
        Some(self.segments[seg].eval(t))
    }

    /// `n` samples equally spaced in time, both ends included.
    pub fn sample_uniform(&self, n: usize) -> Vec<(f64, [f64; N])> {
        let n = n.max(2);
        let (a, b) = (self.t_start(), self.t_end());
        (0..n)
            .map(|k| {
                let t = if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                (t, self.at(t).expect("sample time lies in range"))
            })
            .collect()
    }
}

impl Trajectory<2> {
    /// Write the accepted nodes as `t,x,y` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y"])?;
        for (t, s) in self.times.iter().zip(&self.states) {
            w.serialize((t, s[0], s[1]))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), csv::Error> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Integrate `y' = f(y)` from `y0` over `[0, t_final]`, keeping every step.
pub fn integrate_system<const N: usize, F>(
    f: &F,
    y0: [f64; N],
    t_final: f64,
    tol: &Tolerances,
) -> Result<Trajectory<N>, OdeError>
where
    F: Fn(&[f64; N]) -> Result<[f64; N], DomainError>,
{
    check_request(t_final, tol)?;
    let mut traj = Trajectory::start(0.0, y0);
    if t_final == 0.0 {
        return Ok(traj);
    }
    let mut st = Stepper::new(f, tol, 0.0, y0, t_final)?;
    while st.t < t_final {
        let seg = st.step(t_final)?;
        traj.push(seg);
    }
    traj.stats = st.stats;
    Ok(traj)
}

/// Like [`integrate_system`] but only the end state is kept.
pub fn flow_system<const N: usize, F>(
    f: &F,
    y0: [f64; N],
    t_final: f64,
    tol: &Tolerances,
) -> Result<([f64; N], Stats), OdeError>
where
    F: Fn(&[f64; N]) -> Result<[f64; N], DomainError>,
{
    check_request(t_final, tol)?;
    if t_final == 0.0 {
        return Ok((y0, Stats::default()));
    }
    let mut st = Stepper::new(f, tol, 0.0, y0, t_final)?;
    while st.t < t_final {
        st.step(t_final)?;
    }
    Ok((st.y, st.stats))
}

fn check_request(t_final: f64, tol: &Tolerances) -> Result<(), OdeError> {
    tol.validate()?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(OdeError::InvalidRequest(format!("t_final must be finite and non-negative, got {t_final}")));
    }
    Ok(())
}

/// Planar solution of `field` from `x0` on `[0, t_final]`.
pub fn integrate(field: &FieldFn, x0: Point, t_final: f64, tol: &Tolerances) -> Result<Trajectory<2>, OdeError> {
    integrate_system(&|y: &[f64; 2]| field.eval(*y), x0, t_final, tol)
}

/// The time-`t` flow map `φ(t, x0)`.
pub fn flow(field: &FieldFn, x0: Point, t: f64, tol: &Tolerances) -> Result<Point, OdeError> {
    flow_system(&|y: &[f64; 2]| field.eval(*y), x0, t, tol).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation() -> FieldFn {
        FieldFn::new("rotation", |p: Point| Ok([-p[1], p[0]]))
    }

    #[test]
    fn full_rotation_returns_home() {
        let traj = integrate(&rotation(), [1.0, 0.0], 2.0 * PI, &Tolerances::default()).unwrap();
        let end = traj.final_state();
        assert!((end[0] - 1.0).abs() < 1e-8 && end[1].abs() < 1e-8, "{end:?}");
        assert!(traj.stats.steps > 10);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_field_gives_constant_solution() {
        let zero = FieldFn::new("zero", |_| Ok([0.0, 0.0]));
        let traj = integrate(&zero, [0.3, -2.0], 5.0, &Tolerances::default()).unwrap();
        assert!(traj.states.iter().all(|s| *s == [0.3, -2.0]));
    }

    #[test]
    fn dense_output_hits_nodes_exactly_and_interpolates_accurately() {
        let traj = integrate(&rotation(), [1.0, 0.0], 3.0, &Tolerances::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert_eq!(traj.at(*t).unwrap(), *s);
        }
        for k in 0..100 {
            let t = 3.0 * k as f64 / 99.0;
            let p = traj.at(t).unwrap();
            assert!((p[0] - t.cos()).abs() < 1e-8 && (p[1] - t.sin()).abs() < 1e-8);
        }
        assert!(traj.at(3.5).is_none());
    }

    #[test]
    fn tighter_tolerances_never_hurt_on_the_oscillator() {
        let mut last = f64::INFINITY;
        for k in 0..8 {
            let rtol = 1e-6 / 2f64.powi(k * 2);
            let tol = Tolerances::with(rtol, rtol * 1e-2);
            let end = flow(&rotation(), [1.0, 0.0], 2.0 * PI, &tol).unwrap();
            let err = ((end[0] - 1.0).powi(2) + end[1].powi(2)).sqrt();
            assert!(err <= last * 1.5, "rtol {rtol}: {err} after {last}");
            last = err;
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let blow = FieldFn::new("blow", |p: Point| Ok([p[0] * p[0], 0.0]));
        let err = integrate(&blow, [1.0, 0.0], 2.0, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, OdeError::StepSizeUnderflow { .. } | OdeError::NonFiniteState { .. }), "{err}");
    }

    #[test]
    fn undefined_field_is_reported() {
        let e = FieldFn::from_exprs("root", &Expr::parse("-1").unwrap(), &Expr::parse("sqrt(x)").unwrap());
        let err = integrate(&e, [1.0, 0.0], 3.0, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, OdeError::FieldUndefined { .. }), "{err}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let traj = integrate(&rotation(), [1.0, 0.0], 1.0, &Tolerances::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y\n0.0,1.0,0.0\n"));
        assert_eq!(text.lines().count(), traj.len() + 1);
    }
}
