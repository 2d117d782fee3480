use std::convert::Infallible;

use serde::{Deserialize, Serialize};

use super::dopri5::{DenseSegment, Stepper};
use super::{check_request, FieldFn, OdeError, Stats, Tolerances, Trajectory};
use crate::expr::DomainError;
use crate::roots::illinois;
use crate::Point;

/// Which sign changes of the event function count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

impl Direction {
    fn crosses(self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Any => rising || falling,
        }
    }
}

type EventFn<'a, const N: usize> = Box<dyn Fn(&[f64; N]) -> f64 + 'a>;
type GateFn<'a, const N: usize> = Box<dyn Fn(&[f64; N]) -> bool + 'a>;

/// A scalar section `h(state) = 0` crossed in a given direction.
///
/// The optional gate discards roots where it returns `false`; orbit
/// measurement uses it to accept only the half of a line that forms the
/// ray through the seed.
pub struct EventSpec<'a, const N: usize> {
    function: EventFn<'a, N>,
    pub direction: Direction,
    /// Stop at this crossing (1 = the first).
    pub count: usize,
    gate: Option<GateFn<'a, N>>,
}

impl<'a, const N: usize> EventSpec<'a, N> {
    pub fn new(function: impl Fn(&[f64; N]) -> f64 + 'a, direction: Direction) -> Self {
        EventSpec { function: Box::new(function), direction, count: 1, gate: None }
    }

    pub fn nth(mut self, count: usize) -> Self {
        self.count = count.max(1);
        self
    }

    pub fn gated(mut self, gate: impl Fn(&[f64; N]) -> bool + 'a) -> Self {
        self.gate = Some(Box::new(gate));
        self
    }

    pub fn value(&self, state: &[f64; N]) -> f64 {
        (self.function)(state)
    }

    fn admits(&self, state: &[f64; N]) -> bool {
        self.gate.as_ref().is_none_or(|g| g(state))
    }
}

/// Result of integrating up to an event.
#[derive(Debug, Clone)]
pub struct EventHit<const N: usize> {
    pub time: f64,
    pub state: [f64; N],
    /// The path up to the event, when recording was requested.
    pub trajectory: Option<Trajectory<N>>,
    pub stats: Stats,
}

fn locate<const N: usize>(
    event: &EventSpec<'_, N>,
    seg: &DenseSegment<N>,
    g0: f64,
    g1: f64,
    tol: &Tolerances,
) -> (f64, [f64; N]) {
    let h = |t: f64| Ok::<_, Infallible>(event.value(&seg.eval(t)));
    let Ok((mut t, mut g)) = illinois(h, seg.t0, seg.t1, g0, g1, tol.time_tol);
    if g.abs() > tol.event_tol {
        // Steep event function: keep going to the resolution of f64.
        let Ok(r) = illinois(h, seg.t0, seg.t1, g0, g1, 0.0);
        (t, g) = r;
    }
    let _ = g;
    (t, seg.eval(t))
}

/// Integrate until the `event.count`-th admissible crossing.
///
/// A start point lying on the section (within `event_tol`) is not itself
/// counted as a crossing.
pub fn integrate_until_event_n<const N: usize, F>(
    f: &F,
    y0: [f64; N],
    event: &EventSpec<'_, N>,
    t_max: f64,
    tol: &Tolerances,
    record: bool,
) -> Result<EventHit<N>, OdeError>
where
    F: Fn(&[f64; N]) -> Result<[f64; N], DomainError>,
{
    check_request(t_max, tol)?;
    if t_max == 0.0 {
        return Err(OdeError::NoEventBeforeTmax { t_max });
    }
    let mut st = Stepper::new(f, tol, 0.0, y0, t_max)?;
    let mut traj = record.then(|| Trajectory::start(0.0, y0));
    let mut g_prev = event.value(&y0);
    if g_prev.abs() <= tol.event_tol {
        g_prev = 0.0;
    }
    let mut hits = 0;
    while st.t < t_max {
        let seg = st.step(t_max)?;
        let g_new = event.value(&seg.end());
        if event.direction.crosses(g_prev, g_new) {
            let g_start = if g_prev == 0.0 { 0.0 } else { event.value(&seg.start()) };
            let (t, state) = locate(event, &seg, g_start, g_new, tol);
            if event.admits(&state) {
                hits += 1;
                if hits == event.count {
                    if let Some(tr) = traj.as_mut() {
                        tr.push(seg.truncated(t));
                        tr.stats = st.stats;
                    }
                    return Ok(EventHit { time: t, state, trajectory: traj, stats: st.stats });
                }
            }
        }
        if let Some(tr) = traj.as_mut() {
            tr.push(seg);
        }
        g_prev = g_new;
    }
    Err(OdeError::NoEventBeforeTmax { t_max })
}

/// Planar version of [`integrate_until_event_n`] that records the path.
pub fn integrate_until_event(
    field: &FieldFn,
    x0: Point,
    event: &EventSpec<'_, 2>,
    t_max: f64,
    tol: &Tolerances,
) -> Result<EventHit<2>, OdeError> {
    integrate_until_event_n(&|y: &[f64; 2]| field.eval(*y), x0, event, t_max, tol, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation() -> FieldFn {
        FieldFn::new("rotation", |p: Point| Ok([-p[1], p[0]]))
    }

    #[test]
    fn rising_crossing_after_full_turn() {
        let ev = EventSpec::new(|s: &[f64; 2]| s[1], Direction::Rising);
        let hit = integrate_until_event(&rotation(), [1.0, 0.0], &ev, 10.0, &Tolerances::default()).unwrap();
        assert!((hit.time - 2.0 * PI).abs() < 1e-8, "{}", hit.time);
        assert!(hit.state[1].abs() <= 1e-10);
        let traj = hit.trajectory.unwrap();
        assert_eq!(traj.t_end(), hit.time);
        assert_eq!(traj.final_state(), hit.state);
    }

    #[test]
    fn falling_crossing_after_half_turn() {
        let ev = EventSpec::new(|s: &[f64; 2]| s[1], Direction::Falling);
        let hit = integrate_until_event(&rotation(), [1.0, 0.0], &ev, 10.0, &Tolerances::default()).unwrap();
        assert!((hit.time - PI).abs() < 1e-8);
    }

    #[test]
    fn counts_and_gates() {
        let any = EventSpec::new(|s: &[f64; 2]| s[1], Direction::Any).nth(3);
        let hit = integrate_until_event(&rotation(), [1.0, 0.0], &any, 20.0, &Tolerances::default()).unwrap();
        assert!((hit.time - 3.0 * PI).abs() < 1e-8);
        let right_half = EventSpec::new(|s: &[f64; 2]| s[1], Direction::Any).gated(|s| s[0] > 0.0);
        let hit = integrate_until_event(&rotation(), [1.0, 0.0], &right_half, 20.0, &Tolerances::default()).unwrap();
        assert!((hit.time - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn missing_event_is_an_error() {
        let ev = EventSpec::new(|s: &[f64; 2]| s[0] - 5.0, Direction::Any);
        let err = integrate_until_event(&rotation(), [1.0, 0.0], &ev, 10.0, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, OdeError::NoEventBeforeTmax { .. }));
    }
}
