use std::sync::Arc;

use super::{OrbitError, OrbitOptions, Subsystem};
use crate::expr::DomainError;
use crate::geometry::polyline;
use crate::ode::{integrate_until_event_n, Direction, EventSpec, FieldFn, OdeError, Trajectory};
use crate::Point;

/// A periodic orbit sampled uniformly in time.
#[derive(Debug, Clone)]
pub struct ClosedOrbit {
    pub seed: Point,
    /// Minimal period.
    pub period: f64,
    /// Euclidean area enclosed.
    pub area: f64,
    /// Area weighted by `1/|m|` for scaled Hamiltonian subsystems; equals
    /// `area` otherwise.
    pub weighted_area: f64,
    pub energy: Option<f64>,
    /// Orbit coordinate, once the orbit is placed in an annulus.
    pub coordinate: Option<f64>,
    /// Distance between the seed and the first return.
    pub closure_error: f64,
    samples: Vec<Point>,
    dynamics: Option<Dynamics>,
}

#[derive(Debug, Clone)]
struct Dynamics {
    field: FieldFn,
    center: Point,
    path: Arc<Trajectory<3>>,
}

/// First-return data without the sampled path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Trace {
    pub period: f64,
    pub area: f64,
    pub end: Point,
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Integrate from `seed` until the flow comes back to the ray from the
/// center through `seed`. Area accumulates in a third component.
fn first_return(sys: &Subsystem, seed: Point, opts: &OrbitOptions, record: bool) -> Result<(Trace, Option<Trajectory<3>>), OrbitError> {
    let c = sys.center();
    let d = sub(seed, c);
    let len = d[0].hypot(d[1]);
    if len <= 1e-12 * c[0].hypot(c[1]).max(1.0) {
        return Err(OrbitError::SeedAtCenter);
    }
    let dir = [d[0] / len, d[1] / len];
    let field = sys.field();
    let v0 = field.eval(seed)?;
    let speed = v0[0].hypot(v0[1]);
    let transversal = cross(dir, v0);
    if speed == 0.0 {
        return Err(OrbitError::RayTangent { point: seed });
    }
    if transversal.abs() <= 1e-9 * speed {
        return Err(OrbitError::RayTangent { point: seed });
    }
    let direction = if transversal > 0.0 { Direction::Rising } else { Direction::Falling };
    let rhs = |s: &[f64; 3]| -> Result<[f64; 3], DomainError> {
        let v = field.eval([s[0], s[1]])?;
        let area_rate = 0.5 * ((s[0] - c[0]) * v[1] - (s[1] - c[1]) * v[0]);
        Ok([v[0], v[1], area_rate])
    };
    let event = EventSpec::new(move |s: &[f64; 3]| cross(dir, [s[0] - c[0], s[1] - c[1]]), direction)
        .gated(move |s: &[f64; 3]| (s[0] - c[0]) * dir[0] + (s[1] - c[1]) * dir[1] > 0.0);
    let t_lin = sys.linear_period();
    let t_max = opts.max_periods * t_lin;
    let mut tol = opts.tol;
    let cap = t_lin / 50.0;
    tol.max_step = Some(tol.max_step.map_or(cap, |m| m.min(cap)));
    let hit = integrate_until_event_n(&rhs, [seed[0], seed[1], 0.0], &event, t_max, &tol, record).map_err(|e| match e {
        OdeError::NoEventBeforeTmax { t_max } => OrbitError::NotPeriodic { t_max },
        other => OrbitError::Integration(other),
    })?;
    let trace = Trace { period: hit.time, area: hit.state[2].abs(), end: [hit.state[0], hit.state[1]] };
    Ok((trace, hit.trajectory))
}

/// Period and enclosed area of the orbit through `seed`, no path kept.
pub(crate) fn trace(sys: &Subsystem, seed: Point, opts: &OrbitOptions) -> Result<Trace, OrbitError> {
    let (t, _) = first_return(sys, seed, opts, false)?;
    let miss = sub(t.end, seed);
    let distance = miss[0].hypot(miss[1]);
    if distance > opts.closure_tol {
        return Err(OrbitError::ReturnedToWrongPoint { distance });
    }
    Ok(t)
}

/// Period of the closed orbit through `seed`, without sampling the path.
pub fn return_time(sys: &Subsystem, seed: Point, opts: &OrbitOptions) -> Result<f64, OrbitError> {
    trace(sys, seed, opts).map(|t| t.period)
}

/// Measure the closed orbit through `seed`.
///
/// The period is the first return time to the ray from the center through
/// the seed, crossing in the direction of the flow at the seed.
pub fn measure_period(sys: &Subsystem, seed: Point, opts: &OrbitOptions) -> Result<ClosedOrbit, OrbitError> {
    let (trace, path) = first_return(sys, seed, opts, true)?;
    let miss = sub(trace.end, seed);
    let closure_error = miss[0].hypot(miss[1]);
    if closure_error > opts.closure_tol {
        return Err(OrbitError::ReturnedToWrongPoint { distance: closure_error });
    }
    let path = Arc::new(path.expect("recording was requested"));
    let n = opts.samples.max(512);
    let samples: Vec<Point> = path.sample_uniform(n + 1).into_iter().map(|(_, s)| [s[0], s[1]]).collect();
    let mut orbit = ClosedOrbit {
        seed,
        period: trace.period,
        area: trace.area,
        weighted_area: trace.area,
        energy: sys.energy(seed).transpose()?,
        coordinate: None,
        closure_error,
        samples,
        dynamics: Some(Dynamics { field: sys.field().clone(), center: sys.center(), path }),
    };
    if let Some(w) = weighted_area(sys, &orbit)? {
        orbit.weighted_area = w;
    }
    Ok(orbit)
}

// Periodic trapezoid rule on ∮ P dy with P the x-primitive of 1/|m|.
fn weighted_area(sys: &Subsystem, orbit: &ClosedOrbit) -> Result<Option<f64>, OrbitError> {
    if sys.scale_expr().is_none() {
        return Ok(None);
    }
    let n = orbit.samples.len() - 1;
    let dt = orbit.period / n as f64;
    let mut acc = 0.0;
    for p in &orbit.samples[..n] {
        let prim = sys.weight_primitive(*p).expect("scale present")?;
        let v = sys.field().eval(*p)?;
        acc += prim * v[1];
    }
    Ok(Some((acc * dt).abs()))
}

impl ClosedOrbit {
    /// An orbit known only as a closed polyline (no dynamics attached).
    pub fn from_polyline(points: Vec<Point>, period: f64) -> Result<Self, OrbitError> {
        if points.len() < 4 {
            return Err(OrbitError::SelfIntersecting);
        }
        let area = polyline::shoelace(&points).abs();
        Ok(ClosedOrbit {
            seed: points[0],
            period,
            area,
            weighted_area: area,
            energy: None,
            coordinate: None,
            closure_error: 0.0,
            samples: points,
            dynamics: None,
        })
    }

    /// Time-uniform samples; the last repeats the first up to closure error.
    pub fn polyline(&self) -> &[Point] {
        &self.samples
    }

    /// Point at time `t` along the orbit, measured from the seed.
    pub fn point_at(&self, t: f64) -> Point {
        match &self.dynamics {
            Some(d) => {
                let tt = t.rem_euclid(self.period).min(d.path.t_end());
                let s = d.path.at(tt).expect("time within one period");
                [s[0], s[1]]
            }
            None => {
                let n = self.samples.len() - 1;
                let u = t.rem_euclid(self.period) / self.period * n as f64;
                let k = (u.floor() as usize).min(n - 1);
                let f = u - k as f64;
                let (a, b) = (self.samples[k], self.samples[k + 1]);
                [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
            }
        }
    }

    /// Re-sample the orbit with `n` time-uniform points (plus the closing one).
    pub fn resampled(&self, n: usize) -> Vec<Point> {
        (0..=n).map(|k| self.point_at(self.period * k as f64 / n as f64)).collect()
    }

    pub fn has_dynamics(&self) -> bool {
        self.dynamics.is_some()
    }

    pub fn field(&self) -> Option<&FieldFn> {
        self.dynamics.as_ref().map(|d| &d.field)
    }

    /// Point-in-polygon test against the sampled orbit.
    pub fn encloses(&self, p: Point) -> bool {
        polyline::contains(&self.samples, p)
    }

    pub fn is_simple(&self) -> bool {
        polyline::is_simple_closed(&self.samples)
    }

    /// Time in `[0, period)` of the orbit point closest to `p`.
    ///
    /// Starts from the nearest sample and, with dynamics attached, polishes
    /// the foot point by Newton steps on `(x(t) - p) · x'(t) = 0`.
    pub fn time_of(&self, p: Point) -> f64 {
        let n = self.samples.len() - 1;
        let dt = self.period / n as f64;
        let k = (0..n)
            .min_by(|a, b| {
                let da = sub(self.samples[*a], p);
                let db = sub(self.samples[*b], p);
                (da[0] * da[0] + da[1] * da[1]).total_cmp(&(db[0] * db[0] + db[1] * db[1]))
            })
            .expect("orbit has samples");
        let mut t = k as f64 * dt;
        if let Some(d) = &self.dynamics {
            for _ in 0..20 {
                let q = self.point_at(t);
                let Ok(v) = d.field.eval(q) else { break };
                let speed2 = v[0] * v[0] + v[1] * v[1];
                if speed2 == 0.0 {
                    break;
                }
                let r = sub(q, p);
                let step = -(r[0] * v[0] + r[1] * v[1]) / speed2;
                let step = step.clamp(-dt, dt);
                t += step;
                if step.abs() <= 1e-15 * self.period {
                    break;
                }
            }
        }
        t.rem_euclid(self.period)
    }

    /// Time at which the orbit crosses the ray `center + λ dir`, λ > 0.
    pub fn ray_crossing(&self, center: Point, dir: Point) -> Option<(f64, Point)> {
        let n = self.samples.len() - 1;
        let dt = self.period / n as f64;
        let h = |p: Point| cross(dir, sub(p, center));
        let ahead = |p: Point| (p[0] - center[0]) * dir[0] + (p[1] - center[1]) * dir[1] > 0.0;
        for k in 0..n {
            let (a, b) = (self.samples[k], self.samples[k + 1]);
            let (ha, hb) = (h(a), h(b));
            if ha == 0.0 && ahead(a) {
                return Some((k as f64 * dt, a));
            }
            if ha * hb < 0.0 && (ahead(a) || ahead(b)) {
                let f = |t: f64| Ok::<_, std::convert::Infallible>(h(self.point_at(t)));
                let Ok((t, _)) = crate::roots::illinois(f, k as f64 * dt, (k + 1) as f64 * dt, ha, hb, 1e-14 * self.period);
                let p = self.point_at(t);
                if ahead(p) {
                    return Some((t, p));
                }
            }
        }
        None
    }
}

/// Area enclosed by a closed orbit.
///
/// With dynamics attached, the Green integral `½∮(x dy − y dx)` is applied
/// with the periodic trapezoid rule at doubling resolution until two
/// successive values agree to `area_tol` (relative). A bare polyline falls
/// back to the shoelace formula after a simplicity check.
pub fn enclosed_area(orbit: &ClosedOrbit, area_tol: f64) -> Result<f64, OrbitError> {
    let Some(d) = &orbit.dynamics else {
        if orbit.samples.len() < 4 || !orbit.is_simple() {
            return Err(OrbitError::SelfIntersecting);
        }
        let a = polyline::shoelace(&orbit.samples).abs();
        if a == 0.0 {
            return Err(OrbitError::SelfIntersecting);
        }
        return Ok(a);
    };
    if !orbit.is_simple() {
        return Err(OrbitError::SelfIntersecting);
    }
    let green = |n: usize| -> Result<f64, OrbitError> {
        let dt = orbit.period / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let p = orbit.point_at(k as f64 * dt);
            let v = d.field.eval(p)?;
            acc += (p[0] - d.center[0]) * v[1] - (p[1] - d.center[1]) * v[0];
        }
        Ok((0.5 * acc * dt).abs())
    };
    let mut n = 256;
    let mut prev = green(n)?;
    while n < 1 << 20 {
        n *= 2;
        let next = green(n)?;
        if (next - prev).abs() <= area_tol * next {
            return Ok(next);
        }
        prev = next;
    }
    Err(OrbitError::Unresolved { what: "enclosed area".into() })
}
