use std::collections::HashMap;

use serde::Serialize;

use super::{snapped_floor, SwitchingError, SwitchingSchedule};
use crate::geometry::{polyline, ArcRole, QuadArc, Quadrilateral};
use crate::orbits::{ClosedOrbit, OrbitError};
use crate::roots::illinois;
use crate::Point;

/// A stretch of a closed orbit, parametrized by `f ∈ [0, 1]` uniformly in
/// time. A negative duration runs against the flow.
#[derive(Debug, Clone)]
pub struct OrbitArc {
    pub orbit: ClosedOrbit,
    pub t0: f64,
    pub duration: f64,
}

impl OrbitArc {
    pub fn point(&self, f: f64) -> Point {
        self.orbit.point_at(self.t0 + f * self.duration)
    }

    /// `n + 1` points including both ends.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        (0..=n).map(|k| self.point(k as f64 / n as f64)).collect()
    }

    pub fn reversed(&self) -> OrbitArc {
        OrbitArc { orbit: self.orbit.clone(), t0: self.t0 + self.duration, duration: -self.duration }
    }

    /// Sub-arc between fractions `a` and `b` (either order).
    pub fn sub(&self, a: f64, b: f64) -> OrbitArc {
        OrbitArc { orbit: self.orbit.clone(), t0: self.t0 + a * self.duration, duration: (b - a) * self.duration }
    }

    pub fn from_quad_arc(arc: &QuadArc) -> OrbitArc {
        let (t0, t1) = arc.time_span();
        OrbitArc { orbit: arc.orbit().clone(), t0, duration: t1 - t0 }
    }

    /// The arc of `orbit` from `p` to `q` whose midpoint satisfies
    /// `inside`; the shorter one if both do.
    pub fn between(orbit: &ClosedOrbit, p: Point, q: Point, inside: impl Fn(Point) -> bool) -> Option<OrbitArc> {
        let (tp, tq) = (orbit.time_of(p), orbit.time_of(q));
        let fwd = (tq - tp).rem_euclid(orbit.period);
        let candidates = [fwd, fwd - orbit.period];
        candidates
            .into_iter()
            .filter(|d| d.abs() > 0.0)
            .map(|d| OrbitArc { orbit: orbit.clone(), t0: tp, duration: d })
            .filter(|a| inside(a.point(0.5)))
            .min_by(|a, b| a.duration.abs().total_cmp(&b.duration.abs()))
    }
}

/// One of the two blocks `{p ∈ Q : T_lead / 𝒯_lead(p) ∈ band}`.
///
/// Edges run `E1` (level curve at `band[0]`, from the inner to the outer
/// orbit of the other subsystem), `E2` (along the outer orbit of the other
/// subsystem), `E3` (level curve at `band[1]`, back) and `E4` (along the inner
/// orbit of the other subsystem).
#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub index: usize,
    /// The subsystem whose dwell defines the ratio bands.
    pub lead: usize,
    pub dwell: f64,
    pub band: [f64; 2],
    /// Raw lead-annulus coordinates of the two level curves.
    pub level_coordinates: [f64; 2],
    pub level_periods: [f64; 2],
    pub polygon: Vec<Point>,
    pub area: f64,
    #[serde(skip)]
    pub edges: [OrbitArc; 4],
}

impl Block {
    pub fn other(&self) -> usize {
        3 - self.lead
    }

    /// Position inside the band: 0 on `E1`, 1 on `E3`.
    pub fn band_position(&self, ratio: f64) -> f64 {
        (ratio - self.band[0]) / (self.band[1] - self.band[0])
    }

    pub fn write_edges_csv<W: std::io::Write>(&self, out: W, points_per_edge: usize) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["block", "edge", "x", "y"])?;
        for (k, e) in self.edges.iter().enumerate() {
            for p in e.sample(points_per_edge) {
                w.serialize((self.index, k + 1, p[0], p[1]))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

struct Level {
    coordinate: f64,
    period: f64,
    /// Fractions along the inner and outer arcs of the other subsystem.
    f_inner: f64,
    f_outer: f64,
    /// From the inner arc of the other subsystem to the outer one.
    arc: OrbitArc,
}

/// Solve `g(f) = 0` on `[0, 1]`, accepting an end where `g` is within `tol`.
fn root_on_unit<F>(mut g: F, tol: f64) -> Result<Option<f64>, OrbitError>
where
    F: FnMut(f64) -> Result<f64, OrbitError>,
{
    let (g0, g1) = (g(0.0)?, g(1.0)?);
    if g0.abs() <= tol {
        return Ok(Some(0.0));
    }
    if g1.abs() <= tol {
        return Ok(Some(1.0));
    }
    if g0 * g1 > 0.0 {
        return Ok(None);
    }
    Ok(Some(illinois(g, 0.0, 1.0, g0, g1, 1e-13)?.0))
}

fn level(q: &Quadrilateral, lead: usize, ratio: f64, dwell: f64) -> Result<Level, SwitchingError> {
    let other = 3 - lead;
    let annulus = q.annulus(lead);
    let [c_lo, c_hi] = q.bands[lead - 1];
    let [p_lo, p_hi] = q.periods[lead - 1];
    let target = dwell / ratio;
    let range = [p_lo.min(p_hi), p_lo.max(p_hi)];
    let slack = 1e-9 * target;
    if !(target >= range[0] - slack && target <= range[1] + slack) {
        return Err(SwitchingError::BandOutsideQuad { ratio, period: target, range });
    }
    let coordinate = if (target - p_lo).abs() <= slack {
        c_lo
    } else if (target - p_hi).abs() <= slack {
        c_hi
    } else {
        let f = |c: f64| annulus.period_at(c).map(|p| p - target);
        illinois(f, c_lo, c_hi, p_lo - target, p_hi - target, 1e-14)?.0
    };
    let orbit = annulus.orbit_from_coordinate(coordinate)?;
    let span = c_hi - c_lo;
    let on_arc = |arc: &QuadArc| -> Result<f64, SwitchingError> {
        let g = |f: f64| annulus.raw_coordinate(arc.point(f)).map(|c| (c - coordinate) / span);
        root_on_unit(g, 1e-9)?.ok_or_else(|| SwitchingError::LevelCurve {
            ratio,
            detail: format!("does not meet arc {} of subsystem {other}", arc.label),
        })
    };
    let (inner, outer) = (q.arc(other, ArcRole::Inner), q.arc(other, ArcRole::Outer));
    let f_inner = on_arc(inner)?;
    let f_outer = on_arc(outer)?;
    let (a, b) = (inner.point(f_inner), outer.point(f_outer));
    let arc = OrbitArc::between(&orbit, a, b, |p| q.contains(p, 1e-6)).ok_or_else(|| SwitchingError::LevelCurve {
        ratio,
        detail: "neither arc of the level orbit runs through the quadrilateral".into(),
    })?;
    Ok(Level { coordinate, period: orbit.period, f_inner, f_outer, arc })
}

/// Build the blocks for ratio bands `[n+1, n+3]` and `[N-2, N]` of the
/// leading subsystem (the one that runs first).
///
/// Bands may share a level curve but not overlap.
pub fn build_blocks(q: &Quadrilateral, schedule: &SwitchingSchedule) -> Result<[Block; 2], SwitchingError> {
    schedule.validate()?;
    let lead = schedule.first;
    let other = 3 - lead;
    let dwell = schedule.dwell_of(lead);
    let [p_a, p_b] = q.periods[lead - 1];
    let big_n = snapped_floor(dwell / p_a.min(p_b));
    let n = snapped_floor(dwell / p_a.max(p_b));
    if big_n - 2 < n + 3 {
        return Err(SwitchingError::BandsOverlap { n, big_n });
    }
    let bands = [[(n + 1) as f64, (n + 3) as f64], [(big_n - 2) as f64, big_n as f64]];
    let mut levels: HashMap<i64, Level> = HashMap::new();
    for r in [n + 1, n + 3, big_n - 2, big_n] {
        if let std::collections::hash_map::Entry::Vacant(e) = levels.entry(r) {
            e.insert(level(q, lead, r as f64, dwell)?);
        }
    }
    let inner = OrbitArc::from_quad_arc(q.arc(other, ArcRole::Inner));
    let outer = OrbitArc::from_quad_arc(q.arc(other, ArcRole::Outer));
    let make = |index: usize, band: [f64; 2]| -> Block {
        let lo = &levels[&(band[0] as i64)];
        let hi = &levels[&(band[1] as i64)];
        let edges = [
            lo.arc.clone(),
            outer.sub(lo.f_outer, hi.f_outer),
            hi.arc.reversed(),
            inner.sub(hi.f_inner, lo.f_inner),
        ];
        let per_edge = 128;
        let mut polygon: Vec<Point> = Vec::with_capacity(4 * per_edge + 1);
        for e in &edges {
            let pts = e.sample(per_edge);
            polygon.extend_from_slice(&pts[..per_edge]);
        }
        polygon.push(polygon[0]);
        let area = polyline::shoelace(&polygon).abs();
        Block {
            index,
            lead,
            dwell,
            band,
            level_coordinates: [lo.coordinate, hi.coordinate],
            level_periods: [lo.period, hi.period],
            polygon,
            area,
            edges,
        }
    };
    Ok([make(1, bands[0]), make(2, bands[1])])
}
