use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::polyline::{self, curve_intersections};
use super::{CaseTag, GeometryError, RegionWitness};
use crate::orbits::{Annulus, ClosedOrbit, OrbitError};
use crate::Point;

/// Knobs for [`build_quadrilateral_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadOptions {
    /// First shrink parameter tried, as a fraction of the coordinate span.
    /// With 1 the quadrilateral may use the full annuli.
    pub eps_start: f64,
    pub eps_min: f64,
    /// Points per arc in the exported polylines.
    pub arc_points: usize,
    /// Random interior points checked for membership in both annuli.
    pub interior_samples: usize,
    pub seed: u64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { eps_start: 1.0, eps_min: 1e-6, arc_points: 256, interior_samples: 64, seed: 0x5eed }
    }
}

/// Whether an arc lies on the lower or upper coordinate orbit of its
/// subsystem's band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcRole {
    Inner,
    Outer,
}

/// One edge of the quadrilateral: a stretch of a closed orbit.
#[derive(Debug, Clone)]
pub struct QuadArc {
    pub label: &'static str,
    pub subsystem: usize,
    pub role: ArcRole,
    /// Orbit coordinate of the carrying orbit in its annulus.
    pub coordinate: f64,
    pub points: Vec<Point>,
    orbit: ClosedOrbit,
    t0: f64,
    /// Signed travel time from the first to the last point.
    duration: f64,
}

impl QuadArc {
    /// Point at fraction `f ∈ [0, 1]` of the arc, uniform in orbit time.
    pub fn point(&self, f: f64) -> Point {
        self.orbit.point_at(self.t0 + f * self.duration)
    }

    pub fn orbit(&self) -> &ClosedOrbit {
        &self.orbit
    }

    /// Orbit times of the two ends, the second possibly beyond one period or
    /// below zero when the arc runs against the flow.
    pub fn time_span(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.duration)
    }
}

/// The curvilinear quadrilateral `ABCD`.
///
/// Arcs are `Q¹` on the outer band orbit of subsystem 1, `Q²` on the outer
/// band orbit of subsystem 2, `Q³` on the inner band orbit of subsystem 1 and
/// `Q⁴` on the inner band orbit of subsystem 2. Vertices are
/// `A = Q¹∩Q⁴`, `B = Q¹∩Q²`, `C = Q²∩Q³`, `D = Q³∩Q⁴`, and the boundary is
/// traversed `A → B → C → D → A`.
#[derive(Debug, Clone)]
pub struct Quadrilateral {
    pub case: CaseTag,
    pub pair: (usize, usize),
    /// Shrink parameters `(ε₁, ε₂)`.
    pub eps: [f64; 2],
    /// `[c̃_k, C̃_k]` in raw orbit coordinates of each annulus.
    pub bands: [[f64; 2]; 2],
    /// Periods of the inner and outer band orbits of each subsystem.
    pub periods: [[f64; 2]; 2],
    pub arcs: [QuadArc; 4],
    /// `A, B, C, D`.
    pub vertices: [Point; 4],
    pub polygon: Vec<Point>,
    pub area: f64,
    annuli: [Annulus; 2],
    diameter: f64,
}

/// Serializable summary of a quadrilateral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadDescriptor {
    pub case: CaseTag,
    pub pair: (usize, usize),
    pub eps: [f64; 2],
    pub bands: [[f64; 2]; 2],
    pub periods: [[f64; 2]; 2],
    pub vertices: BTreeMap<String, Point>,
    pub arcs: Vec<ArcDescriptor>,
    pub area: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcDescriptor {
    pub label: String,
    pub subsystem: usize,
    pub role: ArcRole,
    pub coordinate: f64,
    pub from: String,
    pub to: String,
    pub period: f64,
}

impl Quadrilateral {
    pub fn annulus(&self, k: usize) -> &Annulus {
        &self.annuli[k - 1]
    }

    /// Orbit coordinate of `p` in subsystem `k`, rescaled so that the band
    /// `[c̃_k, C̃_k]` maps to `[0, 1]`.
    pub fn band_coordinate(&self, k: usize, p: Point) -> Result<f64, OrbitError> {
        let [lo, hi] = self.bands[k - 1];
        Ok((self.annuli[k - 1].raw_coordinate(p)? - lo) / (hi - lo))
    }

    /// Point-in-polygon test, widened by `slack` times the diameter so that
    /// points on the boundary count as inside.
    pub fn contains(&self, p: Point, slack: f64) -> bool {
        if polyline::contains(&self.polygon, p) {
            return true;
        }
        slack > 0.0 && polyline::distance_to(&self.polygon, p) <= slack * self.diameter
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// The arc of subsystem `k` with the given role.
    pub fn arc(&self, k: usize, role: ArcRole) -> &QuadArc {
        self.arcs.iter().find(|a| a.subsystem == k && a.role == role).expect("every subsystem has both roles")
    }

    pub fn descriptor(&self) -> QuadDescriptor {
        let names = ["A", "B", "C", "D"];
        let vertices = names.iter().zip(self.vertices).map(|(n, p)| (n.to_string(), p)).collect();
        let arcs = self
            .arcs
            .iter()
            .enumerate()
            .map(|(k, a)| ArcDescriptor {
                label: a.label.to_string(),
                subsystem: a.subsystem,
                role: a.role,
                coordinate: a.coordinate,
                from: names[k].to_string(),
                to: names[(k + 1) % 4].to_string(),
                period: a.orbit.period,
            })
            .collect();
        QuadDescriptor {
            case: self.case,
            pair: self.pair,
            eps: self.eps,
            bands: self.bands,
            periods: self.periods,
            vertices,
            arcs,
            area: self.area,
        }
    }

    /// Arc polylines as CSV rows `arc,subsystem,x,y`.
    pub fn write_arcs_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["arc", "subsystem", "x", "y"])?;
        for a in &self.arcs {
            for p in &a.points {
                w.write_record([a.label.to_string(), a.subsystem.to_string(), p[0].to_string(), p[1].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Build the quadrilateral with default options.
pub fn build_quadrilateral(a1: &Annulus, a2: &Annulus, w: &RegionWitness) -> Result<Quadrilateral, GeometryError> {
    build_quadrilateral_with(a1, a2, w, &QuadOptions::default())
}

/// Build the quadrilateral of the witness's case.
///
/// The shrink parameter starts at `eps_start` (1 means the full annuli) and is
/// halved until the four band orbits bound a simple four-arc region whose
/// sampled interior lies in both open bands. The same ε is used for both
/// subsystems.
pub fn build_quadrilateral_with(
    a1: &Annulus,
    a2: &Annulus,
    w: &RegionWitness,
    opts: &QuadOptions,
) -> Result<Quadrilateral, GeometryError> {
    let annuli = [a1, a2];
    let mut eps = opts.eps_start;
    let mut last_reason = String::from("not attempted");
    while eps >= opts.eps_min {
        let bands = case_bands(w, eps);
        match assemble(annuli, w, bands, eps, opts)? {
            Ok(q) => return Ok(q),
            Err(reason) => last_reason = format!("ε = {eps:e}: {reason}"),
        }
        eps *= 0.5;
    }
    Err(GeometryError::EpsilonUnderflow { eps_min: opts.eps_min, last_reason })
}

/// Coordinate bands `[lower, upper]` of subsystems 1 and 2 for the case.
fn case_bands(w: &RegionWitness, eps: f64) -> [[f64; 2]; 2] {
    let eps = eps.min(1.0);
    let low = [0.0, eps];
    let high = [1.0 - eps, 1.0];
    // The witness orbit's band hugs that orbit; the other subsystem's band
    // hugs the orbit the witness escapes through.
    let own = if w.case.uses_inner() { low } else { high };
    let other = if w.case.escapes_out() { high } else { low };
    let mut b = [[0.0; 2]; 2];
    b[w.i - 1] = own;
    b[w.j - 1] = other;
    b
}

// Orbit slots: 0 inner of 1, 1 outer of 1, 2 inner of 2, 3 outer of 2.
const SLOT_SUB: [usize; 4] = [1, 1, 2, 2];

#[derive(Debug, Clone, Copy)]
struct Vertex {
    p: Point,
    /// Orbit slots the vertex lies on, and its time on each.
    on: [(usize, f64); 2],
}

impl Vertex {
    fn time_on(&self, slot: usize) -> Option<f64> {
        self.on.iter().find(|(s, _)| *s == slot).map(|(_, t)| *t)
    }
}

fn band_coord(annulus: &Annulus, band: [f64; 2], p: Point) -> Result<f64, OrbitError> {
    Ok((annulus.raw_coordinate(p)? - band[0]) / (band[1] - band[0]))
}

fn band_orbit(annulus: &Annulus, c: f64) -> Result<ClosedOrbit, OrbitError> {
    annulus.orbit_from_coordinate(c)
}

/// Newton polish of `x(s) = y(t)` on the dense outputs. Returns the input
/// unchanged near tangency or without dynamics.
fn refine_vertex(x: &ClosedOrbit, mut s: f64, y: &ClosedOrbit, mut t: f64) -> (Point, f64, f64) {
    let (Some(fx), Some(fy)) = (x.field(), y.field()) else {
        return (x.point_at(s), s, t);
    };
    let start = (s, t);
    let scale = x.point_at(0.0)[0].abs().max(x.point_at(0.0)[1].abs()).max(1.0);
    for _ in 0..30 {
        let (p, q) = (x.point_at(s), y.point_at(t));
        let r = [p[0] - q[0], p[1] - q[1]];
        if r[0].hypot(r[1]) <= 1e-14 * scale {
            break;
        }
        let (Ok(u), Ok(v)) = (fx.eval(p), fy.eval(q)) else { break };
        // [u, -v] [ds, dt]^T = -r
        let det = -u[0] * v[1] + v[0] * u[1];
        if det.abs() <= 1e-6 * u[0].hypot(u[1]) * v[0].hypot(v[1]) {
            return (x.point_at(start.0), start.0, start.1);
        }
        let ds = (-r[0] * -v[1] - -v[0] * -r[1]) / det;
        let dt = (u[0] * -r[1] - -r[0] * u[1]) / det;
        let cap = 0.05 * x.period.min(y.period);
        if ds.abs() > cap || dt.abs() > cap {
            return (x.point_at(start.0), start.0, start.1);
        }
        s += ds;
        t += dt;
    }
    let (p, q) = (x.point_at(s), y.point_at(t));
    if (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-7 * scale {
        return (x.point_at(start.0), start.0, start.1);
    }
    ([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])], s.rem_euclid(x.period), t.rem_euclid(y.period))
}

fn intersect(x: &ClosedOrbit, y: &ClosedOrbit, merge_tol: f64) -> Result<Vec<(Point, f64, f64)>, GeometryError> {
    let (px, py) = (x.polyline(), y.polyline());
    let (nx, ny) = ((px.len() - 1) as f64, (py.len() - 1) as f64);
    let hits = curve_intersections(px, py, merge_tol)?;
    let mut out: Vec<(Point, f64, f64)> = Vec::new();
    for h in hits {
        let (p, s, t) = refine_vertex(x, h.s / nx * x.period, y, h.t / ny * y.period);
        if out.iter().any(|(q, _, _)| (p[0] - q[0]).hypot(p[1] - q[1]) <= merge_tol) {
            continue;
        }
        out.push((p, s, t));
    }
    if out.is_empty() {
        // Tangential contact can slip between the two samplings.
        let mut best = (f64::INFINITY, 0usize, 0usize);
        for (i, a) in px.iter().enumerate().take(px.len() - 1) {
            for (j, b) in py.iter().enumerate().take(py.len() - 1) {
                let d = (a[0] - b[0]).hypot(a[1] - b[1]);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        if best.0 <= merge_tol {
            let (a, b) = (px[best.1], py[best.2]);
            out.push(([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], best.1 as f64 / nx * x.period, best.2 as f64 / ny * y.period));
        }
    }
    Ok(out)
}

type Attempt = Result<Quadrilateral, String>;

struct ArcCandidate {
    t0: f64,
    duration: f64,
}

fn assemble(
    annuli: [&Annulus; 2],
    w: &RegionWitness,
    bands: [[f64; 2]; 2],
    eps: f64,
    opts: &QuadOptions,
) -> Result<Attempt, GeometryError> {
    let orbits = [
        band_orbit(annuli[0], bands[0][0])?,
        band_orbit(annuli[0], bands[0][1])?,
        band_orbit(annuli[1], bands[1][0])?,
        band_orbit(annuli[1], bands[1][1])?,
    ];
    let all: Vec<Point> = orbits.iter().flat_map(|o| o.polyline().iter().copied()).collect();
    let diameter = polyline::bbox_diameter(&all);
    let merge_tol = 1e-6 * diameter;

    // Vertex kinds A, B, C, D as (subsystem-1 slot, subsystem-2 slot).
    let kinds = [(1usize, 2usize), (1, 3), (0, 3), (0, 2)];
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut of_kind: [Vec<usize>; 4] = Default::default();
    for (k, (a, b)) in kinds.iter().enumerate() {
        for (p, s, t) in intersect(&orbits[*a], &orbits[*b], merge_tol)? {
            of_kind[k].push(vertices.len());
            vertices.push(Vertex { p, on: [(*a, s), (*b, t)] });
        }
        if of_kind[k].is_empty() {
            return Ok(Err(format!("no vertex {}", ["A", "B", "C", "D"][k])));
        }
    }

    // Vertices on each orbit in time order.
    let order: Vec<Vec<(f64, usize)>> = (0..4)
        .map(|slot| {
            let mut v: Vec<(f64, usize)> =
                vertices.iter().enumerate().filter_map(|(id, vx)| vx.time_on(slot).map(|t| (t, id))).collect();
            v.sort_by(|x, y| x.0.total_cmp(&y.0));
            v
        })
        .collect();

    // An elementary arc between consecutive vertices is usable when its
    // interior lies in the other subsystem's open band.
    let mut inside_cache: HashMap<(usize, usize, usize, bool), bool> = HashMap::new();
    let mut arc_between = |slot: usize, u: usize, v: usize| -> Result<Option<ArcCandidate>, GeometryError> {
        let list = &order[slot];
        let m = list.len();
        let pu = list.iter().position(|e| e.1 == u).expect("vertex on orbit");
        let pv = list.iter().position(|e| e.1 == v).expect("vertex on orbit");
        let period = orbits[slot].period;
        let (tu, tv) = (list[pu].0, list[pv].0);
        let mut options = Vec::new();
        if m >= 2 && pv == (pu + 1) % m {
            options.push((true, ArcCandidate { t0: tu, duration: (tv - tu).rem_euclid(period) }));
        }
        if m >= 2 && pu == (pv + 1) % m {
            options.push((false, ArcCandidate { t0: tu, duration: -(tu - tv).rem_euclid(period) }));
        }
        let other = if SLOT_SUB[slot] == 1 { 1 } else { 0 };
        let mut best: Option<ArcCandidate> = None;
        for (forward, arc) in options {
            if arc.duration == 0.0 {
                continue;
            }
            let key = (slot, u.min(v), u.max(v), forward == (u < v));
            let inside = match inside_cache.get(&key) {
                Some(b) => *b,
                None => {
                    let mut ok = true;
                    for f in [0.2, 0.5, 0.8] {
                        let p = orbits[slot].point_at(arc.t0 + f * arc.duration);
                        let c = band_coord(annuli[other], bands[other], p).unwrap_or(f64::NAN);
                        if !(c > 0.0 && c < 1.0) {
                            ok = false;
                            break;
                        }
                    }
                    inside_cache.insert(key, ok);
                    ok
                }
            };
            if inside && best.as_ref().is_none_or(|b| arc.duration.abs() < b.duration.abs()) {
                best = Some(arc);
            }
        }
        Ok(best)
    };

    let mut found: Vec<Quadrilateral> = Vec::new();
    let mut reasons: Vec<String> = Vec::new();
    for &a in &of_kind[0] {
        for &b in &of_kind[1] {
            for &c in &of_kind[2] {
                for &d in &of_kind[3] {
                    // Q¹ on slot 1 (A→B), Q² on slot 3 (B→C), Q³ on slot 0 (C→D), Q⁴ on slot 2 (D→A).
                    let plan = [(1usize, a, b), (3, b, c), (0, c, d), (2, d, a)];
                    let mut arcs = Vec::with_capacity(4);
                    for (slot, u, v) in plan {
                        match arc_between(slot, u, v)? {
                            Some(arc) => arcs.push((slot, arc)),
                            None => break,
                        }
                    }
                    if arcs.len() < 4 {
                        reasons.push("arcs leave the other band".into());
                        continue;
                    }
                    match finish(annuli, w, bands, eps, &orbits, &arcs, [a, b, c, d].map(|i| vertices[i].p), diameter, opts)? {
                        Ok(q) => found.push(q),
                        Err(r) => reasons.push(r),
                    }
                }
            }
        }
    }
    if found.is_empty() {
        reasons.dedup();
        return Ok(Err(reasons.join("; ")));
    }
    let dist = |q: &Quadrilateral| {
        q.vertices.iter().map(|v| (v[0] - w.corner[0]).hypot(v[1] - w.corner[1])).fold(f64::INFINITY, f64::min)
    };
    found.sort_by(|x, y| dist(x).total_cmp(&dist(y)).then(y.area.total_cmp(&x.area)));
    Ok(Ok(found.swap_remove(0)))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    annuli: [&Annulus; 2],
    w: &RegionWitness,
    bands: [[f64; 2]; 2],
    eps: f64,
    orbits: &[ClosedOrbit; 4],
    arcs: &[(usize, ArcCandidate)],
    vertices: [Point; 4],
    diameter: f64,
    opts: &QuadOptions,
) -> Result<Attempt, GeometryError> {
    let labels = ["Q1", "Q2", "Q3", "Q4"];
    let n = opts.arc_points.max(8);
    let mut built: Vec<QuadArc> = Vec::with_capacity(4);
    let mut polygon: Vec<Point> = Vec::with_capacity(4 * n + 1);
    for (k, (slot, arc)) in arcs.iter().enumerate() {
        let orbit = &orbits[*slot];
        let mut points: Vec<Point> = (0..=n).map(|i| orbit.point_at(arc.t0 + arc.duration * i as f64 / n as f64)).collect();
        // Pin the ends to the refined vertices.
        points[0] = vertices[k];
        points[n] = vertices[(k + 1) % 4];
        polygon.extend_from_slice(&points[..n]);
        let sub = SLOT_SUB[*slot];
        built.push(QuadArc {
            label: labels[k],
            subsystem: sub,
            role: if slot % 2 == 0 { ArcRole::Inner } else { ArcRole::Outer },
            coordinate: bands[sub - 1][slot % 2],
            points,
            orbit: orbit.clone(),
            t0: arc.t0,
            duration: arc.duration,
        });
    }
    polygon.push(polygon[0]);
    if !polyline::is_simple_closed(&polygon) {
        return Ok(Err("boundary is not simple".into()));
    }
    let area = polyline::shoelace(&polygon).abs();
    if area <= 1e-12 * diameter * diameter {
        return Ok(Err("degenerate region".into()));
    }

    // Interior points must lie in both open bands with a margin.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &polygon {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let local_diam = (x1 - x0).hypot(y1 - y0);
    let mut checked = 0;
    let mut tries = 0;
    while checked < opts.interior_samples {
        tries += 1;
        if tries > 10_000 * opts.interior_samples.max(1) {
            return Ok(Err("could not sample the interior".into()));
        }
        let p = [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1)];
        if !polyline::contains(&polygon, p) || polyline::distance_to(&polygon, p) < 1e-4 * local_diam {
            continue;
        }
        checked += 1;
        for k in 0..2 {
            let raw = annuli[k].raw_coordinate(p).unwrap_or(f64::NAN);
            let [lo, hi] = bands[k];
            let margin = super::MEMBERSHIP_TOL;
            if !(raw > lo + margin && raw < hi - margin) {
                return Ok(Err(format!("interior point {p:?} has coordinate {raw} outside band {lo}..{hi} of subsystem {}", k + 1)));
            }
        }
    }
    let arcs: [QuadArc; 4] = built.try_into().expect("four arcs");
    Ok(Ok(Quadrilateral {
        case: w.case,
        pair: (w.i, w.j),
        eps: [eps.min(1.0); 2],
        bands,
        periods: [[orbits[0].period, orbits[1].period], [orbits[2].period, orbits[3].period]],
        arcs,
        vertices,
        polygon,
        area,
        annuli: [annuli[0].clone(), annuli[1].clone()],
        diameter: local_diam,
    }))
}
