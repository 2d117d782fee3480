use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CaseTag, GeometryError};
use crate::orbits::{Annulus, ClosedOrbit};
use crate::Point;

/// Distance in coordinate space below which a sample counts as lying on a
/// boundary orbit rather than strictly on one side.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

const SAMPLES: usize = 2048;

/// Margins are capped here so that a far escape does not outweigh a good
/// interior point when cases are ranked.
const MARGIN_CAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Inner,
    Region,
    Outer,
    Boundary,
}

fn classify(c: Option<f64>) -> Class {
    match c {
        None => Class::Outer,
        Some(c) if c < -MEMBERSHIP_TOL => Class::Inner,
        Some(c) if c > 1.0 + MEMBERSHIP_TOL => Class::Outer,
        Some(c) if c > MEMBERSHIP_TOL && c < 1.0 - MEMBERSHIP_TOL => Class::Region,
        Some(_) => Class::Boundary,
    }
}

/// How the samples of one boundary orbit sit relative to the other annulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryCensus {
    pub i: usize,
    pub j: usize,
    /// `"inner"` or `"outer"`.
    pub orbit: String,
    pub samples: usize,
    pub inside_inner: usize,
    pub in_region: usize,
    pub beyond_outer: usize,
    pub on_boundary: usize,
}

/// Evidence that condition (i) holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionWitness {
    pub case: CaseTag,
    pub i: usize,
    pub j: usize,
    /// A point of the witness orbit inside the open annulus `j`.
    pub inside_point: Point,
    pub inside_coordinate: f64,
    /// A point of the witness orbit outside the closed annulus `j`.
    pub escape_point: Point,
    /// Raw coordinate of `escape_point` relative to annulus `j`; `None` when
    /// the point is not on a closed orbit of subsystem `j` at all.
    pub escape_coordinate: Option<f64>,
    /// Where the witness orbit leaves annulus `j`.
    pub corner: Point,
    pub margin: f64,
    pub census: Vec<BoundaryCensus>,
}

struct Scan {
    points: Vec<Point>,
    coords: Vec<Option<f64>>,
    classes: Vec<Class>,
}

fn scan(orbit: &ClosedOrbit, other: &Annulus) -> Scan {
    let mut points = orbit.resampled(SAMPLES);
    points.pop();
    let coords: Vec<Option<f64>> = points.par_iter().map(|p| other.raw_coordinate(*p).ok()).collect();
    let classes = coords.iter().map(|c| classify(*c)).collect();
    Scan { points, coords, classes }
}

fn census(i: usize, j: usize, orbit: &str, s: &Scan) -> BoundaryCensus {
    let count = |k: Class| s.classes.iter().filter(|c| **c == k).count();
    BoundaryCensus {
        i,
        j,
        orbit: orbit.to_string(),
        samples: s.points.len(),
        inside_inner: count(Class::Inner),
        in_region: count(Class::Region),
        beyond_outer: count(Class::Outer),
        on_boundary: count(Class::Boundary),
    }
}

/// Where along `orbit` it passes from the region into the `escape` class.
fn locate_corner(orbit: &ClosedOrbit, other: &Annulus, s: &Scan, escape: Class) -> Point {
    let n = s.points.len();
    let dt = orbit.period / n as f64;
    for k in 0..n {
        let (a, b) = (s.classes[k], s.classes[(k + 1) % n]);
        let (t_in, t_out) = match (a, b) {
            (Class::Region, x) if x == escape => (k as f64 * dt, (k + 1) as f64 * dt),
            (x, Class::Region) if x == escape => ((k + 1) as f64 * dt, k as f64 * dt),
            _ => continue,
        };
        let escaped = |t: f64| Ok::<_, std::convert::Infallible>(classify(other.raw_coordinate(orbit.point_at(t)).ok()) != Class::Region);
        let Ok(t) = crate::roots::bisect_predicate(
            |t| escaped(t).map(|e| if t_in < t_out { e } else { !e }),
            t_in.min(t_out),
            t_in.max(t_out),
            1e-13 * orbit.period,
        );
        return orbit.point_at(t);
    }
    // Only boundary samples separate the two classes; use the boundary sample
    // next to the first escape.
    let k = s.classes.iter().position(|c| *c == escape).unwrap_or(0);
    s.points[k]
}

struct Candidate {
    witness: RegionWitness,
    rank: usize,
}

/// Check condition (i) for the annuli of subsystems 1 and 2.
///
/// Both boundary orbits of each annulus are sampled at 2048 time-uniform
/// points and each sample is placed relative to the other annulus by its
/// orbit coordinate. A case holds when the orbit has samples strictly inside
/// the other open annulus and strictly on one side of it. When several cases
/// hold, the one with the largest classification margin wins; near ties go
/// to the first case in the order I.I, I.II, II.I, II.II with `(i, j) = (1, 2)`
/// before `(2, 1)`.
pub fn check_condition_i(a1: &Annulus, a2: &Annulus) -> Result<RegionWitness, GeometryError> {
    let annuli = [a1, a2];
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut all_census = Vec::new();
    for (i, j) in [(1usize, 2usize), (2, 1)] {
        let (own, other) = (annuli[i - 1], annuli[j - 1]);
        for (inner, orbit, name) in [(true, &own.inner, "inner"), (false, &own.outer, "outer")] {
            let s = scan(orbit, other);
            all_census.push(census(i, j, name, &s));
            let best_in = (0..s.points.len())
                .filter(|k| s.classes[*k] == Class::Region)
                .map(|k| {
                    let c = s.coords[k].expect("region samples have coordinates");
                    (k, c.min(1.0 - c))
                })
                .max_by(|x, y| x.1.total_cmp(&y.1));
            let Some((k_in, m_in)) = best_in else { continue };
            for escape in [Class::Outer, Class::Inner] {
                let best_out = (0..s.points.len())
                    .filter(|k| s.classes[*k] == escape)
                    .map(|k| {
                        let m = match s.coords[k] {
                            None => MARGIN_CAP,
                            Some(c) if escape == Class::Outer => c - 1.0,
                            Some(c) => -c,
                        };
                        (k, m.min(MARGIN_CAP))
                    })
                    .max_by(|x, y| x.1.total_cmp(&y.1));
                let Some((k_out, m_out)) = best_out else { continue };
                let case = match (inner, escape) {
                    (true, Class::Outer) => CaseTag::InnerEscapesOut,
                    (true, _) => CaseTag::InnerEscapesIn,
                    (false, Class::Outer) => CaseTag::OuterEscapesOut,
                    (false, _) => CaseTag::OuterEscapesIn,
                };
                let corner = locate_corner(orbit, other, &s, escape);
                let rank = (i - 1) * 4 + CaseTag::ALL.iter().position(|c| *c == case).expect("listed");
                candidates.push(Candidate {
                    witness: RegionWitness {
                        case,
                        i,
                        j,
                        inside_point: s.points[k_in],
                        inside_coordinate: s.coords[k_in].expect("region sample"),
                        escape_point: s.points[k_out],
                        escape_coordinate: s.coords[k_out],
                        corner,
                        margin: m_in.min(m_out),
                        census: Vec::new(),
                    },
                    rank,
                });
            }
        }
    }
    let best = candidates.into_iter().reduce(|a, b| {
        let (ma, mb) = (a.witness.margin, b.witness.margin);
        let near_tie = (ma - mb).abs() <= 1e-3 * ma.max(mb);
        if near_tie {
            if a.rank <= b.rank {
                a
            } else {
                b
            }
        } else if ma > mb {
            a
        } else {
            b
        }
    });
    match best {
        Some(mut c) => {
            c.witness.census = all_census;
            Ok(c.witness)
        }
        None => {
            let summary = all_census
                .iter()
                .map(|c| {
                    format!(
                        "{} orbit of {} vs annulus {}: {} inside, {} in region, {} beyond, {} on boundary",
                        c.orbit, c.i, c.j, c.inside_inner, c.in_region, c.beyond_outer, c.on_boundary
                    )
                })
                .collect::<Vec<_>>()
                .join("; ");
            Err(GeometryError::ConditionFails { summary })
        }
    }
}
