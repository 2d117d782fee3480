use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::{Block, OrbitArc};
use super::{SwitchedSystem, SwitchingError, SwitchingSchedule};
use crate::geometry::Quadrilateral;
use crate::ode::Tolerances;
use crate::orbits::{measure_period, OrbitError};
use crate::roots::{bisect_bracket, illinois};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessOptions {
    /// Connections per source block, evenly spaced in the other
    /// subsystem's coordinate; the first and last are block edges.
    pub connections: usize,
    /// Base samples per connection and per stage.
    pub samples: usize,
    /// Located sub-arcs are re-checked with this many times the sampling
    /// density they were found with; 0 or 1 skips the check.
    pub refine_factor: usize,
    /// Tolerance on the block coordinates for membership and edge contact.
    pub edge_tol: f64,
    /// Polygon slack, as a fraction of the quadrilateral's diameter.
    pub inflate: f64,
    pub tol: Tolerances,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            connections: 8,
            samples: 512,
            refine_factor: 4,
            edge_tol: 1e-6,
            inflate: 1e-4,
            tol: Tolerances::with(1e-8, 1e-10),
        }
    }
}

/// What happened to one connection of a source block under the map, with
/// respect to one target block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionResult {
    pub index: usize,
    /// Coordinate of the connection in the other subsystem's band.
    pub other_coordinate: f64,
    /// Parameter interval whose first-stage image crosses the quadrilateral
    /// between the other subsystem's orbits.
    pub stage1_run: Option<[f64; 2]>,
    /// Parameter interval whose full image crosses the target block.
    pub sub_arc: Option<[f64; 2]>,
    /// Band positions of the sub-arc's end images (near 0 and 1).
    pub end_positions: Option<[f64; 2]>,
    /// Outcome of the re-check at finer sampling.
    pub refined: Option<bool>,
    pub passed: bool,
    pub diagnostic: String,
    /// Full-map images over the first-stage run used.
    #[serde(skip)]
    pub image: Vec<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairResult {
    pub source: usize,
    pub target: usize,
    pub passed: bool,
    pub connections: Vec<ConnectionResult>,
}

/// Crossing relations of the composed map between the two blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorseshoeWitness {
    pub label: String,
    pub map_schedule: SwitchingSchedule,
    pub lead: usize,
    pub connections: usize,
    pub samples: usize,
    pub refine_factor: usize,
    pub pairs: Vec<PairResult>,
    pub passed: bool,
    /// `log 2` when all four pairs pass.
    pub entropy_bound: Option<f64>,
}

impl HorseshoeWitness {
    pub fn pair(&self, source: usize, target: usize) -> Option<&PairResult> {
        self.pairs.iter().find(|p| p.source == source && p.target == target)
    }

    /// First failing connection, if any.
    pub fn first_failure(&self) -> Option<(&PairResult, &ConnectionResult)> {
        self.pairs.iter().find_map(|p| p.connections.iter().find(|c| !c.passed).map(|c| (p, c)))
    }

    pub fn write_images_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["source", "target", "connection", "x", "y"])?;
        for p in &self.pairs {
            for c in &p.connections {
                for q in &c.image {
                    w.serialize((p.source, p.target, c.index, q[0], q[1]))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

struct Ctx<'a> {
    sys: SwitchedSystem,
    map: SwitchingSchedule,
    q: &'a Quadrilateral,
    blocks: &'a [Block; 2],
    lead: usize,
    other: usize,
    opts: WitnessOptions,
    gap: f64,
}

/// Sampled image along a parameter interval.
struct Sampled<T> {
    s: Vec<f64>,
    data: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
struct First {
    q: Point,
    v: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Full {
    r: Point,
    v: Option<f64>,
    ratio: Option<f64>,
}

struct Joined {
    s: [f64; 2],
    w: [f64; 2],
}

impl Ctx<'_> {
    fn in_band(&self, w: f64) -> bool {
        w >= -self.opts.edge_tol && w <= 1.0 + self.opts.edge_tol
    }

    fn touches(&self, w: f64, edge: f64) -> bool {
        (w - edge).abs() <= 2.0 * self.opts.edge_tol
    }

    /// Other-subsystem band coordinate, for points near the quadrilateral.
    fn v_of(&self, p: Point) -> Option<f64> {
        if !self.q.contains(p, self.opts.inflate) {
            return None;
        }
        self.q.band_coordinate(self.other, p).ok()
    }

    fn ratio_of(&self, p: Point) -> Option<f64> {
        let dwell = self.blocks[0].dwell;
        self.q.annulus(self.lead).period_through(p).ok().map(|t| dwell / t)
    }

    fn first(&self, l: &OrbitArc, s: f64) -> Result<First, SwitchingError> {
        let q = self.sys.semi_map_reduced(self.lead, self.map.dwell_of(self.lead), l.point(s))?;
        Ok(First { q, v: self.v_of(q) })
    }

    fn full(&self, l: &OrbitArc, s: f64) -> Result<Full, SwitchingError> {
        let q = self.sys.semi_map_reduced(self.lead, self.map.dwell_of(self.lead), l.point(s))?;
        let r = self.sys.semi_map_reduced(self.other, self.map.dwell_of(self.other), q)?;
        let v = self.v_of(r);
        let ratio = match v {
            Some(v) if self.in_band(v) => self.ratio_of(r),
            _ => None,
        };
        Ok(Full { r, v, ratio })
    }

    fn inside_first(&self, f: &First) -> bool {
        f.v.is_some_and(|v| self.in_band(v))
    }

    fn position(&self, f: &Full, target: &Block) -> Option<f64> {
        match (f.v, f.ratio) {
            (Some(v), Some(r)) if self.in_band(v) => Some(target.band_position(r)),
            _ => None,
        }
    }

    fn inside_full(&self, f: &Full, target: &Block) -> bool {
        self.position(f, target).is_some_and(|u| self.in_band(u))
    }

    /// Uniform samples on `[a, b]`, then midpoints wherever consecutive
    /// images are further apart than the gap, up to eight times the base
    /// count.
    fn sample<T: Copy + Send>(
        &self,
        a: f64,
        b: f64,
        n: usize,
        eval: impl Fn(f64) -> Result<T, SwitchingError> + Sync,
        image: impl Fn(&T) -> Point,
    ) -> Result<Sampled<T>, SwitchingError> {
        let n = n.max(2);
        let mut s: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
        let mut data: Vec<T> = s.iter().map(|x| eval(*x)).collect::<Result<_, _>>()?;
        let cap = 8 * n;
        let min_step = 1e-9 * (b - a).abs();
        loop {
            let mut inserted = Vec::new();
            for i in 0..s.len() - 1 {
                let (p, q) = (image(&data[i]), image(&data[i + 1]));
                if (p[0] - q[0]).hypot(p[1] - q[1]) > self.gap && (s[i + 1] - s[i]).abs() > min_step {
                    inserted.push((i, 0.5 * (s[i] + s[i + 1])));
                }
            }
            if inserted.is_empty() || s.len() + inserted.len() > cap {
                break;
            }
            let values: Vec<T> = inserted.iter().map(|(_, x)| eval(*x)).collect::<Result<_, _>>()?;
            let mut ns = Vec::with_capacity(s.len() + inserted.len());
            let mut nd = Vec::with_capacity(s.len() + inserted.len());
            let mut next = inserted.iter().zip(values).peekable();
            for i in 0..s.len() {
                ns.push(s[i]);
                nd.push(data[i]);
                if let Some(((j, x), v)) = next.peek() {
                    if *j == i {
                        ns.push(*x);
                        nd.push(*v);
                        next.next();
                    }
                }
            }
            s = ns;
            data = nd;
        }
        Ok(Sampled { s, data })
    }

    /// Maximal runs of samples with `inside`, refined at both ends by
    /// bisection, that reach coordinate 0 at one end and 1 at the other.
    fn joined_runs<T>(
        &self,
        sampled: &Sampled<T>,
        inside: impl Fn(&T) -> bool,
        coord: impl Fn(&T) -> Option<f64>,
        eval: impl Fn(f64) -> Result<T, SwitchingError>,
        limit: usize,
    ) -> Result<Vec<Joined>, SwitchingError> {
        let flags: Vec<bool> = sampled.data.iter().map(&inside).collect();
        let m = flags.len();
        let span = (sampled.s[m - 1] - sampled.s[0]).abs();
        let xtol = 1e-12 * span.max(1e-300);
        let mut out = Vec::new();
        let mut i = 0;
        while i < m && out.len() < limit {
            if !flags[i] {
                i += 1;
                continue;
            }
            let mut j = i;
            while j + 1 < m && flags[j + 1] {
                j += 1;
            }
            let end = |inner: usize, outer: Option<usize>| -> Result<(f64, Option<f64>), SwitchingError> {
                match outer {
                    None => Ok((sampled.s[inner], coord(&sampled.data[inner]))),
                    Some(o) => {
                        let pred = |x: f64| eval(x).map(|d| inside(&d));
                        let (_, b) = bisect_bracket(pred, sampled.s[o], sampled.s[inner], xtol)?;
                        Ok((b, coord(&eval(b)?)))
                    }
                }
            };
            let (sa, wa) = end(i, i.checked_sub(1))?;
            let (sb, wb) = end(j, if j + 1 < m { Some(j + 1) } else { None })?;
            if let (Some(wa), Some(wb)) = (wa, wb) {
                let joins = (self.touches(wa, 0.0) && self.touches(wb, 1.0)) || (self.touches(wa, 1.0) && self.touches(wb, 0.0));
                if joins {
                    out.push(Joined { s: [sa, sb], w: [wa, wb] });
                }
            }
            i = j + 1;
        }
        Ok(out)
    }

    /// The stretch of the other subsystem's orbit at coordinate `v` from
    /// `E1` to `E3`; at `v = 0` and `v = 1` these are the block edges.
    fn connection(&self, block: &Block, v: f64) -> Result<OrbitArc, SwitchingError> {
        if v == 0.0 {
            return Ok(block.edges[3].reversed());
        }
        if v == 1.0 {
            return Ok(block.edges[1].clone());
        }
        let q = self.q;
        let other = self.other;
        let locate = |edge: &OrbitArc| -> Result<Point, SwitchingError> {
            let g = |f: f64| q.band_coordinate(other, edge.point(f)).map(|c| c - v);
            let (g0, g1) = (g(0.0)?, g(1.0)?);
            if g0 * g1 > 0.0 {
                return Err(SwitchingError::LevelCurve {
                    ratio: block.band[0],
                    detail: format!("block edge does not reach coordinate {v} of subsystem {other}"),
                });
            }
            Ok(edge.point(illinois(g, 0.0, 1.0, g0, g1, 1e-13)?.0))
        };
        let p1 = locate(&block.edges[0])?;
        let p3 = locate(&block.edges[2])?;
        let annulus = q.annulus(other);
        let orbit = measure_period(annulus.subsystem(), p1, annulus.options())?;
        OrbitArc::between(&orbit, p1, p3, |m| q.contains(m, 1e-6)).ok_or_else(|| {
            SwitchingError::Orbit(OrbitError::Unresolved { what: format!("connection at coordinate {v} inside the block") })
        })
    }

    /// Results of one connection of `source` against both targets.
    fn run_connection(&self, source: &Block, index: usize) -> Result<[ConnectionResult; 2], SwitchingError> {
        let k = self.opts.connections.max(2);
        let v = index as f64 / (k - 1) as f64;
        let blank = |diagnostic: String| ConnectionResult {
            index,
            other_coordinate: v,
            stage1_run: None,
            sub_arc: None,
            end_positions: None,
            refined: None,
            passed: false,
            diagnostic,
            image: Vec::new(),
        };
        let l = self.connection(source, v)?;
        let n = self.opts.samples;

        let eval1 = |s: f64| self.first(&l, s);
        let s1 = self.sample(0.0, 1.0, n, eval1, |f: &First| f.q)?;
        let runs1 = self.joined_runs(&s1, |f| self.inside_first(f), |f| f.v, eval1, usize::MAX)?;
        if runs1.is_empty() {
            let msg = format!(
                "first-stage image never crosses the quadrilateral between the orbits of subsystem {}",
                self.other
            );
            return Ok([blank(msg.clone()), blank(msg)]);
        }

        let mut found: [Option<(usize, Joined, Vec<Point>, usize)>; 2] = [None, None];
        for (ri, run) in runs1.iter().enumerate() {
            if found.iter().all(Option::is_some) {
                break;
            }
            let eval2 = |s: f64| self.full(&l, s);
            let s2 = self.sample(run.s[0], run.s[1], n, eval2, |f: &Full| f.r)?;
            let image: Vec<Point> = s2.data.iter().map(|f| f.r).collect();
            for (t, slot) in found.iter_mut().enumerate() {
                if slot.is_some() {
                    continue;
                }
                let target = &self.blocks[t];
                let joined = self.joined_runs(
                    &s2,
                    |f| self.inside_full(f, target),
                    |f| self.position(f, target),
                    eval2,
                    1,
                )?;
                if let Some(j) = joined.into_iter().next() {
                    let coarse = s2.s.iter().filter(|x| (**x - j.s[0]) * (**x - j.s[1]) <= 0.0).count();
                    *slot = Some((ri, j, image.clone(), coarse));
                }
            }
        }

        let factor = self.opts.refine_factor;
        let mut out: Vec<ConnectionResult> = Vec::with_capacity(2);
        let mut stage1_ok: Vec<Option<bool>> = vec![None; runs1.len()];
        for (t, slot) in found.into_iter().enumerate() {
            let Some((ri, j, image, coarse)) = slot else {
                let mut r = blank(format!("no sub-arc of the image crosses block {}", t + 1));
                r.stage1_run = Some(runs1[0].s);
                out.push(r);
                continue;
            };
            let run = &runs1[ri];
            let refined = if factor > 1 {
                let ok1 = match stage1_ok[ri] {
                    Some(b) => b,
                    None => {
                        let inside = s1.s.iter().filter(|x| (**x - run.s[0]) * (**x - run.s[1]) <= 0.0).count();
                        let m = factor * inside.max(8);
                        let mut ok = true;
                        for i in 0..=m {
                            let s = run.s[0] + (run.s[1] - run.s[0]) * i as f64 / m as f64;
                            if !self.inside_first(&self.first(&l, s)?) {
                                ok = false;
                                break;
                            }
                        }
                        stage1_ok[ri] = Some(ok);
                        ok
                    }
                };
                let target = &self.blocks[t];
                let m = factor * coarse.max(8);
                let mut ok2 = true;
                for i in 0..=m {
                    let s = j.s[0] + (j.s[1] - j.s[0]) * i as f64 / m as f64;
                    if !self.inside_full(&self.full(&l, s)?, target) {
                        ok2 = false;
                        break;
                    }
                }
                Some(ok1 && ok2)
            } else {
                None
            };
            let passed = refined.unwrap_or(true);
            let diagnostic = if passed {
                format!("sub-arc [{:.12}, {:.12}] crosses block {}", j.s[0], j.s[1], t + 1)
            } else {
                "located sub-arc leaves the block under finer sampling".into()
            };
            out.push(ConnectionResult {
                index,
                other_coordinate: v,
                stage1_run: Some(run.s),
                sub_arc: Some(j.s),
                end_positions: Some(j.w),
                refined,
                passed,
                diagnostic,
                image,
            });
        }
        let b = out.pop().expect("two targets");
        let a = out.pop().expect("two targets");
        Ok([a, b])
    }
}

/// Check the crossing relations of `P = P_other ∘ P_lead` between the two
/// blocks for all four (source, target) pairs.
///
/// Each connection of a source block runs along an orbit of the other
/// subsystem from edge `E1` to edge `E3`. Its image under the leading flow
/// must contain a run inside the quadrilateral joining the other
/// subsystem's inner and outer orbits; the image of that run under the
/// second flow must contain a sub-arc inside the target block joining the
/// target's level edges. The map schedule may differ from the one the
/// blocks were built for, which is how negative controls are run.
pub fn evaluate_witness(
    sys: &SwitchedSystem,
    map: &SwitchingSchedule,
    q: &Quadrilateral,
    blocks: &[Block; 2],
    opts: &WitnessOptions,
) -> Result<HorseshoeWitness, SwitchingError> {
    map.validate()?;
    let lead = blocks[0].lead;
    if map.first != lead {
        return Err(SwitchingError::InvalidSchedule(format!(
            "the map runs subsystem {} first but the blocks were built for subsystem {lead}",
            map.first
        )));
    }
    let ctx = Ctx {
        sys: SwitchedSystem { subsystems: sys.subsystems.clone(), tol: opts.tol },
        map: *map,
        q,
        blocks,
        lead,
        other: 3 - lead,
        opts: *opts,
        gap: q.diameter() / 32.0,
    };
    let k = opts.connections.max(2);
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|b| (0..k).map(move |i| (b, i))).collect();
    let results: Vec<[ConnectionResult; 2]> =
        jobs.par_iter().map(|(b, i)| ctx.run_connection(&blocks[*b], *i)).collect::<Result<_, _>>()?;
    let mut pairs = Vec::with_capacity(4);
    for source in 1..=2 {
        for target in 1..=2 {
            let connections: Vec<ConnectionResult> = jobs
                .iter()
                .zip(&results)
                .filter(|((b, _), _)| *b + 1 == source)
                .map(|(_, r)| r[target - 1].clone())
                .collect();
            let passed = connections.iter().all(|c| c.passed);
            pairs.push(PairResult { source, target, passed, connections });
        }
    }
    let passed = pairs.iter().all(|p| p.passed);
    Ok(HorseshoeWitness {
        label: "numerical witness".into(),
        map_schedule: *map,
        lead,
        connections: k,
        samples: opts.samples,
        refine_factor: opts.refine_factor,
        pairs,
        passed,
        entropy_bound: passed.then_some(std::f64::consts::LN_2),
    })
}

/// [`evaluate_witness`], turning any failing connection into an error.
pub fn verify_crossing(
    sys: &SwitchedSystem,
    map: &SwitchingSchedule,
    q: &Quadrilateral,
    blocks: &[Block; 2],
    opts: &WitnessOptions,
) -> Result<HorseshoeWitness, SwitchingError> {
    let w = evaluate_witness(sys, map, q, blocks, opts)?;
    if let Some((p, c)) = w.first_failure() {
        return Err(SwitchingError::WitnessFailed {
            pair: (p.source, p.target),
            connection: c.index,
            diagnostic: c.diagnostic.clone(),
        });
    }
    Ok(w)
}
