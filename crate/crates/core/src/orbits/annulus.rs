use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed::{measure_period, trace, ClosedOrbit};
use super::{OrbitError, OrbitOptions, Subsystem};
use crate::roots::illinois;
use crate::Point;

/// How points are mapped to the orbit coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoordinateScale {
    /// Affine in enclosed area between `inner` and `outer`.
    Area { inner: f64, outer: f64 },
    /// Affine in energy; `outer` may be below `inner`.
    Energy { inner: f64, outer: f64 },
}

/// Where a point sits relative to an annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Inside the inner orbit (raw coordinate below zero).
    InsideInner(f64),
    /// In the closed annulus, coordinate in `[0, 1]`.
    Annulus(f64),
    /// Beyond the outer orbit, or not on a closed orbit around the center.
    Outside,
}

/// The closed region between two nested orbits of one subsystem.
#[derive(Debug, Clone)]
pub struct Annulus {
    sys: Arc<Subsystem>,
    pub inner: ClosedOrbit,
    pub outer: ClosedOrbit,
    pub scale: CoordinateScale,
    /// Unit direction of the transversal ray used to pick orbits.
    ray: Point,
    ray_inner: f64,
    ray_outer: f64,
    opts: OrbitOptions,
}

/// One point of a period profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub c: f64,
    pub period: f64,
    pub area: f64,
    pub weighted_area: f64,
    pub energy: Option<f64>,
}

impl ProfileEntry {
    fn of(orbit: &ClosedOrbit, c: f64) -> Self {
        ProfileEntry { c, period: orbit.period, area: orbit.area, weighted_area: orbit.weighted_area, energy: orbit.energy }
    }
}

/// Periods over an annulus on Chebyshev nodes, with the two boundary orbits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodProfile {
    pub subsystem: String,
    pub entries: Vec<ProfileEntry>,
}

impl PeriodProfile {
    pub fn inner(&self) -> &ProfileEntry {
        &self.entries[0]
    }

    pub fn outer(&self) -> &ProfileEntry {
        self.entries.last().expect("profile has boundary entries")
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["c", "h", "period", "area"])?;
        for e in &self.entries {
            let h = e.energy.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([e.c.to_string(), h, e.period.to_string(), e.area.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Interior Chebyshev–Gauss nodes on `(0, 1)`, increasing.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| 0.5 * (1.0 - ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()))
        .collect()
}

impl Annulus {
    /// Annulus between the orbits through two seeds.
    pub fn from_seeds(sys: Arc<Subsystem>, inner_seed: Point, outer_seed: Point, opts: OrbitOptions) -> Result<Self, OrbitError> {
        let inner = measure_period(&sys, inner_seed, &opts)?;
        let outer = measure_period(&sys, outer_seed, &opts)?;
        let scale = match (inner.energy, outer.energy) {
            (Some(a), Some(b)) => {
                if (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0) {
                    return Err(OrbitError::InvalidAnnulus { detail: "energy levels coincide".into() });
                }
                CoordinateScale::Energy { inner: a, outer: b }
            }
            _ => CoordinateScale::Area { inner: inner.area, outer: outer.area },
        };
        Self::assemble(sys, inner, outer, scale, opts)
    }

    /// Hamiltonian annulus between two energy levels, seeded along `dir`.
    pub fn from_levels(sys: Arc<Subsystem>, inner_level: f64, outer_level: f64, dir: Point, opts: OrbitOptions) -> Result<Self, OrbitError> {
        if !sys.has_energy() {
            return Err(OrbitError::InvalidAnnulus { detail: "energy bounds need a Hamiltonian or Newtonian subsystem".into() });
        }
        if inner_level == outer_level {
            return Err(OrbitError::InvalidAnnulus { detail: "energy levels coincide".into() });
        }
        let norm = dir[0].hypot(dir[1]);
        if norm == 0.0 {
            return Err(OrbitError::InvalidAnnulus { detail: "zero seed direction".into() });
        }
        let dir = [dir[0] / norm, dir[1] / norm];
        let c = sys.center();
        let h0 = sys.energy(c).expect("has energy")?;
        let level_point = |target: f64| -> Result<Point, OrbitError> {
            let at = |l: f64| -> Result<f64, OrbitError> {
                Ok(sys.energy([c[0] + l * dir[0], c[1] + l * dir[1]]).expect("has energy")? - target)
            };
            let sign0 = h0 - target;
            let mut hi = 1e-3;
            let mut f_hi = at(hi)?;
            while f_hi.signum() == sign0.signum() {
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(OrbitError::NoBracket { detail: format!("energy {target} not reached along the seed ray") });
                }
                f_hi = at(hi)?;
            }
            let (l, _) = illinois(at, 0.0, hi, sign0, f_hi, 1e-15 * hi)?;
            Ok([c[0] + l * dir[0], c[1] + l * dir[1]])
        };
        let inner = measure_period(&sys, level_point(inner_level)?, &opts)?;
        let outer = measure_period(&sys, level_point(outer_level)?, &opts)?;
        let scale = CoordinateScale::Energy { inner: inner_level, outer: outer_level };
        Self::assemble(sys, inner, outer, scale, opts)
    }

    fn assemble(
        sys: Arc<Subsystem>,
        mut inner: ClosedOrbit,
        mut outer: ClosedOrbit,
        scale: CoordinateScale,
        opts: OrbitOptions,
    ) -> Result<Self, OrbitError> {
        if inner.area >= outer.area {
            return Err(OrbitError::InvalidAnnulus {
                detail: format!("inner orbit area {} is not below outer area {}", inner.area, outer.area),
            });
        }
        if let Some(p) = inner.polyline().iter().find(|p| !outer.encloses(**p)) {
            return Err(OrbitError::InvalidAnnulus { detail: format!("inner orbit point {p:?} lies outside the outer orbit") });
        }
        let c = sys.center();
        let d = [inner.seed[0] - c[0], inner.seed[1] - c[1]];
        let ray_inner = d[0].hypot(d[1]);
        let ray = [d[0] / ray_inner, d[1] / ray_inner];
        let (_, hit) = outer
            .ray_crossing(c, ray)
            .ok_or_else(|| OrbitError::InvalidAnnulus { detail: "outer orbit does not cross the seed ray".into() })?;
        let ray_outer = (hit[0] - c[0]).hypot(hit[1] - c[1]);
        if ray_outer <= ray_inner {
            return Err(OrbitError::NoBracket { detail: "outer orbit meets the seed ray inside the inner orbit".into() });
        }
        inner.coordinate = Some(0.0);
        outer.coordinate = Some(1.0);
        Ok(Annulus { sys, inner, outer, scale, ray, ray_inner, ray_outer, opts })
    }

    pub fn subsystem(&self) -> &Arc<Subsystem> {
        &self.sys
    }

    pub fn options(&self) -> &OrbitOptions {
        &self.opts
    }

    /// The same annulus with different measurement options.
    pub fn with_options(&self, opts: OrbitOptions) -> Self {
        Annulus { opts, ..self.clone() }
    }

    /// Uncapped orbit coordinate of a point; values outside `[0, 1]` mean
    /// inside the inner orbit or beyond the outer one.
    pub fn raw_coordinate(&self, p: Point) -> Result<f64, OrbitError> {
        match self.scale {
            CoordinateScale::Energy { inner, outer } => {
                let h = self.sys.energy(p).expect("energy scale implies energy")?;
                Ok((h - inner) / (outer - inner))
            }
            CoordinateScale::Area { inner, outer } => {
                let area = match trace(&self.sys, p, &self.opts) {
                    Ok(t) => t.area,
                    Err(OrbitError::SeedAtCenter) => 0.0,
                    Err(e) => return Err(e),
                };
                Ok((area - inner) / (outer - inner))
            }
        }
    }

    /// Period of the orbit through `p` together with its raw coordinate.
    pub fn period_and_coordinate(&self, p: Point) -> Result<(f64, f64), OrbitError> {
        let t = trace(&self.sys, p, &self.opts)?;
        let c = match self.scale {
            CoordinateScale::Energy { .. } => self.raw_coordinate(p)?,
            CoordinateScale::Area { inner, outer } => (t.area - inner) / (outer - inner),
        };
        Ok((t.period, c))
    }

    /// Period of the orbit through `p`.
    pub fn period_through(&self, p: Point) -> Result<f64, OrbitError> {
        trace(&self.sys, p, &self.opts).map(|t| t.period)
    }

    pub fn classify(&self, p: Point) -> Placement {
        match self.raw_coordinate(p) {
            Ok(c) if c < 0.0 => Placement::InsideInner(c),
            Ok(c) if c <= 1.0 => Placement::Annulus(c),
            _ => Placement::Outside,
        }
    }

    /// Orbit coordinate of a point in the closed annulus.
    pub fn coordinate_of_point(&self, p: Point) -> Result<Placement, OrbitError> {
        let c = self.raw_coordinate(p)?;
        let slack = 1e-9;
        if c > 1.0 + slack {
            return Err(OrbitError::NotInRegion { coordinate: c });
        }
        if c < -slack {
            return Ok(Placement::InsideInner(c));
        }
        Ok(Placement::Annulus(c.clamp(0.0, 1.0)))
    }

    /// Point on the seed ray at distance `l` from the center.
    pub fn ray_point(&self, l: f64) -> Point {
        let c = self.sys.center();
        [c[0] + l * self.ray[0], c[1] + l * self.ray[1]]
    }

    /// Where the orbit with coordinate `c` crosses the seed ray.
    pub fn ray_point_for(&self, c: f64) -> Result<Point, OrbitError> {
        self.ray_point_where(|p| Ok(self.raw_coordinate(p)? - c), c)
    }

    /// Solve `f(ray point) = 0` for an increasing function of the coordinate.
    pub(crate) fn ray_point_where<F>(&self, mut f: F, hint: f64) -> Result<Point, OrbitError>
    where
        F: FnMut(Point) -> Result<f64, OrbitError>,
    {
        let (a, b) = (self.ray_inner, self.ray_outer);
        let fa = f(self.ray_point(a))?;
        let fb = f(self.ray_point(b))?;
        if fa == 0.0 {
            return Ok(self.ray_point(a));
        }
        if fb == 0.0 {
            return Ok(self.ray_point(b));
        }
        if fa * fb > 0.0 {
            return Err(OrbitError::NoBracket { detail: format!("no sign change along the seed ray (target {hint})") });
        }
        let (l, _) = illinois(|l| f(self.ray_point(l)), a, b, fa, fb, 1e-14 * b)?;
        Ok(self.ray_point(l))
    }

    /// The orbit with coordinate `c`: `γ` at 0, `Γ` at 1, and in between the
    /// orbit through the ray point whose coordinate is `c`.
    pub fn orbit_from_coordinate(&self, c: f64) -> Result<ClosedOrbit, OrbitError> {
        if !(0.0..=1.0).contains(&c) {
            return Err(OrbitError::NotInRegion { coordinate: c });
        }
        if c == 0.0 {
            return Ok(self.inner.clone());
        }
        if c == 1.0 {
            return Ok(self.outer.clone());
        }
        let seed = self.ray_point_for(c)?;
        let mut orbit = measure_period(&self.sys, seed, &self.opts)?;
        orbit.coordinate = Some(c);
        Ok(orbit)
    }

    /// Period at coordinate `c` without keeping the orbit's path.
    pub fn period_at(&self, c: f64) -> Result<f64, OrbitError> {
        if c == 0.0 {
            return Ok(self.inner.period);
        }
        if c == 1.0 {
            return Ok(self.outer.period);
        }
        let seed = self.ray_point_for(c)?;
        Ok(trace(&self.sys, seed, &self.opts)?.period)
    }

    /// Boundary orbits plus `n_grid` interior Chebyshev nodes.
    pub fn period_profile(&self, n_grid: usize) -> Result<PeriodProfile, OrbitError> {
        if n_grid < 3 {
            return Err(OrbitError::InvalidAnnulus { detail: format!("profile grid needs at least 3 nodes, got {n_grid}") });
        }
        let interior: Result<Vec<ProfileEntry>, OrbitError> = chebyshev_nodes(n_grid)
            .into_par_iter()
            .map(|c| {
                let seed = self.ray_point_for(c)?;
                let orbit = measure_period(&self.sys, seed, &self.opts)?;
                Ok(ProfileEntry::of(&orbit, c))
            })
            .collect();
        let mut entries = vec![ProfileEntry::of(&self.inner, 0.0)];
        entries.extend(interior?);
        entries.push(ProfileEntry::of(&self.outer, 1.0));
        Ok(PeriodProfile { subsystem: self.sys.label().to_string(), entries })
    }
}
