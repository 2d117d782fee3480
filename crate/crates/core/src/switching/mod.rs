//! Periodic switching between two subsystems: dwell-time bounds, the
//! Poincaré map, simulation, the two blocks inside the quadrilateral and the
//! numerical crossing witness.

mod blocks;
mod witness;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use blocks::{build_blocks, Block, OrbitArc};
pub use witness::{evaluate_witness, verify_crossing, ConnectionResult, HorseshoeWitness, PairResult, WitnessOptions};

use crate::geometry::Quadrilateral;
use crate::ode::{flow, integrate, OdeError, Tolerances};
use crate::orbits::{return_time, OrbitError, OrbitOptions, Subsystem};
use crate::Point;

/// Relative gap between boundary periods below which the pair counts as
/// isochronous.
pub const ISO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SwitchingError {
    #[error("periods {p_low} and {p_high} coincide: the period function is not monotone enough to bound dwell times")]
    Isochronous { p_low: f64, p_high: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("integration failed in subsystem {phase}: {source}")]
    Flow { phase: usize, source: OdeError },
    #[error("ratio {ratio} needs period {period}, outside the quadrilateral's range [{}, {}]", range[0], range[1])]
    BandOutsideQuad { ratio: f64, period: f64, range: [f64; 2] },
    #[error("ratio bands overlap: N - 2 = {} < n + 3 = {}", big_n - 2, n + 3)]
    BandsOverlap { n: i64, big_n: i64 },
    #[error("level curve for ratio {ratio}: {detail}")]
    LevelCurve { ratio: f64, detail: String },
    #[error("crossing witness failed for pair {pair:?}, connection {connection}: {diagnostic}")]
    WitnessFailed { pair: (usize, usize), connection: usize, diagnostic: String },
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// `p_low p_high / |p_high - p_low|`.
pub fn dwell_star(p_low: f64, p_high: f64) -> Result<f64, SwitchingError> {
    if !(p_low > 0.0 && p_high > 0.0 && p_low.is_finite() && p_high.is_finite()) {
        return Err(SwitchingError::InvalidSchedule(format!("periods must be positive, got {p_low} and {p_high}")));
    }
    let gap = (p_high - p_low).abs();
    if gap <= ISO_TOL * p_low.max(p_high) {
        return Err(SwitchingError::Isochronous { p_low, p_high });
    }
    Ok(p_low * p_high / gap)
}

/// Dwell durations of one switching period; subsystem `first` runs first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSchedule {
    /// `[T₁, T₂]`.
    pub dwell: [f64; 2],
    pub first: usize,
}

impl SwitchingSchedule {
    pub fn new(t1: f64, t2: f64, first: usize) -> Result<Self, SwitchingError> {
        let s = SwitchingSchedule { dwell: [t1, t2], first };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SwitchingError> {
        if self.first != 1 && self.first != 2 {
            return Err(SwitchingError::InvalidSchedule(format!("first subsystem must be 1 or 2, got {}", self.first)));
        }
        if self.dwell.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(SwitchingError::InvalidSchedule(format!("dwell times must be finite and non-negative: {:?}", self.dwell)));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.dwell[0] + self.dwell[1]
    }

    /// Subsystems in the order they run.
    pub fn order(&self) -> [usize; 2] {
        if self.first == 1 {
            [1, 2]
        } else {
            [2, 1]
        }
    }

    pub fn dwell_of(&self, k: usize) -> f64 {
        self.dwell[k - 1]
    }
}

/// Boundary periods of the quadrilateral's band orbits and the derived
/// dwell scales `T₁*`, `T₂*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellBounds {
    /// `[[𝒯₁(c̃₁), 𝒯₁(C̃₁)], [𝒯₂(c̃₂), 𝒯₂(C̃₂)]]`.
    pub periods: [[f64; 2]; 2],
    pub t_star: [f64; 2],
}

impl DwellBounds {
    pub fn from_periods(periods: [[f64; 2]; 2]) -> Result<Self, SwitchingError> {
        let t_star = [dwell_star(periods[0][0], periods[0][1])?, dwell_star(periods[1][0], periods[1][1])?];
        Ok(DwellBounds { periods, t_star })
    }

    pub fn from_quadrilateral(q: &Quadrilateral) -> Result<Self, SwitchingError> {
        Self::from_periods(q.periods)
    }

    pub fn min_period(&self, k: usize) -> f64 {
        self.periods[k - 1][0].min(self.periods[k - 1][1])
    }

    pub fn max_period(&self, k: usize) -> f64 {
        self.periods[k - 1][0].max(self.periods[k - 1][1])
    }
}

/// The two minimal certified schedules and how they compare with the
/// symmetric bound `6T*` per subsystem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleRecommendation {
    /// `(5T₁*, 3T₂*)` with subsystem 1 first, then `(3T₁*, 5T₂*)` with
    /// subsystem 2 first.
    pub schedules: [SwitchingSchedule; 2],
    pub totals: [f64; 2],
    /// `6T₁* + 6T₂*`.
    pub symmetric_total: f64,
    pub note: String,
}

pub fn recommend_schedule(bounds: &DwellBounds) -> ScheduleRecommendation {
    let [a, b] = bounds.t_star;
    let schedules = [
        SwitchingSchedule { dwell: [5.0 * a, 3.0 * b], first: 1 },
        SwitchingSchedule { dwell: [3.0 * a, 5.0 * b], first: 2 },
    ];
    let totals = [schedules[0].period(), schedules[1].period()];
    let symmetric_total = 6.0 * a + 6.0 * b;
    let note = format!(
        "minimal certified switching periods {} and {} against {} for the symmetric bound T_k >= 6T_k*",
        totals[0], totals[1], symmetric_total
    );
    ScheduleRecommendation { schedules, totals, symmetric_total, note }
}

/// How often the leading subsystem winds during its dwell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindingCounts {
    pub subsystem: usize,
    /// `N = ⌊T/𝒯_min⌋`.
    pub big_n: i64,
    /// `n = ⌊T/𝒯_max⌋`.
    pub n: i64,
}

impl WindingCounts {
    pub fn difference(&self) -> i64 {
        self.big_n - self.n
    }
}

/// Floor that treats ratios within relative `1e-9` of an integer as that
/// integer, so exact multiples survive rounding in the periods.
pub fn snapped_floor(r: f64) -> i64 {
    let near = r.round();
    if (r - near).abs() <= 1e-9 * r.abs().max(1.0) {
        near as i64
    } else {
        r.floor() as i64
    }
}

/// Winding counts of subsystem `k` for dwell `T_k`.
pub fn winding_counts(schedule: &SwitchingSchedule, bounds: &DwellBounds, k: usize) -> WindingCounts {
    let t = schedule.dwell_of(k);
    WindingCounts { subsystem: k, big_n: snapped_floor(t / bounds.min_period(k)), n: snapped_floor(t / bounds.max_period(k)) }
}

/// The two subsystems with the integrator settings used for maps.
#[derive(Debug, Clone)]
pub struct SwitchedSystem {
    pub subsystems: [Arc<Subsystem>; 2],
    pub tol: Tolerances,
}

/// One recorded state of a switched trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub subsystem: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t: f64,
    pub from: usize,
    pub to: usize,
    pub x: f64,
    pub y: f64,
}

/// Concatenated flow segments with the switching instants.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SwitchedTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub switches: Vec<SwitchEvent>,
}

impl SwitchedTrajectory {
    pub fn final_point(&self) -> Option<Point> {
        self.samples.last().map(|s| [s.x, s.y])
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y", "subsystem"])?;
        for s in &self.samples {
            w.serialize((s.t, s.x, s.y, s.subsystem))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_switches_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "from", "to", "x", "y"])?;
        for s in &self.switches {
            w.serialize((s.t, s.from, s.to, s.x, s.y))?;
        }
        w.flush()?;
        Ok(())
    }
}

impl SwitchedSystem {
    pub fn new(sys1: Arc<Subsystem>, sys2: Arc<Subsystem>, tol: Tolerances) -> Self {
        SwitchedSystem { subsystems: [sys1, sys2], tol }
    }

    pub fn subsystem(&self, k: usize) -> &Arc<Subsystem> {
        &self.subsystems[k - 1]
    }

    /// Semi-map: the flow of subsystem `k` for time `t`.
    pub fn semi_map(&self, k: usize, t: f64, p: Point) -> Result<Point, SwitchingError> {
        flow(self.subsystems[k - 1].field(), p, t, &self.tol).map_err(|source| SwitchingError::Flow { phase: k, source })
    }

    /// [`semi_map`](Self::semi_map) with whole turns removed first: on a
    /// closed orbit of period `𝒯`, `φ(t, p) = φ(t mod 𝒯, p)`. Points whose
    /// first return does not close up are integrated directly.
    pub fn semi_map_reduced(&self, k: usize, t: f64, p: Point) -> Result<Point, SwitchingError> {
        let sys = &self.subsystems[k - 1];
        if t <= 3.0 * sys.linear_period() {
            return self.semi_map(k, t, p);
        }
        let opts = OrbitOptions { tol: self.tol, closure_tol: 1e-6, ..OrbitOptions::default() };
        match return_time(sys, p, &opts) {
            Ok(period) => self.semi_map(k, t.rem_euclid(period), p),
            Err(_) => self.semi_map(k, t, p),
        }
    }

    /// `φ_second(T_second, φ_first(T_first, p))`.
    pub fn poincare_map(&self, schedule: &SwitchingSchedule, p: Point) -> Result<Point, SwitchingError> {
        let [a, b] = schedule.order();
        let q = self.semi_map(a, schedule.dwell_of(a), p)?;
        self.semi_map(b, schedule.dwell_of(b), q)
    }

    /// Follow the switched flow from `x0` over `[0, horizon]`, keeping the
    /// integrator's accepted nodes and exact switching instants.
    pub fn simulate(&self, schedule: &SwitchingSchedule, x0: Point, horizon: f64) -> Result<SwitchedTrajectory, SwitchingError> {
        schedule.validate()?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(SwitchingError::InvalidSchedule(format!("horizon must be finite and non-negative, got {horizon}")));
        }
        let mut out = SwitchedTrajectory::default();
        if horizon == 0.0 {
            return Ok(out);
        }
        if schedule.period() == 0.0 {
            return Err(SwitchingError::InvalidSchedule("switching period is zero".into()));
        }
        let order = schedule.order();
        let mut t = 0.0;
        let mut p = x0;
        let mut phase = 0;
        out.samples.push(TrajectorySample { t, x: p[0], y: p[1], subsystem: order[0] });
        while t < horizon {
            let k = order[phase];
            let dt = schedule.dwell_of(k).min(horizon - t);
            if dt > 0.0 {
                let traj = integrate(self.subsystems[k - 1].field(), p, dt, &self.tol)
                    .map_err(|source| SwitchingError::Flow { phase: k, source })?;
                for (tk, s) in traj.times.iter().zip(&traj.states).skip(1) {
                    out.samples.push(TrajectorySample { t: t + tk, x: s[0], y: s[1], subsystem: k });
                }
                p = traj.final_state();
            }
            // Sum the exact dwell, not the integrator's last node time.
            t = if dt == horizon - t { horizon } else { t + dt };
            if t < horizon {
                let next = order[1 - phase];
                out.switches.push(SwitchEvent { t, from: k, to: next, x: p[0], y: p[1] });
            }
            phase = 1 - phase;
        }
        if let Some(last) = out.samples.last_mut() {
            last.t = horizon;
        }
        Ok(out)
    }

    /// [`simulate`](Self::simulate) over `n` full switching periods.
    pub fn simulate_periods(&self, schedule: &SwitchingSchedule, x0: Point, n: usize) -> Result<SwitchedTrajectory, SwitchingError> {
        if n == 0 {
            return Err(SwitchingError::InvalidSchedule("at least one period is needed".into()));
        }
        self.simulate(schedule, x0, n as f64 * schedule.period())
    }
}
