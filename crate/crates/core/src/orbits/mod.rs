//! Closed orbits of planar subsystems, their periods, and the orbit
//! coordinate of an annulus.

mod annulus;
mod closed;
mod subsystem;

use serde::{Deserialize, Serialize};

pub use annulus::{chebyshev_nodes, Annulus, CoordinateScale, PeriodProfile, Placement, ProfileEntry};
pub use closed::{enclosed_area, measure_period, return_time, ClosedOrbit};
pub use subsystem::{Newtonian, Subsystem, SubsystemKind};

use crate::expr::DomainError;
use crate::ode::{OdeError, Tolerances};
use crate::quad::QuadError;
use crate::Point;

#[derive(Debug, Clone, thiserror::Error)]
pub enum OrbitError {
    #[error("no return to the section within t_max = {t_max}")]
    NotPeriodic { t_max: f64 },
    #[error("first return misses the seed by {distance:e}")]
    ReturnedToWrongPoint { distance: f64 },
    #[error("seed coincides with the center")]
    SeedAtCenter,
    #[error("flow at {point:?} is tangent to the return ray")]
    RayTangent { point: Point },
    #[error("orbit polyline is degenerate or self-intersecting")]
    SelfIntersecting,
    #[error("could not resolve {what} to the requested tolerance")]
    Unresolved { what: String },
    #[error("nesting violated: {detail}")]
    NoBracket { detail: String },
    #[error("point is beyond the outer orbit (coordinate {coordinate})")]
    NotInRegion { coordinate: f64 },
    #[error("center not found: {detail}")]
    CenterNotFound { detail: String },
    #[error("hypothesis violated: {detail}")]
    HypothesisViolated { detail: String },
    #[error("invalid annulus: {detail}")]
    InvalidAnnulus { detail: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Knobs for orbit measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitOptions {
    pub tol: Tolerances,
    /// Allowed distance between the seed and its first return.
    pub closure_tol: f64,
    /// Relative agreement required between area refinements.
    pub area_tol: f64,
    /// Number of time-uniform samples kept per orbit.
    pub samples: usize,
    /// Give up after this many linearized periods.
    pub max_periods: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions { tol: Tolerances::default(), closure_tol: 1e-7, area_tol: 1e-9, samples: 1024, max_periods: 50.0 }
    }
}

impl OrbitOptions {
    pub fn with_tolerances(tol: Tolerances) -> Self {
        OrbitOptions { tol, ..Self::default() }
    }
}
