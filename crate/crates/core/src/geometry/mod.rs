//! Overlap of two annuli: the condition-(i) test and the curvilinear
//! quadrilateral built from four orbit arcs.

mod condition;
pub mod polyline;
mod quadrilateral;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use condition::{check_condition_i, BoundaryCensus, RegionWitness, MEMBERSHIP_TOL};
pub use polyline::{curve_intersections, Crossing, IntersectionError};
pub use quadrilateral::{build_quadrilateral, build_quadrilateral_with, ArcRole, QuadArc, QuadDescriptor, Quadrilateral, QuadOptions};

use crate::orbits::OrbitError;

/// Which boundary orbit of annulus `i` meets annulus `j`, and where else it
/// goes. The first part names the orbit (`I` inner, `II` outer), the second
/// where it escapes to (`I` beyond the outer orbit of `j`, `II` inside the
/// inner orbit of `j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "I.I")]
    InnerEscapesOut,
    #[serde(rename = "I.II")]
    InnerEscapesIn,
    #[serde(rename = "II.I")]
    OuterEscapesOut,
    #[serde(rename = "II.II")]
    OuterEscapesIn,
}

impl CaseTag {
    pub const ALL: [CaseTag; 4] =
        [CaseTag::InnerEscapesOut, CaseTag::InnerEscapesIn, CaseTag::OuterEscapesOut, CaseTag::OuterEscapesIn];

    /// Whether the witness orbit is the inner orbit `γ_i`.
    pub fn uses_inner(self) -> bool {
        matches!(self, CaseTag::InnerEscapesOut | CaseTag::InnerEscapesIn)
    }

    /// Whether the orbit escapes beyond the outer orbit of `j`.
    pub fn escapes_out(self) -> bool {
        matches!(self, CaseTag::InnerEscapesOut | CaseTag::OuterEscapesOut)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::InnerEscapesOut => "I.I",
            CaseTag::InnerEscapesIn => "I.II",
            CaseTag::OuterEscapesOut => "II.I",
            CaseTag::OuterEscapesIn => "II.II",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum GeometryError {
    #[error("condition (i) fails: {summary}")]
    ConditionFails { summary: String },
    #[error("no quadrilateral found for shrink parameters down to {eps_min:e}")]
    EpsilonUnderflow { eps_min: f64, last_reason: String },
    #[error("annuli must belong to subsystems 1 and 2 in order")]
    BadPair,
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Intersection(#[from] IntersectionError),
}
