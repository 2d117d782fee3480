//! Serializable summaries written by the pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{CaseTag, QuadDescriptor, QuadOptions, RegionWitness};
use crate::monotone::{MonotoneOptions, MonotonicityCertificate};
use crate::ode::Tolerances;
use crate::orbits::{Annulus, CoordinateScale, PeriodProfile, Subsystem, SubsystemKind};
use crate::switching::{Block, HorseshoeWitness, ScheduleRecommendation, SwitchingSchedule, WindingCounts, WitnessOptions};
use crate::Point;

/// Pipeline stages, in order. The exit code of a failed run names the stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Orbits,
    Condition,
    Quadrilateral,
    Monotonicity,
    Blocks,
    Witness,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Orbits => "orbits",
            Stage::Condition => "condition",
            Stage::Quadrilateral => "quadrilateral",
            Stage::Monotonicity => "monotonicity",
            Stage::Blocks => "blocks",
            Stage::Witness => "witness",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 1,
            Stage::Orbits => 3,
            Stage::Condition => 4,
            Stage::Quadrilateral => 5,
            Stage::Monotonicity => 6,
            Stage::Blocks => 7,
            Stage::Witness => 8,
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{stage} stage failed: {message}")]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

impl StageFailure {
    pub fn new(stage: Stage, message: impl std::fmt::Display) -> Self {
        StageFailure { stage, message: message.to_string() }
    }
}

/// Every setting that influences the numbers in a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reproducibility {
    pub version: String,
    pub orbit_tolerances: Tolerances,
    pub quadrilateral: QuadOptions,
    pub monotone: MonotoneOptions,
    pub witness: WitnessOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsystemSummary {
    pub index: usize,
    pub label: String,
    pub kind: String,
    pub center: Point,
    /// Canonical forms of the defining expressions.
    pub expressions: BTreeMap<String, String>,
    pub linear_period: f64,
}

impl SubsystemSummary {
    pub fn of(index: usize, sys: &Subsystem) -> Self {
        let mut expressions = BTreeMap::new();
        let kind = match sys.kind() {
            SubsystemKind::General => "general",
            SubsystemKind::Hamiltonian => "hamiltonian",
            SubsystemKind::Newtonian => "newtonian",
        };
        if let Some(n) = sys.newtonian_data() {
            expressions.insert("g".into(), n.g.to_string());
        } else if let Some(h) = sys.hamiltonian_expr() {
            expressions.insert("h".into(), h.to_string());
            if let Some(m) = sys.scale_expr() {
                expressions.insert("scale".into(), m.to_string());
            }
        }
        if !sys.field().note().is_empty() {
            expressions.insert("field".into(), sys.field().note().to_string());
        }
        SubsystemSummary {
            index,
            label: sys.label().into(),
            kind: kind.into(),
            center: sys.center(),
            expressions,
            linear_period: sys.linear_period(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusSummary {
    pub subsystem: usize,
    pub inner_seed: Point,
    pub outer_seed: Point,
    pub inner_period: f64,
    pub outer_period: f64,
    /// `"energy"` or `"area"`.
    pub coordinate: String,
    pub bounds: [f64; 2],
}

impl AnnulusSummary {
    pub fn of(subsystem: usize, a: &Annulus) -> Self {
        let (coordinate, bounds) = match a.scale {
            CoordinateScale::Energy { inner, outer } => ("energy", [inner, outer]),
            CoordinateScale::Area { inner, outer } => ("area", [inner, outer]),
        };
        AnnulusSummary {
            subsystem,
            inner_seed: a.inner.seed,
            outer_seed: a.outer.seed,
            inner_period: a.inner.period,
            outer_period: a.outer.period,
            coordinate: coordinate.into(),
            bounds,
        }
    }
}

/// The certified switching periods against the symmetric bound
/// `T_k > 6T_k*` for both subsystems.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Improvement {
    pub certified_totals: [f64; 2],
    pub symmetric_total: f64,
    /// Totals divided by the mean of `T₁*` and `T₂*`: 8 against 12 when
    /// the two scales agree.
    pub certified_in_t_star: [f64; 2],
    pub symmetric_in_t_star: f64,
    pub note: String,
}

impl Improvement {
    pub fn of(rec: &ScheduleRecommendation, t_star: [f64; 2]) -> Self {
        let mean = 0.5 * (t_star[0] + t_star[1]);
        let certified_in_t_star = [rec.totals[0] / mean, rec.totals[1] / mean];
        let symmetric_in_t_star = rec.symmetric_total / mean;
        let note = format!(
            "certified schedules (5T1*, 3T2*) and (3T1*, 5T2*) have total periods {:.9} and {:.9} ({:.4} T* and {:.4} T*); \
             the symmetric bound 6T1* + 6T2* gives {:.9} ({:.4} T*)",
            rec.totals[0], rec.totals[1], certified_in_t_star[0], certified_in_t_star[1], rec.symmetric_total, symmetric_in_t_star
        );
        Improvement { certified_totals: rec.totals, symmetric_total: rec.symmetric_total, certified_in_t_star, symmetric_in_t_star, note }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSummary {
    pub index: usize,
    pub lead: usize,
    pub band: [f64; 2],
    pub level_periods: [f64; 2],
    pub level_coordinates: [f64; 2],
    pub area: f64,
}

impl BlockSummary {
    pub fn of(b: &Block) -> Self {
        BlockSummary {
            index: b.index,
            lead: b.lead,
            band: b.band,
            level_periods: b.level_periods,
            level_coordinates: b.level_coordinates,
            area: b.area,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSummary {
    pub source: usize,
    pub target: usize,
    pub passed: bool,
    pub connections_passed: usize,
    pub connections: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub label: String,
    pub passed: bool,
    pub entropy_bound: Option<f64>,
    pub pairs: Vec<PairSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl WitnessSummary {
    pub fn of(w: &HorseshoeWitness) -> Self {
        let pairs = w
            .pairs
            .iter()
            .map(|p| PairSummary {
                source: p.source,
                target: p.target,
                passed: p.passed,
                connections_passed: p.connections.iter().filter(|c| c.passed).count(),
                connections: p.connections.len(),
            })
            .collect();
        let first_failure = w
            .first_failure()
            .map(|(p, c)| format!("pair ({}, {}), connection {}: {}", p.source, p.target, c.index, c.diagnostic));
        WitnessSummary { label: w.label.clone(), passed: w.passed, entropy_bound: w.entropy_bound, pairs, first_failure }
    }
}

/// Blocks and witness for one switching schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleOutcome {
    pub schedule: SwitchingSchedule,
    pub winding: [WindingCounts; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<[BlockSummary; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessSummary>,
}

/// Outcome of a full certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    pub name: String,
    /// `certified-witnessed`, `conditions-hold-no-witness` or
    /// `failed:<stage>`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    pub reproducibility: Reproducibility,
    pub subsystems: Vec<SubsystemSummary>,
    pub annuli: Vec<AnnulusSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<RegionWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrilateral: Option<QuadDescriptor>,
    pub monotonicity: Vec<MonotonicityCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_periods: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recommendation: Option<ScheduleRecommendation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improvement: Option<Improvement>,
    pub schedules: Vec<ScheduleOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_bound: Option<f64>,
}

impl CertificationReport {
    pub fn exit_code(&self) -> i32 {
        match (&self.failure, self.verdict.as_str()) {
            (Some(f), _) => f.stage.exit_code(),
            (None, "certified-witnessed") => 0,
            _ => 2,
        }
    }
}

/// Output of the `periods` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodsReport {
    pub name: String,
    pub reproducibility: Reproducibility,
    pub subsystems: Vec<SubsystemSummary>,
    pub annuli: Vec<AnnulusSummary>,
    pub profiles: Vec<PeriodProfile>,
}
