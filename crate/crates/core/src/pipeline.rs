//! The certification pipeline: condition (i), quadrilateral, monotonicity,
//! dwell bounds, blocks and crossing witness, stopping at the first stage
//! that fails.

use std::sync::Arc;

use crate::config::ProjectConfig;
use crate::geometry::{build_quadrilateral_with, check_condition_i, Quadrilateral, RegionWitness};
use crate::monotone;
use crate::orbits::{Annulus, Subsystem};
use crate::report::{
    AnnulusSummary, BlockSummary, CertificationReport, Improvement, PeriodsReport, Reproducibility, ScheduleOutcome, Stage,
    StageFailure, SubsystemSummary, WitnessSummary,
};
use crate::switching::{
    build_blocks, evaluate_witness, recommend_schedule, winding_counts, Block, DwellBounds, HorseshoeWitness,
    SwitchedSystem, SwitchedTrajectory, SwitchingSchedule,
};
use crate::Point;

/// Subsystems and annuli built from a config.
pub struct Setup {
    pub subsystems: [Arc<Subsystem>; 2],
    pub annuli: [Annulus; 2],
}

impl Setup {
    pub fn build(cfg: &ProjectConfig) -> Result<Self, StageFailure> {
        let fail = |k: usize| move |e: crate::orbits::OrbitError| StageFailure::new(Stage::Orbits, format!("subsystem {k}: {e}"));
        let s1 = cfg.build_subsystem(1).map_err(fail(1))?;
        let s2 = cfg.build_subsystem(2).map_err(fail(2))?;
        let a1 = cfg.build_annulus(1, s1.clone()).map_err(fail(1))?;
        let a2 = cfg.build_annulus(2, s2.clone()).map_err(fail(2))?;
        Ok(Setup { subsystems: [s1, s2], annuli: [a1, a2] })
    }

    pub fn switched(&self, cfg: &ProjectConfig) -> SwitchedSystem {
        SwitchedSystem::new(self.subsystems[0].clone(), self.subsystems[1].clone(), cfg.tolerances)
    }
}

pub fn reproducibility(cfg: &ProjectConfig) -> Reproducibility {
    Reproducibility {
        version: env!("CARGO_PKG_VERSION").into(),
        orbit_tolerances: cfg.tolerances,
        quadrilateral: cfg.quadrilateral,
        monotone: cfg.monotone,
        witness: cfg.witness,
    }
}

/// Period profiles of both annuli on `n_grid` interior nodes.
pub fn periods(cfg: &ProjectConfig, n_grid: usize) -> Result<PeriodsReport, StageFailure> {
    let setup = Setup::build(cfg)?;
    let mut profiles = Vec::with_capacity(2);
    for (k, a) in setup.annuli.iter().enumerate() {
        let p = a.period_profile(n_grid).map_err(|e| StageFailure::new(Stage::Orbits, format!("subsystem {}: {e}", k + 1)))?;
        profiles.push(p);
    }
    Ok(PeriodsReport {
        name: cfg.name.clone(),
        reproducibility: reproducibility(cfg),
        subsystems: summaries(&setup),
        annuli: annulus_summaries(&setup),
        profiles,
    })
}

fn summaries(setup: &Setup) -> Vec<SubsystemSummary> {
    setup.subsystems.iter().enumerate().map(|(k, s)| SubsystemSummary::of(k + 1, s)).collect()
}

fn annulus_summaries(setup: &Setup) -> Vec<AnnulusSummary> {
    setup.annuli.iter().enumerate().map(|(k, a)| AnnulusSummary::of(k + 1, a)).collect()
}

/// Condition (i) and the quadrilateral.
pub fn geometry(setup: &Setup, cfg: &ProjectConfig) -> Result<(RegionWitness, Quadrilateral), StageFailure> {
    let [a1, a2] = &setup.annuli;
    let w = check_condition_i(a1, a2).map_err(|e| StageFailure::new(Stage::Condition, e))?;
    let q = build_quadrilateral_with(a1, a2, &w, &cfg.quadrilateral).map_err(|e| StageFailure::new(Stage::Quadrilateral, e))?;
    Ok((w, q))
}

/// Dwell scales from the quadrilateral's boundary periods.
pub fn dwell_bounds(q: &Quadrilateral) -> Result<DwellBounds, StageFailure> {
    DwellBounds::from_quadrilateral(q).map_err(|e| StageFailure::new(Stage::Monotonicity, e))
}

/// Everything a certification run produced, for writing artifacts.
pub struct Certification {
    pub report: CertificationReport,
    pub setup: Option<Setup>,
    pub quadrilateral: Option<Quadrilateral>,
    pub blocks: Vec<[Block; 2]>,
    pub witnesses: Vec<HorseshoeWitness>,
}

impl Certification {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }
}

/// Run the whole pipeline. Without a schedule override both recommended
/// schedules are checked; `skip_witness` stops after the blocks.
pub fn certify(cfg: &ProjectConfig, skip_witness: bool) -> Certification {
    let mut report = CertificationReport {
        name: cfg.name.clone(),
        verdict: String::new(),
        failure: None,
        reproducibility: reproducibility(cfg),
        subsystems: Vec::new(),
        annuli: Vec::new(),
        case: None,
        condition: None,
        quadrilateral: None,
        monotonicity: Vec::new(),
        boundary_periods: None,
        t_star: None,
        recommendation: None,
        improvement: None,
        schedules: Vec::new(),
        entropy_bound: None,
    };
    let mut out = Certification { report: report.clone(), setup: None, quadrilateral: None, blocks: Vec::new(), witnesses: Vec::new() };
    let result = run(cfg, skip_witness, &mut report, &mut out);
    report.verdict = match &result {
        Err(f) => format!("failed:{}", f.stage),
        Ok(()) if skip_witness => "conditions-hold-no-witness".into(),
        Ok(()) => "certified-witnessed".into(),
    };
    report.failure = result.err();
    if report.failure.is_none() && !skip_witness {
        report.entropy_bound = Some(std::f64::consts::LN_2);
    }
    out.report = report;
    out
}

fn run(cfg: &ProjectConfig, skip_witness: bool, report: &mut CertificationReport, out: &mut Certification) -> Result<(), StageFailure> {
    let setup = Setup::build(cfg)?;
    report.subsystems = summaries(&setup);
    report.annuli = annulus_summaries(&setup);
    let setup = out.setup.insert(setup);

    let (w, q) = geometry(setup, cfg)?;
    report.case = Some(w.case);
    report.condition = Some(w);
    report.quadrilateral = Some(q.descriptor());
    let q = out.quadrilateral.insert(q);

    for (k, a) in setup.annuli.iter().enumerate() {
        let cert = monotone::certify(a, &cfg.monotone)
            .map_err(|e| StageFailure::new(Stage::Monotonicity, format!("subsystem {}: {e}", k + 1)))?;
        let verdict = cert.verdict;
        report.monotonicity.push(cert);
        if !verdict.is_strict() {
            return Err(StageFailure::new(
                Stage::Monotonicity,
                format!("subsystem {}: period function is {verdict}, not strictly monotone", k + 1),
            ));
        }
    }

    report.boundary_periods = Some(q.periods);
    let bounds = dwell_bounds(q)?;
    report.t_star = Some(bounds.t_star);
    let rec = recommend_schedule(&bounds);
    report.improvement = Some(Improvement::of(&rec, bounds.t_star));
    let schedules: Vec<SwitchingSchedule> = match cfg.schedule.resolve(Some(bounds.t_star)) {
        Ok(Some(s)) => vec![s],
        Ok(None) => rec.schedules.to_vec(),
        Err(e) => return Err(StageFailure::new(Stage::Config, e)),
    };
    report.recommendation = Some(rec);

    let sys = setup.switched(cfg);
    for schedule in schedules {
        let winding = [winding_counts(&schedule, &bounds, 1), winding_counts(&schedule, &bounds, 2)];
        report.schedules.push(ScheduleOutcome { schedule, winding, blocks: None, witness: None });
        let outcome = report.schedules.last_mut().expect("just pushed");
        let blocks = build_blocks(q, &schedule).map_err(|e| StageFailure::new(Stage::Blocks, e))?;
        outcome.blocks = Some([BlockSummary::of(&blocks[0]), BlockSummary::of(&blocks[1])]);
        if !skip_witness {
            let witness =
                evaluate_witness(&sys, &schedule, q, &blocks, &cfg.witness).map_err(|e| StageFailure::new(Stage::Witness, e))?;
            let summary = WitnessSummary::of(&witness);
            let failure = summary.first_failure.clone();
            outcome.witness = Some(summary);
            out.witnesses.push(witness);
            if let Some(f) = failure {
                out.blocks.push(blocks);
                return Err(StageFailure::new(Stage::Witness, format!("schedule {:?}: {f}", schedule.dwell)));
            }
        }
        out.blocks.push(blocks);
    }
    Ok(())
}

/// The schedule for simulation: the config's override, or the first
/// recommended one.
pub fn simulation_schedule(cfg: &ProjectConfig, setup: &Setup) -> Result<(SwitchingSchedule, Option<DwellBounds>), StageFailure> {
    if let Some(s) = cfg.schedule.resolve(None).ok().flatten() {
        return Ok((s, None));
    }
    let (_, q) = geometry(setup, cfg)?;
    let bounds = dwell_bounds(&q)?;
    let s = match cfg.schedule.resolve(Some(bounds.t_star)).map_err(|e| StageFailure::new(Stage::Config, e))? {
        Some(s) => s,
        None => recommend_schedule(&bounds).schedules[0],
    };
    Ok((s, Some(bounds)))
}

/// Switched trajectory from `x0` over `[0, horizon]`.
pub fn simulate(cfg: &ProjectConfig, setup: &Setup, schedule: &SwitchingSchedule, x0: Point, horizon: f64) -> Result<SwitchedTrajectory, StageFailure> {
    setup.switched(cfg).simulate(schedule, x0, horizon).map_err(|e| StageFailure::new(Stage::Orbits, e))
}
