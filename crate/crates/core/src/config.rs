//! Project configuration: two subsystems, their annuli and run settings.
//!
//! ```json
//! {
//!   "name": "toy",
//!   "subsystems": [
//!     { "label": "right", "kind": "general", "fx": "-y", "fy": "x - 1",
//!       "center": [1, 0], "annulus": { "seeds": [[0, 0], [-1, 0]] } },
//!     { "label": "left", "kind": "hamiltonian", "h": "((x + 1)^2 + y^2) / 2",
//!       "center": [-1, 0], "annulus": { "energies": { "bounds": [0.5, 2], "direction": [1, 0] } } }
//!   ],
//!   "tolerances": { "rtol": 1e-10, "atol": 1e-12 },
//!   "schedule": { "t1": 100, "t2": 60, "first": 1 },
//!   "simulate": { "x0": [0, 1], "horizon": 1000 }
//! }
//! ```
//!
//! `kind` is `general` (`fx`, `fy`), `hamiltonian` (`h` and an optional
//! `scale` m with `x' = m H_y`, `y' = -m H_x`) or `newtonian` (`g` for
//! `x'' + g(x) = 0`). Only the first coordinate of a Newtonian center is
//! used. Every section other than `subsystems` is optional.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::geometry::QuadOptions;
use crate::monotone::MonotoneOptions;
use crate::ode::Tolerances;
use crate::orbits::{Annulus, OrbitError, OrbitOptions, Subsystem};
use crate::switching::{SwitchingSchedule, WitnessOptions};
use crate::Point;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown preset {0:?} (known: toy, sir, harmonic, harmonic-pair, pendulum-duffing)")]
    UnknownPreset(String),
    #[error("subsystem {index}: {detail}")]
    Invalid { index: usize, detail: String },
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    General,
    Hamiltonian,
    Newtonian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum AnnulusSpec {
    /// Inner and outer seed points.
    Seeds([Point; 2]),
    /// Energy levels `c < C`, seeded along a ray from the center.
    Energies { bounds: [f64; 2], direction: Point },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemSpec {
    pub label: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    pub center: Point,
    pub annulus: AnnulusSpec,
}

/// Schedule override. Absolute dwell times win over multiples of `T*`; a
/// dwell left unset uses the recommended multiple.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    /// Dwell times as multiples of `[T₁*, T₂*]`.
    pub multiples: Option<[f64; 2]>,
    pub first: Option<usize>,
}

impl ScheduleSpec {
    pub fn is_empty(&self) -> bool {
        self.t1.is_none() && self.t2.is_none() && self.multiples.is_none()
    }

    /// Resolve against the dwell scales; `None` when nothing is set.
    pub fn resolve(&self, t_star: Option<[f64; 2]>) -> Result<Option<SwitchingSchedule>, ConfigError> {
        if self.is_empty() {
            return Ok(None);
        }
        let first = self.first.unwrap_or(1);
        // A dwell given neither directly nor as a multiple takes the
        // recommended multiple: 5 for the first subsystem, 3 for the other.
        let default_multiple = |k: usize| if k + 1 == first { 5.0 } else { 3.0 };
        let from_star = |k: usize| -> Result<f64, ConfigError> {
            let m = self.multiples.map_or_else(|| default_multiple(k), |m| m[k]);
            t_star
                .map(|t| m * t[k])
                .ok_or_else(|| ConfigError::Other(format!("dwell of subsystem {} needs T*, which was not computed", k + 1)))
        };
        let t1 = match self.t1 {
            Some(t) => t,
            None => from_star(0)?,
        };
        let t2 = match self.t2 {
            Some(t) => t,
            None => from_star(1)?,
        };
        SwitchingSchedule::new(t1, t2, first).map(Some).map_err(|e| ConfigError::Other(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    pub x0: Option<Point>,
    pub horizon: Option<f64>,
    /// Horizon as a multiple of `T₁*`; ignored when `horizon` is set.
    pub horizon_t1_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub subsystems: [SubsystemSpec; 2],
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub quadrilateral: QuadOptions,
    #[serde(default)]
    pub monotone: MonotoneOptions,
    #[serde(default)]
    pub witness: WitnessOptions,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

const PRESETS: [(&str, &str); 4] = [
    ("toy", include_str!("../presets/toy.json")),
    ("sir", include_str!("../presets/sir.json")),
    ("harmonic", include_str!("../presets/harmonic.json")),
    ("pendulum-duffing", include_str!("../presets/pendulum-duffing.json")),
];

impl ProjectConfig {
    pub fn preset_names() -> Vec<&'static str> {
        PRESETS.iter().map(|(n, _)| *n).collect()
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let key = if name == "harmonic-pair" { "harmonic" } else { name };
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == key).ok_or_else(|| ConfigError::UnknownPreset(name.into()))?;
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ProjectConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    /// Expressions parse, required fields are present, numbers are finite.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (i, s) in self.subsystems.iter().enumerate() {
            let bad = |detail: String| ConfigError::Invalid { index: i + 1, detail };
            let need = |field: &Option<String>, name: &str| -> Result<(), ConfigError> {
                let text = field.as_deref().ok_or_else(|| bad(format!("{:?} subsystems need {name}", s.kind)))?;
                Expr::parse(text).map(|_| ()).map_err(|e| bad(format!("{name}: {e}")))
            };
            match s.kind {
                Kind::General => {
                    need(&s.fx, "fx")?;
                    need(&s.fy, "fy")?;
                }
                Kind::Hamiltonian => {
                    need(&s.h, "h")?;
                    if s.scale.is_some() {
                        need(&s.scale, "scale")?;
                    }
                }
                Kind::Newtonian => need(&s.g, "g")?,
            }
            if !s.center.iter().all(|v| v.is_finite()) {
                return Err(bad("center must be finite".into()));
            }
            match &s.annulus {
                AnnulusSpec::Seeds(seeds) => {
                    if !seeds.iter().flatten().all(|v| v.is_finite()) {
                        return Err(bad("seeds must be finite points".into()));
                    }
                }
                AnnulusSpec::Energies { bounds, direction } => {
                    if s.kind == Kind::General {
                        return Err(bad("energy bounds need a Hamiltonian or Newtonian subsystem".into()));
                    }
                    if !(bounds[0].is_finite() && bounds[1].is_finite() && bounds[0] < bounds[1]) {
                        return Err(bad(format!("energy bounds must satisfy c < C, got {bounds:?}")));
                    }
                    if !direction.iter().all(|v| v.is_finite()) || direction[0] == 0.0 && direction[1] == 0.0 {
                        return Err(bad("direction must be a finite non-zero vector".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn orbit_options(&self) -> OrbitOptions {
        OrbitOptions::with_tolerances(self.tolerances)
    }

    /// Subsystem `k` (1 or 2).
    pub fn build_subsystem(&self, k: usize) -> Result<Arc<Subsystem>, OrbitError> {
        let s = &self.subsystems[k - 1];
        let parse = |t: &Option<String>| Expr::parse(t.as_deref().unwrap_or_default()).expect("validated");
        let sys = match s.kind {
            Kind::General => Subsystem::general(&s.label, &parse(&s.fx), &parse(&s.fy), s.center)?,
            Kind::Hamiltonian => {
                let scale = s.scale.as_ref().map(|_| parse(&s.scale));
                Subsystem::hamiltonian(&s.label, &parse(&s.h), scale.as_ref(), s.center)?
            }
            Kind::Newtonian => Subsystem::newtonian(&s.label, &parse(&s.g), s.center[0])?,
        };
        Ok(Arc::new(sys))
    }

    pub fn build_annulus(&self, k: usize, sys: Arc<Subsystem>) -> Result<Annulus, OrbitError> {
        let opts = self.orbit_options();
        match &self.subsystems[k - 1].annulus {
            AnnulusSpec::Seeds([a, b]) => Annulus::from_seeds(sys, *a, *b, opts),
            AnnulusSpec::Energies { bounds, direction } => Annulus::from_levels(sys, bounds[0], bounds[1], *direction, opts),
        }
    }
}
