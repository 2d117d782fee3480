use std::path::Path;
use std::process::{Command, Output};

use horseshoe::config::{AnnulusSpec, ConfigError, ProjectConfig};
use horseshoe::pipeline::{self, Setup};
use horseshoe::report::Stage;

const DOC_EXAMPLE: &str = r#"{
  "name": "toy",
  "subsystems": [
    { "label": "right", "kind": "general", "fx": "-y", "fy": "x - 1",
      "center": [1, 0], "annulus": { "seeds": [[0, 0], [-1, 0]] } },
    { "label": "left", "kind": "hamiltonian", "h": "((x + 1)^2 + y^2) / 2",
      "center": [-1, 0], "annulus": { "energies": { "bounds": [0.5, 2], "direction": [1, 0] } } }
  ],
  "tolerances": { "rtol": 1e-10, "atol": 1e-12 },
  "schedule": { "t1": 100, "t2": 60, "first": 1 },
  "simulate": { "x0": [0, 1], "horizon": 1000 }
}"#;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horseshoe")).args(args).env("HORSESHOE_OUT", out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn documented_config_parses_and_builds() {
    let cfg = ProjectConfig::from_json(DOC_EXAMPLE).unwrap();
    assert_eq!(cfg.subsystems[1].annulus, AnnulusSpec::Energies { bounds: [0.5, 2.0], direction: [1.0, 0.0] });
    assert_eq!(cfg.schedule.first, Some(1));
    let setup = Setup::build(&cfg).unwrap();
    // Energy 1/2 is the unit circle about (-1, 0).
    let inner = setup.annuli[1].inner.seed;
    assert!(((inner[0] + 1.0).hypot(inner[1]) - 1.0).abs() < 1e-9, "{inner:?}");
    assert!((setup.annuli[0].inner.period - 2.0 * std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn validation_names_the_offending_subsystem() {
    let missing = DOC_EXAMPLE.replace(r#""fx": "-y", "#, "");
    match ProjectConfig::from_json(&missing) {
        Err(ConfigError::Invalid { index: 1, detail }) => assert!(detail.contains("fx"), "{detail}"),
        other => panic!("{other:?}"),
    }
    let bad_expr = DOC_EXAMPLE.replace(r#""h": "((x + 1)^2 + y^2) / 2""#, r#""h": "((x + 1)^2 + y^2 / 2""#);
    match ProjectConfig::from_json(&bad_expr) {
        Err(ConfigError::Invalid { index: 2, detail }) => assert!(detail.contains("offset"), "{detail}"),
        other => panic!("{other:?}"),
    }
    let reversed = DOC_EXAMPLE.replace("[0.5, 2]", "[2, 0.5]");
    assert!(matches!(ProjectConfig::from_json(&reversed), Err(ConfigError::Invalid { index: 2, .. })));
    let typo = DOC_EXAMPLE.replace("\"tolerances\"", "\"tolerance\"");
    assert!(matches!(ProjectConfig::from_json(&typo), Err(ConfigError::Json(_))));
    assert!(matches!(ProjectConfig::preset("lorenz"), Err(ConfigError::UnknownPreset(_))));
}

#[test]
fn every_preset_loads() {
    for name in ProjectConfig::preset_names() {
        let cfg = ProjectConfig::preset(name).unwrap();
        Setup::build(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    assert_eq!(ProjectConfig::preset("harmonic-pair").unwrap(), ProjectConfig::preset("harmonic").unwrap());
}

#[test]
fn isochronous_pair_stops_at_monotonicity() {
    let run = pipeline::certify(&ProjectConfig::preset("harmonic").unwrap(), false);
    assert_eq!(run.report.verdict, "failed:monotonicity");
    assert_eq!(run.exit_code(), 6);
    assert_eq!(run.report.failure.as_ref().unwrap().stage, Stage::Monotonicity);
    assert!(run.witnesses.is_empty());
}

#[test]
fn reports_are_deterministic_and_carry_their_settings() {
    let cfg = ProjectConfig::preset("toy").unwrap();
    let a = pipeline::certify(&cfg, true);
    let b = pipeline::certify(&cfg, true);
    assert_eq!(a.report.verdict, "conditions-hold-no-witness");
    assert_eq!(a.exit_code(), 2);
    let (ja, jb) = (serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    assert_eq!(ja, jb);
    let v: serde_json::Value = serde_json::from_str(&ja).unwrap();
    assert_eq!(v["reproducibility"]["orbit_tolerances"]["rtol"], serde_json::json!(cfg.tolerances.rtol));
    assert!(v["reproducibility"]["witness"]["samples"].is_u64());
    assert_eq!(v["schedules"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["certify", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["certify", "--preset", "lorenz"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["certify", "--preset", "toy", "--multiples", "5"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));

    let cfg = dir.path().join("broken.json");
    std::fs::write(&cfg, DOC_EXAMPLE.replace("x - 1", "x - ")).unwrap();
    let out = run(&["periods", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("subsystem 1"));
}

#[test]
fn environment_output_directory_wins_over_the_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = run(&["periods", "--preset", "toy", "--grid", "8", "--out", flag_dir.path().to_str().unwrap()], env_dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_dir.path().join("report.json").exists());
    assert!(env_dir.path().join("profile_1.csv").exists());
    assert!(!flag_dir.path().join("report.json").exists());
    let report = json(&env_dir.path().join("report.json"));
    assert_eq!(report["profiles"][0]["entries"].as_array().map(Vec::len), Some(10));
}

#[test]
fn short_dwell_fails_at_the_blocks_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["certify", "--preset", "toy", "--multiples", "2,3"], dir.path());
    assert_eq!(out.status.code(), Some(7));
    assert_eq!(json(&dir.path().join("report.json"))["verdict"], "failed:blocks");
}

#[test]
fn simulate_writes_trajectory_and_switches() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--preset", "toy", "--t1", "10", "--t2", "6", "--x0", "0,1.5", "--horizon", "48"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let switches = std::fs::read_to_string(dir.path().join("switches.csv")).unwrap();
    // Switches at 10, 16, 26, 32 and 42; the horizon itself is not a switch.
    assert_eq!(switches.lines().count(), 1 + 5, "{switches}");
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["x0"], serde_json::json!([0.0, 1.5]));
    assert!(report["tolerances"]["rtol"].is_f64());
}
