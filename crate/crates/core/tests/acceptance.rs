//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use horseshoe::config::ProjectConfig;
use horseshoe::monotone::{area_period_check, certify, certify_numeric, chow_wang_h, MonotoneOptions, Verdict};
use horseshoe::orbits::{measure_period, Annulus, OrbitOptions, Subsystem};
use horseshoe::pipeline::{self, Setup};
use horseshoe::switching::{
    build_blocks, dwell_star, evaluate_witness, recommend_schedule, winding_counts, DwellBounds, SwitchingSchedule,
    WitnessOptions,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<f64, String> {
    let s = start.elapsed().as_secs_f64();
    check(start.elapsed() < limit, || format!("took {s:.1} s, limit {} s", limit.as_secs()))?;
    Ok(s)
}

fn toy_periods() -> Result<(f64, f64), String> {
    let cfg = ProjectConfig::preset("toy").map_err(|e| e.to_string())?;
    let s1 = cfg.build_subsystem(1).map_err(|e| e.to_string())?;
    let opts = OrbitOptions::default();
    let p = |x: f64| measure_period(&s1, [x, 0.0], &opts).map(|o| o.period).map_err(|e| e.to_string());
    Ok((p(0.0)?, p(-1.0)?))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (a, b) = toy_periods()?;
    check((a - 4.0 * PI).abs() <= 1e-6, || format!("T1(0,0) = {a}, expected 4π"))?;
    check((b - 6.0 * PI).abs() <= 1e-6, || format!("T1(-1,0) = {b}, expected 6π"))?;
    let s = within(Duration::from_secs(5), start)?;
    Ok(format!("T1(0,0) - 4π = {:.1e}, T1(-1,0) - 6π = {:.1e}, {s:.2} s", a - 4.0 * PI, b - 6.0 * PI))
}

fn criterion_2() -> Outcome {
    let (a, b) = toy_periods()?;
    let t = dwell_star(a, b).map_err(|e| e.to_string())?;
    check((t - 12.0 * PI).abs() <= 1e-8, || format!("T* = {t}, expected 12π"))?;
    Ok(format!("T* - 12π = {:.1e}", t - 12.0 * PI))
}

fn sir_setup() -> Result<(ProjectConfig, Setup), String> {
    let cfg = ProjectConfig::preset("sir").map_err(|e| e.to_string())?;
    let setup = Setup::build(&cfg).map_err(|e| e.to_string())?;
    Ok((cfg, setup))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (_, setup) = sir_setup()?;
    let [a1, a2] = &setup.annuli;
    let expect = [6.7552385419, 7.0239110513];
    for (k, a) in [a1, a2].iter().enumerate() {
        for (got, want) in [a.inner.period, a.outer.period].into_iter().zip(expect) {
            check((got - want).abs() <= 1e-8, || format!("subsystem {}: period {got}, expected {want}", k + 1))?;
        }
    }
    let t = dwell_star(a1.inner.period, a1.outer.period).map_err(|e| e.to_string())?;
    check((t - 176.602342958647).abs() <= 1e-6, || format!("T* = {t}"))?;
    let s = within(Duration::from_secs(30), start)?;
    Ok(format!("periods {:.10} / {:.10}, T* = {t:.9}, {s:.1} s", a1.inner.period, a1.outer.period))
}

fn criterion_4() -> Outcome {
    let (_, setup) = sir_setup()?;
    let check4 = area_period_check(&setup.annuli[0], 9, 1e-4).map_err(|e| e.to_string())?;
    check(check4.rows.len() == 9 && check4.passed, || format!("max relative error {:.2e}", check4.max_rel_error))?;
    Ok(format!("A'(h) vs T(h) on 9 interior energies: max relative error {:.2e}", check4.max_rel_error))
}

fn newton(g: &str) -> Result<std::sync::Arc<Subsystem>, String> {
    let e = horseshoe::expr::Expr::parse(g).map_err(|e| e.to_string())?;
    Subsystem::newtonian(g, &e, 0.0).map(std::sync::Arc::new).map_err(|e| e.to_string())
}

/// Periods at 20 amplitudes, strictly ordered or all equal.
fn brute_force(s: &Subsystem, a: f64, b: f64) -> Result<Verdict, String> {
    let mut p = Vec::with_capacity(20);
    for k in 0..20 {
        let r = a + (b - a) * k as f64 / 19.0;
        p.push(measure_period(s, [r, 0.0], &OrbitOptions::default()).map_err(|e| e.to_string())?.period);
    }
    Ok(if p.windows(2).all(|w| w[1] > w[0] + 1e-9) {
        Verdict::Increasing
    } else if p.windows(2).all(|w| w[1] < w[0] - 1e-9) {
        Verdict::Decreasing
    } else if p.windows(2).all(|w| (w[1] - w[0]).abs() < 1e-8) {
        Verdict::Isochronous
    } else {
        Verdict::Inconclusive
    })
}

fn criterion_5() -> Outcome {
    let harmonic = newton("x")?;
    for k in 0..=2000 {
        let x = -10.0 + 0.01 * k as f64;
        let h = chow_wang_h(&harmonic, x).map_err(|e| e.to_string())?;
        check(h.abs() <= 1e-12, || format!("harmonic H({x}) = {h}"))?;
    }
    let pendulum = newton("sin(x)")?;
    for k in 1..1000 {
        let x = -PI + k as f64 * PI / 500.0;
        if x.abs() < 1e-12 {
            continue;
        }
        let h = chow_wang_h(&pendulum, x).map_err(|e| e.to_string())?;
        check(h > 0.0, || format!("pendulum H({x}) = {h}"))?;
    }
    let cw = horseshoe::monotone::certify_chow_wang(&pendulum, (-PI, PI), &MonotoneOptions::default()).map_err(|e| e.to_string())?;
    check(cw.verdict == Verdict::Increasing, || format!("pendulum verdict {}", cw.verdict))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = MonotoneOptions::default();
    let mut cases = 0;
    for (g, top) in [("sin(x)", 2.8), ("x + x^3", 2.0), ("x", 3.0)] {
        let s = newton(g)?;
        for _ in 0..4 {
            let a: f64 = rng.gen_range(0.1..top * 0.6);
            let b: f64 = rng.gen_range(a + 0.2..top);
            let truth = brute_force(&s, a, b)?;
            let ann = Annulus::from_seeds(s.clone(), [a, 0.0], [b, 0.0], OrbitOptions::default()).map_err(|e| e.to_string())?;
            let num = certify_numeric(&ann, 9, &opts).map_err(|e| e.to_string())?;
            let cw = certify(&ann, &opts).map_err(|e| e.to_string())?;
            check(num.verdict == truth && cw.verdict == truth, || {
                format!("{g} on [{a:.3}, {b:.3}]: brute force {truth}, numeric {}, chow-wang {}", num.verdict, cw.verdict)
            })?;
            cases += 1;
        }
    }
    Ok(format!("harmonic |H| <= 1e-12, pendulum H > 0 and increasing, {cases} random annuli agree with the brute-force oracle"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let cfg = ProjectConfig::preset("toy").map_err(|e| e.to_string())?;
    let setup = Setup::build(&cfg).map_err(|e| e.to_string())?;
    let (_, q) = pipeline::geometry(&setup, &cfg).map_err(|e| e.to_string())?;
    let bounds = DwellBounds::from_quadrilateral(&q).map_err(|e| e.to_string())?;
    let schedule = recommend_schedule(&bounds).schedules[0];
    check((schedule.dwell[0] - 60.0 * PI).abs() < 1e-5 && (schedule.dwell[1] - 36.0 * PI).abs() < 1e-5, || {
        format!("schedule {:?}", schedule.dwell)
    })?;
    let blocks = build_blocks(&q, &schedule).map_err(|e| e.to_string())?;
    let sys = setup.switched(&cfg);
    let mut lines = Vec::new();
    for samples in [512, 2048] {
        let opts = WitnessOptions { connections: 8, samples, ..WitnessOptions::default() };
        let w = evaluate_witness(&sys, &schedule, &q, &blocks, &opts).map_err(|e| e.to_string())?;
        check(w.pairs.len() == 4 && w.passed, || {
            let f = w.first_failure().map(|(p, c)| format!("pair ({}, {}) connection {}: {}", p.source, p.target, c.index, c.diagnostic));
            format!("{samples} samples: {}", f.unwrap_or_default())
        })?;
        let h = w.entropy_bound.unwrap_or(0.0);
        check((h - 2f64.ln()).abs() < 1e-15, || format!("entropy bound {h}"))?;
        lines.push(format!("{samples} samples pass"));
    }
    let s = within(Duration::from_secs(180), start)?;
    Ok(format!("4 pairs x 8 connections: {}; h(P) >= log 2; {s:.1} s", lines.join(", ")))
}

fn criterion_7() -> Outcome {
    let cfg = ProjectConfig::preset("toy").map_err(|e| e.to_string())?;
    let setup = Setup::build(&cfg).map_err(|e| e.to_string())?;
    let (_, q) = pipeline::geometry(&setup, &cfg).map_err(|e| e.to_string())?;
    let bounds = DwellBounds::from_quadrilateral(&q).map_err(|e| e.to_string())?;
    let s = recommend_schedule(&bounds).schedules[0];
    let w = winding_counts(&s, &bounds, 1);
    check((w.big_n, w.n) == (15, 10), || format!("(N1, n1) = ({}, {})", w.big_n, w.n))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_gap = i64::MAX;
    for _ in 0..100 {
        let t1 = bounds.t_star[0] * rng.gen_range(5.0..60.0);
        let t2 = bounds.t_star[1] * rng.gen_range(0.0..60.0);
        let sched = SwitchingSchedule::new(t1, t2, 1).map_err(|e| e.to_string())?;
        let w = winding_counts(&sched, &bounds, 1);
        check(w.difference() >= 5, || format!("T1 = {t1}: N1 - n1 = {}", w.difference()))?;
        min_gap = min_gap.min(w.difference());
    }
    Ok(format!("(N1, n1) = (15, 10); N1 - n1 >= 5 on 100 random schedules (smallest gap {min_gap})"))
}

fn run_cli(args: &[&str]) -> Result<(i32, String), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_horseshoe"))
        .args(args)
        .env("HORSESHOE_OUT", dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap_or_default();
    Ok((out.status.code().unwrap_or(-1), report))
}

fn criterion_8() -> Outcome {
    let (code, report) = run_cli(&["certify", "--preset", "harmonic-pair"])?;
    let r: serde_json::Value = serde_json::from_str(&report).map_err(|e| format!("harmonic report: {e}"))?;
    let verdict = r["monotonicity"][0]["verdict"].as_str().unwrap_or_default().to_string();
    check(code == 6 && r["verdict"] == "failed:monotonicity", || format!("harmonic-pair: exit {code}, verdict {}", r["verdict"]))?;
    check(verdict == "isochronous" || verdict == "inconclusive", || format!("harmonic-pair monotonicity verdict {verdict}"))?;

    let (code2, report2) = run_cli(&["certify", "--preset", "toy", "--multiples", "2,3"])?;
    let r2: serde_json::Value = serde_json::from_str(&report2).map_err(|e| format!("sub-threshold report: {e}"))?;
    let v2 = r2["verdict"].as_str().unwrap_or_default().to_string();
    check((code2 == 7 && v2 == "failed:blocks") || (code2 == 8 && v2 == "failed:witness"), || format!("T1 = 2T1*: exit {code2}, verdict {v2}"))?;
    Ok(format!("harmonic-pair: exit 6, {verdict}; toy with T1 = 2T1*: exit {code2}, {v2}"))
}

fn criterion_9() -> Outcome {
    let cfg = ProjectConfig::preset("sir").map_err(|e| e.to_string())?;
    let run = pipeline::certify(&cfg, false);
    let r = &run.report;
    check(r.verdict == "certified-witnessed", || format!("verdict {}: {:?}", r.verdict, r.failure))?;
    let t = r.t_star.ok_or("no T*")?;
    let imp = r.improvement.as_ref().ok_or("no improvement entry")?;
    let total = imp.certified_totals[0];
    let mean = 0.5 * (t[0] + t[1]);
    check((total - 8.0 * mean).abs() <= 1e-6 * mean, || format!("certified total {total} vs 8T* = {}", 8.0 * mean))?;
    check((imp.symmetric_total - 12.0 * mean).abs() <= 1e-6 * mean && total < imp.symmetric_total, || {
        format!("symmetric total {}", imp.symmetric_total)
    })?;
    let json = serde_json::to_value(r).map_err(|e| e.to_string())?;
    check(json["improvement"]["certified_totals"][0].is_number() && json["improvement"]["symmetric_total"].is_number(), || {
        "report does not state both totals".into()
    })?;
    Ok(format!("(5T1*, 3T2*) total {total:.6} = 8T* < 12T* = {:.6}; witness passed", imp.symmetric_total))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("toy periods 4π and 6π", criterion_1),
        ("toy T* = 12π", criterion_2),
        ("SIR periods and T*", criterion_3),
        ("area derivative equals period (SIR)", criterion_4),
        ("Chow–Wang regression", criterion_5),
        ("toy crossing witness", criterion_6),
        ("winding arithmetic", criterion_7),
        ("negative controls", criterion_8),
        ("asymmetric bound improvement (SIR)", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|a| a == &n.to_string()) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
