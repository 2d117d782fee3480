//! Command-line front end. Exit codes: 0 certified and witnessed, 2
//! conditions hold but no witness was run, 3 orbits, 4 condition (i), 5
//! quadrilateral, 6 monotonicity, 7 blocks, 8 witness, 1 usage or config.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use horseshoe::config::ProjectConfig;
use horseshoe::ode::Tolerances;
use horseshoe::pipeline::{self, Setup};
use horseshoe::report::StageFailure;
use horseshoe::switching::SwitchingSchedule;
use horseshoe::Point;

#[derive(Parser)]
#[command(name = "horseshoe", version, about = "Certify topological horseshoes in planar periodic switching systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Period profiles of both annuli (profile_<i>.csv, report.json).
    Periods(Common),
    /// Full pipeline through the crossing witness (report.json, quad.json, witness.json, ...).
    Certify(Common),
    /// Switched trajectory (orbit.csv, switches.csv, report.json).
    Simulate(Common),
    /// Pipeline with the full per-connection witness output.
    Witness(Common),
}

#[derive(Args)]
struct Common {
    /// System definition (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in system: toy, sir, harmonic (harmonic-pair), pendulum-duffing.
    #[arg(long)]
    preset: Option<String>,
    /// Interior Chebyshev nodes for period profiles and numeric certificates.
    #[arg(long)]
    grid: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; HORSESHOE_OUT takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Use rtol = 1e-12, atol = 1e-14 (explicit --rtol/--atol still win).
    #[arg(long)]
    precise: bool,
    /// Dwell time of subsystem 1.
    #[arg(long)]
    t1: Option<f64>,
    /// Dwell time of subsystem 2.
    #[arg(long)]
    t2: Option<f64>,
    /// Dwell times as multiples of T1* and T2*, e.g. `5,3`.
    #[arg(long, value_delimiter = ',')]
    multiples: Option<Vec<f64>>,
    /// Subsystem that runs first in each switching period.
    #[arg(long)]
    first: Option<usize>,
    /// Initial point for simulation, e.g. `0,1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Simulation horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Stop after block construction.
    #[arg(long)]
    skip_witness: bool,
    /// Witness samples per connection.
    #[arg(long)]
    samples: Option<usize>,
    /// Witness connections per block.
    #[arg(long)]
    connections: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<StageFailure> for Failure {
    fn from(f: StageFailure) -> Self {
        Failure { code: f.stage.exit_code() as u8, message: f.to_string() }
    }
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: message.to_string() }
}

impl Common {
    fn config(&self) -> Result<ProjectConfig, Failure> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ProjectConfig::load(path).map_err(usage)?,
            (None, Some(name)) => ProjectConfig::preset(name).map_err(usage)?,
            (None, None) => return Err(usage("one of --config or --preset is required")),
        };
        if self.precise {
            let p = Tolerances::precise();
            cfg.tolerances.rtol = p.rtol;
            cfg.tolerances.atol = p.atol;
        }
        if let Some(r) = self.rtol {
            cfg.tolerances.rtol = r;
        }
        if let Some(a) = self.atol {
            cfg.tolerances.atol = a;
        }
        if !(cfg.tolerances.rtol > 0.0 && cfg.tolerances.atol > 0.0) {
            return Err(usage("tolerances must be positive"));
        }
        if let Some(n) = self.grid {
            cfg.monotone.n_grid = n;
        }
        let pair = |name: &str, v: &Option<Vec<f64>>| -> Result<Option<[f64; 2]>, Failure> {
            match v.as_deref() {
                None => Ok(None),
                Some([a, b]) => Ok(Some([*a, *b])),
                Some(_) => Err(usage(format!("--{name} takes two comma-separated numbers"))),
            }
        };
        let multiples = pair("multiples", &self.multiples)?;
        let x0 = pair("x0", &self.x0)?;
        if self.t1.is_some() || self.t2.is_some() || multiples.is_some() {
            cfg.schedule.t1 = self.t1;
            cfg.schedule.t2 = self.t2;
            cfg.schedule.multiples = multiples;
        }
        if let Some(f) = self.first {
            cfg.schedule.first = Some(f);
        }
        if let Some(s) = self.samples {
            cfg.witness.samples = s;
        }
        if let Some(c) = self.connections {
            cfg.witness.connections = c;
        }
        if x0.is_some() {
            cfg.simulate.x0 = x0;
        }
        if let Some(h) = self.horizon {
            cfg.simulate.horizon = Some(h);
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ProjectConfig) -> Result<PathBuf, Failure> {
        let dir = std::env::var_os("HORSESHOE_OUT")
            .map(PathBuf::from)
            .or_else(|| self.out.clone())
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from("horseshoe-out").join(if cfg.name.is_empty() { "run" } else { &cfg.name }));
        fs::create_dir_all(&dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(create(dir, name)?, value).map_err(|e| usage(format!("{name}: {e}")))
}

fn csv_err(name: &str) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| usage(format!("{name}: {e}"))
}

fn periods(args: &Common) -> Result<(), Failure> {
    let cfg = args.config()?;
    let dir = args.out_dir(&cfg)?;
    let report = pipeline::periods(&cfg, cfg.monotone.n_grid)?;
    for (k, p) in report.profiles.iter().enumerate() {
        let name = format!("profile_{}.csv", k + 1);
        p.write_csv(create(&dir, &name)?).map_err(csv_err(&name))?;
        let (lo, hi) = (p.inner(), p.outer());
        println!("subsystem {}: inner period {:.10}, outer period {:.10}", k + 1, lo.period, hi.period);
    }
    write_json(&dir, "report.json", &report)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn certify(args: &Common, full_witness: bool) -> Result<(), Failure> {
    let cfg = args.config()?;
    let dir = args.out_dir(&cfg)?;
    let run = pipeline::certify(&cfg, args.skip_witness && !full_witness);
    let r = &run.report;
    write_json(&dir, "report.json", r)?;
    if let Some(q) = &run.quadrilateral {
        write_json(&dir, "quad.json", &q.descriptor())?;
        q.write_arcs_csv(create(&dir, "quad_arcs.csv")?).map_err(csv_err("quad_arcs.csv"))?;
    }
    for (k, m) in r.monotonicity.iter().enumerate() {
        let name = format!("monotone_{}.csv", k + 1);
        m.write_grid_csv(create(&dir, &name)?).map_err(csv_err(&name))?;
    }
    for (k, blocks) in run.blocks.iter().enumerate() {
        for b in blocks {
            let name = format!("blocks_{}_{}.csv", k + 1, b.index);
            b.write_edges_csv(create(&dir, &name)?, 128).map_err(csv_err(&name))?;
        }
    }
    if !run.witnesses.is_empty() {
        write_json(&dir, "witness.json", &run.witnesses)?;
        for (k, w) in run.witnesses.iter().enumerate() {
            let name = format!("witness_images_{}.csv", k + 1);
            w.write_images_csv(create(&dir, &name)?).map_err(csv_err(&name))?;
        }
    }

    if let Some(case) = r.case {
        println!("condition (i): case {case}");
    }
    for m in &r.monotonicity {
        println!("{}: period function {} ({}, {})", m.subsystem, m.verdict, serde_json::to_value(m.method).unwrap_or_default(), m.label);
    }
    if let Some(t) = r.t_star {
        println!("T1* = {:.12}, T2* = {:.12}", t[0], t[1]);
    }
    if let Some(i) = &r.improvement {
        println!("{}", i.note);
    }
    for s in &r.schedules {
        let w = &s.winding[s.schedule.first - 1];
        print!("schedule T1 = {:.9}, T2 = {:.9}, subsystem {} first: N = {}, n = {}", s.schedule.dwell[0], s.schedule.dwell[1], s.schedule.first, w.big_n, w.n);
        match &s.witness {
            Some(ws) => println!(", witness {}", if ws.passed { "passed" } else { "failed" }),
            None => println!(),
        }
        if full_witness {
            for p in s.witness.iter().flat_map(|w| &w.pairs) {
                println!("  block {} -> block {}: {}/{} connections cross", p.source, p.target, p.connections_passed, p.connections);
            }
        }
    }
    if let Some(h) = r.entropy_bound {
        println!("entropy bound h(P) >= {h:.12}");
    }
    println!("verdict: {}", r.verdict);
    println!("wrote {}", dir.display());
    match &r.failure {
        Some(f) => Err(f.clone().into()),
        None if r.exit_code() == 0 => Ok(()),
        None => Err(Failure { code: 2, message: "conditions hold; witness not run".into() }),
    }
}

fn simulate(args: &Common) -> Result<(), Failure> {
    let cfg = args.config()?;
    let dir = args.out_dir(&cfg)?;
    let setup = Setup::build(&cfg)?;
    let (schedule, bounds) = pipeline::simulation_schedule(&cfg, &setup)?;
    let x0: Point = cfg.simulate.x0.unwrap_or_else(|| setup.annuli[0].inner.seed);
    let horizon = match (cfg.simulate.horizon, cfg.simulate.horizon_t1_star) {
        (Some(h), _) => h,
        (None, Some(m)) => {
            let bounds = match bounds {
                Some(b) => b,
                None => pipeline::dwell_bounds(&pipeline::geometry(&setup, &cfg)?.1)?,
            };
            m * bounds.t_star[0]
        }
        (None, None) => 10.0 * schedule.period(),
    };
    let traj = pipeline::simulate(&cfg, &setup, &schedule, x0, horizon)?;
    traj.write_csv(create(&dir, "orbit.csv")?).map_err(csv_err("orbit.csv"))?;
    traj.write_switches_csv(create(&dir, "switches.csv")?).map_err(csv_err("switches.csv"))?;

    #[derive(Serialize)]
    struct Summary {
        name: String,
        schedule: SwitchingSchedule,
        x0: Point,
        horizon: f64,
        samples: usize,
        switches: usize,
        final_point: Option<Point>,
        tolerances: Tolerances,
    }
    let summary = Summary {
        name: cfg.name.clone(),
        schedule,
        x0,
        horizon,
        samples: traj.samples.len(),
        switches: traj.switches.len(),
        final_point: traj.final_point(),
        tolerances: cfg.tolerances,
    };
    write_json(&dir, "report.json", &summary)?;
    println!(
        "simulated {} samples, {} switches over [0, {horizon}]; final point {:?}",
        summary.samples, summary.switches, summary.final_point
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let args = match &cli.command {
        Command::Periods(a) | Command::Certify(a) | Command::Simulate(a) | Command::Witness(a) => a,
    };
    if let Some(j) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Periods(a) => periods(a),
        Command::Certify(a) => certify(a, false),
        Command::Simulate(a) => simulate(a),
        Command::Witness(a) => certify(a, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if f.code == 1 {
                eprintln!("error: {}", f.message);
            } else {
                eprintln!("{}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

