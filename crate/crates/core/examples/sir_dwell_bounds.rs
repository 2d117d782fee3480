//! Boundary periods of the two SIR subsystems and the dwell scales T₁*, T₂*
//! that fix the certified switching schedules.

use horseshoe::config::ProjectConfig;
use horseshoe::pipeline::{self, Setup};
use horseshoe::switching::recommend_schedule;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ProjectConfig::preset("sir")?;
    let setup = Setup::build(&cfg)?;
    for (k, a) in setup.annuli.iter().enumerate() {
        println!("subsystem {}: inner period {:.10}, outer period {:.10}", k + 1, a.inner.period, a.outer.period);
    }
    let (w, q) = pipeline::geometry(&setup, &cfg)?;
    println!("case {}, quadrilateral periods {:?}", w.case, q.periods);
    let bounds = pipeline::dwell_bounds(&q)?;
    println!("T1* = {:.9}, T2* = {:.9}", bounds.t_star[0], bounds.t_star[1]);
    let rec = recommend_schedule(&bounds);
    for s in rec.schedules {
        println!("schedule T1 = {:.6}, T2 = {:.6}, subsystem {} first", s.dwell[0], s.dwell[1], s.first);
    }
    println!("{}", rec.note);
    Ok(())
}
