//! A switched SIR trajectory under the certified schedule (5T₁*, 3T₂*),
//! with the switching instants and a comparison against the Poincaré map.

use horseshoe::config::ProjectConfig;
use horseshoe::pipeline::{self, Setup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ProjectConfig::preset("sir")?;
    let setup = Setup::build(&cfg)?;
    let (schedule, _) = pipeline::simulation_schedule(&cfg, &setup)?;
    let x0 = [0.0, 1.5];
    let traj = setup.switched(&cfg).simulate_periods(&schedule, x0, 2)?;
    println!("schedule {:?}, {} samples", schedule.dwell, traj.samples.len());
    for s in &traj.switches {
        println!("t = {:>12.6}: {} -> {} at ({:+.9}, {:+.9})", s.t, s.from, s.to, s.x, s.y);
    }
    let sys = setup.switched(&cfg);
    let p2 = sys.poincare_map(&schedule, sys.poincare_map(&schedule, x0)?)?;
    let end = traj.final_point().expect("non-empty trajectory");
    println!("P²(x0) = {p2:?}\nend    = {end:?}");
    // The half plane y > -1 of positive populations is invariant.
    let min_y = traj.samples.iter().map(|s| s.y).fold(f64::INFINITY, f64::min);
    println!("min y = {min_y:.6}");
    Ok(())
}
