//! Crossing witness for the toy switched system with both recommended
//! schedules, followed by a schedule too short to certify.

use std::time::Instant;

use horseshoe::config::ProjectConfig;
use horseshoe::pipeline::{self, Setup};
use horseshoe::switching::{build_blocks, evaluate_witness, recommend_schedule, SwitchingSchedule, WitnessOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ProjectConfig::preset("toy")?;
    let setup = Setup::build(&cfg)?;
    let (_, q) = pipeline::geometry(&setup, &cfg)?;
    let bounds = pipeline::dwell_bounds(&q)?;
    let sys = setup.switched(&cfg);
    let opts = WitnessOptions::default();

    for schedule in recommend_schedule(&bounds).schedules {
        let start = Instant::now();
        let blocks = build_blocks(&q, &schedule)?;
        let w = evaluate_witness(&sys, &schedule, &q, &blocks, &opts)?;
        println!("schedule {:?}, subsystem {} first ({:.1} s)", schedule.dwell, schedule.first, start.elapsed().as_secs_f64());
        for p in &w.pairs {
            let ok = p.connections.iter().filter(|c| c.passed).count();
            println!("  D{} -> D{}: {ok}/{} connections cross", p.source, p.target, p.connections.len());
        }
        println!("  entropy bound {:?}", w.entropy_bound);
    }

    // Twice T* in each dwell leaves too few windings for two disjoint bands.
    let short = SwitchingSchedule::new(2.0 * bounds.t_star[0], 2.0 * bounds.t_star[1], 1)?;
    match build_blocks(&q, &short) {
        Ok(_) => println!("short schedule unexpectedly gave blocks"),
        Err(e) => println!("short schedule: {e}"),
    }
    Ok(())
}
