//! Crossing witness for the switched SIR model with the asymmetric
//! schedule `(5T₁*, 3T₂*)`.

use std::sync::Arc;
use std::time::Instant;

use horseshoe::expr::Expr;
use horseshoe::geometry::{build_quadrilateral, check_condition_i};
use horseshoe::ode::Tolerances;
use horseshoe::orbits::{Annulus, OrbitOptions, Subsystem};
use horseshoe::switching::{build_blocks, evaluate_witness, recommend_schedule, DwellBounds, SwitchedSystem, WitnessOptions};

fn sir(alpha: f64) -> Arc<Subsystem> {
    let h = Expr::parse(&format!("(x + {alpha})^2 / 2 + y - log(1 + y)")).unwrap();
    let m = Expr::parse("-(1 + y)").unwrap();
    Arc::new(Subsystem::hamiltonian(&format!("sir(alpha={alpha})"), &h, Some(&m), [-alpha, 0.0]).unwrap())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (s1, s2) = (sir(-1.0), sir(1.0));
    let a1 = Annulus::from_seeds(s1.clone(), [-1.0 / 3.0, 0.0], [-2.0 / 3.0, 0.0], OrbitOptions::default())?;
    let a2 = Annulus::from_seeds(s2.clone(), [1.0 / 3.0, 0.0], [2.0 / 3.0, 0.0], OrbitOptions::default())?;
    let w = check_condition_i(&a1, &a2)?;
    let q = build_quadrilateral(&a1, &a2, &w)?;
    println!("case {}, eps {:?}, periods {:?}", w.case, q.eps, q.periods);
    let bounds = DwellBounds::from_quadrilateral(&q)?;
    let schedule = recommend_schedule(&bounds).schedules[0];
    println!("T* = {:?}, schedule {:?}", bounds.t_star, schedule.dwell);
    let blocks = build_blocks(&q, &schedule)?;
    println!("bands {:?} and {:?}", blocks[0].band, blocks[1].band);
    let start = Instant::now();
    let sys = SwitchedSystem::new(s1, s2, Tolerances::default());
    let witness = evaluate_witness(&sys, &schedule, &q, &blocks, &WitnessOptions::default())?;
    for p in &witness.pairs {
        println!("pair {} -> {}: {}", p.source, p.target, if p.passed { "crosses" } else { "fails" });
    }
    if let Some((p, c)) = witness.first_failure() {
        println!("first failure: pair ({}, {}) connection {}: {}", p.source, p.target, c.index, c.diagnostic);
    }
    println!("entropy bound {:?} ({:.1} s)", witness.entropy_bound, start.elapsed().as_secs_f64());
    Ok(())
}
