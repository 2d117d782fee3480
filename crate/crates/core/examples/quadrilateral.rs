//! Condition (i) and the quadrilateral for the toy pair of circle systems.
//! The arcs are printed as CSV for plotting.

use std::sync::Arc;

use horseshoe::expr::Expr;
use horseshoe::geometry::{build_quadrilateral, check_condition_i};
use horseshoe::orbits::{Annulus, OrbitOptions, Subsystem};

fn circles(cx: f64, ccw: bool) -> Result<Arc<Subsystem>, Box<dyn std::error::Error>> {
    let r = format!("(1 + sqrt((x - ({cx}))^2 + y^2))");
    let s = if ccw { "" } else { "-" };
    let fx = Expr::parse(&format!("{s}(-y) / {r}"))?;
    let fy = Expr::parse(&format!("{s}(x - ({cx})) / {r}"))?;
    Ok(Arc::new(Subsystem::general("circles", &fx, &fy, [cx, 0.0])?))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a1 = Annulus::from_seeds(circles(1.0, true)?, [0.0, 0.0], [-1.0, 0.0], OrbitOptions::default())?;
    let a2 = Annulus::from_seeds(circles(-1.0, false)?, [0.0, 0.0], [1.0, 0.0], OrbitOptions::default())?;
    let w = check_condition_i(&a1, &a2)?;
    println!("case {}: point {:?} of annulus {} lies in annulus {}", w.case, w.inside_point, w.i, w.j);
    let q = build_quadrilateral(&a1, &a2, &w)?;
    for (name, v) in ["A", "B", "C", "D"].iter().zip(q.vertices) {
        println!("{name} = ({:+.9}, {:+.9})", v[0], v[1]);
    }
    for arc in &q.arcs {
        println!("{}: subsystem {}, {:?} orbit, {} points", arc.label, arc.subsystem, arc.role, arc.points.len());
    }
    println!("eps {:?}, area {:.9}", q.eps, q.area);
    q.write_arcs_csv(std::io::stdout().lock())?;
    Ok(())
}
