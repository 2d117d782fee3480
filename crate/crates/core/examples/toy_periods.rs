//! Period profile of the toy subsystem whose orbits are circles of radius r
//! traversed with speed 1/(1 + r), so the period is 2π(1 + r).

use std::f64::consts::PI;
use std::sync::Arc;

use horseshoe::expr::Expr;
use horseshoe::orbits::{Annulus, OrbitOptions, Subsystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = Expr::parse("-y / (1 + sqrt((x - 1)^2 + y^2))")?;
    let fy = Expr::parse("(x - 1) / (1 + sqrt((x - 1)^2 + y^2))")?;
    let sys = Arc::new(Subsystem::general("circles about (1, 0)", &fx, &fy, [1.0, 0.0])?);
    let annulus = Annulus::from_seeds(sys, [0.0, 0.0], [-1.0, 0.0], OrbitOptions::default())?;

    let profile = annulus.period_profile(9)?;
    println!("{:>10} {:>16} {:>16} {:>10}", "c", "period", "2π(1 + r)", "error");
    for e in &profile.entries {
        let r = (e.area / PI).sqrt();
        let exact = 2.0 * PI * (1.0 + r);
        println!("{:>10.6} {:>16.10} {:>16.10} {:>10.1e}", e.c, e.period, exact, (e.period - exact).abs());
    }
    profile.write_csv(std::io::stdout().lock())?;
    Ok(())
}
