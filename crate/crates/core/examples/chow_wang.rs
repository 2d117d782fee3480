//! Monotonicity of the period function for Newtonian systems x'' + g(x) = 0.
//!
//! The pendulum and the hard Duffing oscillator are decided by the
//! Chow–Wang sign criterion; the linear oscillator is isochronous.

use std::sync::Arc;

use horseshoe::expr::Expr;
use horseshoe::monotone::{certify, chow_wang_h, MonotoneOptions};
use horseshoe::orbits::{Annulus, OrbitOptions, Subsystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [("pendulum", "sin(x)"), ("soft Duffing", "x - x^3 / 4"), ("hard Duffing", "x + x^3"), ("linear", "x")];
    for (name, g) in cases {
        let sys = Arc::new(Subsystem::newtonian(name, &Expr::parse(g)?, 0.0)?);
        print!("{name:>13}: H(0.5) = {:+.3e}", chow_wang_h(&sys, 0.5)?);
        let annulus = Annulus::from_seeds(sys, [0.2, 0.0], [1.2, 0.0], OrbitOptions::default())?;
        let cert = certify(&annulus, &MonotoneOptions::default())?;
        println!(", period function {} ({:?}, margin {:.3e})", cert.verdict, cert.method, cert.margin);
    }
    Ok(())
}
