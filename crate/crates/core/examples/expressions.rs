//! Parse, print, differentiate and integrate the text expressions used in
//! configuration files.

use horseshoe::expr::{Expr, Var};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = Expr::parse("(x - 1)^2 / 2 + y - log(1 + y)")?;
    println!("H        = {h}");
    println!("dH/dx    = {}", h.differentiate(Var::X));
    println!("dH/dy    = {}", h.differentiate(Var::Y));
    println!("H(0, 1)  = {}", h.eval(0.0, 1.0)?);

    let g = Expr::parse("sin(x) + x^3")?;
    let g2 = g.differentiate(Var::X).differentiate(Var::X);
    println!("g''      = {g2}");
    println!("G(1)     = {:.15}", g.antiderivative_numeric(0.0, 1.0, 1e-13)?);
    println!("exact    = {:.15}", 1.0 - 1f64.cos() + 0.25);

    // Domain errors name the subterm that failed.
    if let Err(e) = h.eval(0.0, -2.0) {
        println!("H(0, -2): {e}");
    }
    // Syntax errors carry a byte offset.
    for bad in ["x + * y", "sin(x", "exp(z)"] {
        println!("{bad:?}: {}", Expr::parse(bad).unwrap_err());
    }
    Ok(())
}
