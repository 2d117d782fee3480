use super::{DomainError, Expr, Func, Var};

/// Apply a unary function, returning `None` outside its domain.
pub(super) fn apply(func: Func, a: f64) -> Option<f64> {
    let v = match func {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Exp => a.exp(),
        Func::Log if a > 0.0 => a.ln(),
        Func::Sqrt if a >= 0.0 => a.sqrt(),
        Func::Abs => a.abs(),
        Func::Log | Func::Sqrt => return None,
    };
    v.is_finite().then_some(v)
}

pub(super) fn power(a: f64, p: f64) -> Option<f64> {
    if a < 0.0 && p.fract() != 0.0 {
        return None;
    }
    if a == 0.0 && p < 0.0 {
        return None;
    }
    let v = if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 { a.powi(p as i32) } else { a.powf(p) };
    v.is_finite().then_some(v)
}

impl Expr {
    /// Evaluate at `(x, y)`.
    ///
    /// Every subterm is checked: a division by zero, a logarithm of a
    /// non-positive number, a square root of a negative number or an
    /// overflow is reported with the offending subterm instead of
    /// propagating NaN or infinity.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, DomainError> {
        let fail = |e: &Expr| DomainError { subterm: e.to_string(), x, y };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Const(c) => c.value(),
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Neg(a) => -a.eval(x, y)?,
            Expr::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            Expr::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            Expr::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            Expr::Div(a, b) => {
                let num = a.eval(x, y)?;
                let den = b.eval(x, y)?;
                if den == 0.0 {
                    return Err(fail(self));
                }
                num / den
            }
            Expr::Pow(a, p) => power(a.eval(x, y)?, *p).ok_or_else(|| fail(self))?,
            Expr::Call(f, a) => apply(*f, a.eval(x, y)?).ok_or_else(|| fail(self))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(self))
        }
    }
}
