use super::{Expr, Func, Var};

// Smart constructors: constant folding and identity elimination only.

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(n) if *n == v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) => num(p + q),
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) => num(p - q),
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) => num(p * q),
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        _ if is_num(&a, -1.0) => neg(b),
        _ if is_num(&b, -1.0) => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(p), Expr::Num(q)) if *q != 0.0 => num(p / q),
        _ if is_num(&b, 1.0) => a,
        _ if is_num(&a, 0.0) && !is_num(&b, 0.0) => num(0.0),
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, p: f64) -> Expr {
    if p == 0.0 {
        return num(1.0);
    }
    if p == 1.0 {
        return a;
    }
    Expr::Pow(Box::new(a), p)
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    /// Symbolic partial derivative.
    ///
    /// The result is tidied only by folding numeric constants and removing
    /// the identities `0*a`, `1*a`, `a+0`, `a^1`; no other rewriting is done.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self {
            Expr::Num(_) | Expr::Const(_) => num(0.0),
            Expr::Var(v) => num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.differentiate(var)),
            Expr::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Expr::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(var), (**b).clone()),
                mul((**a).clone(), b.differentiate(var)),
            ),
            Expr::Div(a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                if is_num(&db, 0.0) {
                    div(da, (**b).clone())
                } else {
                    div(
                        sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                        pow((**b).clone(), 2.0),
                    )
                }
            }
            Expr::Pow(a, p) => {
                let da = a.differentiate(var);
                mul(mul(num(*p), pow((**a).clone(), p - 1.0)), da)
            }
            Expr::Call(f, a) => {
                let da = a.differentiate(var);
                if is_num(&da, 0.0) {
                    return num(0.0);
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Log => return div(da, inner),
                    Func::Sqrt => return div(da, mul(num(2.0), call(Func::Sqrt, inner))),
                    // sign(u); undefined at u = 0 like the kink itself
                    Func::Abs => div(inner.clone(), call(Func::Abs, inner)),
                };
                mul(outer, da)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Expr {
        Expr::parse(s).unwrap().differentiate(Var::X)
    }

    #[test]
    fn power_rule_with_identity_elimination() {
        assert_eq!(d("x + x^3").to_string(), "1 + 3 * x^2");
        assert_eq!(d("x^2").to_string(), "2 * x");
        assert_eq!(d("y^2"), Expr::Num(0.0));
    }

    #[test]
    fn chain_rule_values() {
        assert_eq!(d("sin(x)").eval(0.0, 0.0).unwrap(), 1.0);
        let v = d("log(1 + x^2)").eval(1.0, 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = d("sqrt(x) * exp(x)").eval(1.0, 0.0).unwrap();
        assert!((v - 1.5 * std::f64::consts::E).abs() < 1e-14);
        let v = d("x / (1 + x)").eval(1.0, 0.0).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn second_derivative_agrees_with_central_difference() {
        let e = Expr::parse("x + x^3").unwrap();
        let d1 = e.differentiate(Var::X);
        let d2 = d1.differentiate(Var::X);
        assert_eq!(d2.eval(1.0, 0.0).unwrap(), 6.0);
        let h = 1e-5;
        let fd = (d1.eval(1.0 + h, 0.0).unwrap() - d1.eval(1.0 - h, 0.0).unwrap()) / (2.0 * h);
        assert!((fd - 6.0).abs() < 1e-6);
    }

    #[test]
    fn partials_in_y() {
        let e = Expr::parse("(x + 1)^2 / 2 + y - log(1 + y)").unwrap();
        let hy = e.differentiate(Var::Y);
        assert!((hy.eval(0.3, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let hx = e.differentiate(Var::X);
        assert!((hx.eval(0.5, 7.0).unwrap() - 1.5).abs() < 1e-15);
    }
}
