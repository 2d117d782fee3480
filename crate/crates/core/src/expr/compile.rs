use super::eval::{apply, power};
use super::{DomainError, Expr, Func, Var};

#[derive(Debug, Clone, Copy)]
enum Op {
    Push(f64),
    X,
    Y,
    Neg,
    Add,
    Sub,
    Mul,
    /// Index into the subterm table for error reporting.
    Div(u32),
    Square,
    Pow(f64, u32),
    Call(Func, u32),
}

const STACK: usize = 64;

/// An [`Expr`] flattened to stack code.
///
/// The integrator evaluates vector fields millions of times; walking the
/// boxed tree is several times slower than this loop. Semantics, including
/// domain errors, are identical to [`Expr::eval`].
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    subterms: Vec<Expr>,
    source: Expr,
    deep: bool,
}

impl CompiledExpr {
    pub fn new(e: &Expr) -> Self {
        let mut c = CompiledExpr { ops: Vec::new(), subterms: Vec::new(), source: e.clone(), deep: false };
        let depth = c.emit(e);
        c.deep = depth > STACK;
        c
    }

    pub fn expr(&self) -> &Expr {
        &self.source
    }

    fn note(&mut self, e: &Expr) -> u32 {
        self.subterms.push(e.clone());
        (self.subterms.len() - 1) as u32
    }

    // Returns the stack depth needed by the emitted code.
    fn emit(&mut self, e: &Expr) -> usize {
        match e {
            Expr::Num(v) => {
                self.ops.push(Op::Push(*v));
                1
            }
            Expr::Const(c) => {
                self.ops.push(Op::Push(c.value()));
                1
            }
            Expr::Var(Var::X) => {
                self.ops.push(Op::X);
                1
            }
            Expr::Var(Var::Y) => {
                self.ops.push(Op::Y);
                1
            }
            Expr::Neg(a) => {
                let d = self.emit(a);
                self.ops.push(Op::Neg);
                d
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let da = self.emit(a);
                let db = self.emit(b);
                let op = match e {
                    Expr::Add(..) => Op::Add,
                    Expr::Sub(..) => Op::Sub,
                    Expr::Mul(..) => Op::Mul,
                    _ => Op::Div(self.note(e)),
                };
                self.ops.push(op);
                da.max(db + 1)
            }
            Expr::Pow(a, p) => {
                let d = self.emit(a);
                if *p == 2.0 {
                    self.ops.push(Op::Square);
                } else {
                    let idx = self.note(e);
                    self.ops.push(Op::Pow(*p, idx));
                }
                d
            }
            Expr::Call(f, a) => {
                let d = self.emit(a);
                let idx = self.note(e);
                self.ops.push(Op::Call(*f, idx));
                d
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, DomainError> {
        if self.deep {
            return self.source.eval(x, y);
        }
        let mut stack = [0.0f64; STACK];
        let mut sp = 0usize;
        let fail = |idx: u32| DomainError { subterm: self.subterms[idx as usize].to_string(), x, y };
        for op in &self.ops {
            match *op {
                Op::Push(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Op::X => {
                    stack[sp] = x;
                    sp += 1;
                }
                Op::Y => {
                    stack[sp] = y;
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Add => {
                    sp -= 1;
                    stack[sp - 1] += stack[sp];
                }
                Op::Sub => {
                    sp -= 1;
                    stack[sp - 1] -= stack[sp];
                }
                Op::Mul => {
                    sp -= 1;
                    stack[sp - 1] *= stack[sp];
                }
                Op::Div(idx) => {
                    sp -= 1;
                    if stack[sp] == 0.0 {
                        return Err(fail(idx));
                    }
                    stack[sp - 1] /= stack[sp];
                }
                Op::Square => stack[sp - 1] *= stack[sp - 1],
                Op::Pow(p, idx) => stack[sp - 1] = power(stack[sp - 1], p).ok_or_else(|| fail(idx))?,
                Op::Call(f, idx) => stack[sp - 1] = apply(f, stack[sp - 1]).ok_or_else(|| fail(idx))?,
            }
        }
        let v = stack[0];
        if v.is_finite() {
            Ok(v)
        } else {
            // Overflow somewhere in + - * ; let the tree walker name the subterm.
            self.source.eval(x, y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_tree_evaluation() {
        for src in ["x + x^3", "(1+y)*(x-1)", "-sqrt(x^2 + y^2) / (1 + abs(y))", "exp(-x) * cos(pi*y)", "x - y - 3"] {
            let e = Expr::parse(src).unwrap();
            let c = CompiledExpr::new(&e);
            for &(x, y) in &[(0.3, -0.7), (2.0, 5.0), (-1.5, 0.25)] {
                assert_eq!(c.eval(x, y).unwrap(), e.eval(x, y).unwrap(), "{src} at ({x}, {y})");
            }
        }
    }

    #[test]
    fn reports_the_same_domain_errors() {
        let e = Expr::parse("x + log(y)").unwrap();
        let c = CompiledExpr::new(&e);
        assert_eq!(c.eval(1.0, -1.0).unwrap_err(), e.eval(1.0, -1.0).unwrap_err());
        let big = Expr::parse("x * x * x").unwrap();
        assert!(CompiledExpr::new(&big).eval(1e200, 0.0).is_err());
    }
}
