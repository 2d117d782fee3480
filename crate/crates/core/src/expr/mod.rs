//! Scalar expressions in the variables `x` and `y`.
//!
//! Vector fields, Hamiltonians and restoring forces are given as text in the
//! configuration file. This module parses them into an [`Expr`] tree,
//! evaluates them, differentiates them symbolically and integrates them
//! numerically in one variable.
//!
//! ```
//! use horseshoe::expr::{Expr, Var};
//!
//! let e = Expr::parse("x + x^3").unwrap();
//! assert_eq!(e.eval(2.0, 0.0).unwrap(), 10.0);
//! let d2 = e.differentiate(Var::X).differentiate(Var::X);
//! assert_eq!(d2.eval(1.0, 0.0).unwrap(), 6.0);
//! ```

mod compile;
mod diff;
mod eval;
mod parse;

use std::fmt;

pub use compile::CompiledExpr;

use crate::quad::{self, QuadError};

/// Independent variable of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

/// Named constants understood by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
        }
    }
}

/// Elementary functions of one argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree.
///
/// Exponents are plain numbers: the parser folds `x^(1/2)` or `x^-2` into
/// a literal, which keeps differentiation closed over the tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// Failure to turn source text into an [`Expr`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message} (expected {})", expected.join(" or "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    /// Byte offset into the source where the problem was detected.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

/// Evaluation hit a point outside the domain of some subterm.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("`{subterm}` is undefined at ({x}, {y})")]
pub struct DomainError {
    pub subterm: String,
    pub x: f64,
    pub y: f64,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parse::parse(source)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }

    /// Whether the variable occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// Numerically integrate the expression in `x` over `[a, b]` with `y`
    /// held fixed, to absolute accuracy `tol`.
    pub fn antiderivative_numeric(&self, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
        self.integrate_x(a, b, 0.0, tol)
    }

    pub fn integrate_x(&self, a: f64, b: f64, y: f64, tol: f64) -> Result<f64, QuadError> {
        let compiled = CompiledExpr::new(self);
        quad::integrate(|t| compiled.eval(t, y).map_err(QuadError::Domain), a, b, tol).map(|r| r.value)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write_number(f, *v),
            Expr::Const(c) => write!(f, "{}", c.name()),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            Expr::Add(a, b) => binary(f, a, " + ", b, 1),
            Expr::Sub(a, b) => binary(f, a, " - ", b, 1),
            Expr::Mul(a, b) => binary(f, a, " * ", b, 2),
            Expr::Div(a, b) => binary(f, a, " / ", b, 2),
            Expr::Pow(a, p) => {
                a.write_at(f, 5)?;
                write!(f, "^")?;
                write_number(f, *p)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

// Left operands may share the operator's precedence; right operands must
// bind tighter, so that the printed text re-parses to the same tree.
fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, prec: u8) -> fmt::Result {
    a.write_at(f, prec)?;
    write!(f, "{op}")?;
    b.write_at(f, prec + 1)
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_sign_negative() && v != 0.0 {
        write!(f, "(-{})", -v)
    } else {
        write!(f, "{}", v.abs())
    }
}

/// Canonical text form; re-parsing it gives back an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}
