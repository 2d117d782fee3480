use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::OrbitError;
use crate::expr::{CompiledExpr, DomainError, Expr, Var};
use crate::ode::FieldFn;
use crate::Point;

/// How a subsystem was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsystemKind {
    General,
    Hamiltonian,
    Newtonian,
}

impl fmt::Display for SubsystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubsystemKind::General => "general",
            SubsystemKind::Hamiltonian => "hamiltonian",
            SubsystemKind::Newtonian => "newtonian",
        })
    }
}

/// Restoring force data of `x'' + g(x) = 0`.
#[derive(Debug, Clone)]
pub struct Newtonian {
    pub g: Expr,
    pub dg: Expr,
    pub d2g: Expr,
    cg: CompiledExpr,
    cdg: CompiledExpr,
    cd2g: CompiledExpr,
}

impl Newtonian {
    fn new(g: Expr) -> Self {
        let dg = g.differentiate(Var::X);
        let d2g = dg.differentiate(Var::X);
        Newtonian {
            cg: CompiledExpr::new(&g),
            cdg: CompiledExpr::new(&dg),
            cd2g: CompiledExpr::new(&d2g),
            g,
            dg,
            d2g,
        }
    }

    pub fn g(&self, x: f64) -> Result<f64, DomainError> {
        self.cg.eval(x, 0.0)
    }

    pub fn dg(&self, x: f64) -> Result<f64, DomainError> {
        self.cdg.eval(x, 0.0)
    }

    pub fn d2g(&self, x: f64) -> Result<f64, DomainError> {
        self.cd2g.eval(x, 0.0)
    }
}

#[derive(Debug, Clone)]
struct HamiltonianData {
    h: Expr,
    ch: CompiledExpr,
    scale: Option<Expr>,
    cscale: Option<CompiledExpr>,
}

/// One autonomous planar subsystem together with its center.
///
/// Hamiltonian subsystems may carry a nonvanishing time scale `m(x, y)`,
/// giving `x' = m H_y`, `y' = -m H_x`. The orbits are still level sets of
/// `H`, and the area weighted by `1/|m|` has derivative equal to the period
/// with respect to the energy.
#[derive(Debug, Clone)]
pub struct Subsystem {
    label: String,
    kind: SubsystemKind,
    field: FieldFn,
    center: Point,
    hamiltonian: Option<HamiltonianData>,
    newtonian: Option<Newtonian>,
    jacobian: [[f64; 2]; 2],
}

fn fd_jacobian(field: &FieldFn, p: Point) -> Result<[[f64; 2]; 2], DomainError> {
    let central = |k: usize, h: f64| -> Result<Point, DomainError> {
        let mut a = p;
        let mut b = p;
        a[k] += h;
        b[k] -= h;
        let (fa, fb) = (field.eval(a)?, field.eval(b)?);
        Ok([(fa[0] - fb[0]) / (2.0 * h), (fa[1] - fb[1]) / (2.0 * h)])
    };
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let h = 1e-6 * p[k].abs().max(1.0);
        // Fields such as speed 1/(1 + r) are only Lipschitz at the center,
        // where central differences are first order; one Richardson step
        // removes that term and keeps second order for smooth fields.
        let (coarse, fine) = (central(k, h)?, central(k, 0.5 * h)?);
        for i in 0..2 {
            j[i][k] = 2.0 * fine[i] - coarse[i];
        }
    }
    Ok(j)
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

/// Damped Newton iteration for a zero of the field.
fn locate_zero(field: &FieldFn, guess: Point) -> Result<Point, OrbitError> {
    let mut p = guess;
    let mut f = field.eval(p)?;
    for _ in 0..100 {
        if norm(f) <= 1e-15 {
            break;
        }
        let j = fd_jacobian(field, p)?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(OrbitError::CenterNotFound { detail: format!("singular Jacobian at {p:?}") });
        }
        let dx = [(j[1][1] * f[0] - j[0][1] * f[1]) / det, (-j[1][0] * f[0] + j[0][0] * f[1]) / det];
        let mut lambda = 1.0;
        loop {
            let q = [p[0] - lambda * dx[0], p[1] - lambda * dx[1]];
            if let Ok(fq) = field.eval(q) {
                if norm(fq) < norm(f) || lambda < 1e-3 {
                    p = q;
                    f = fq;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(OrbitError::CenterNotFound { detail: format!("Newton stalled near {p:?}") });
            }
        }
        if norm(dx) * lambda <= 1e-15 * norm(p).max(1.0) {
            break;
        }
    }
    if norm(f) > 1e-10 {
        return Err(OrbitError::CenterNotFound { detail: format!("|f| = {:e} at {p:?}", norm(f)) });
    }
    Ok(p)
}

impl Subsystem {
    /// General subsystem from component expressions.
    pub fn general(label: &str, fx: &Expr, fy: &Expr, center_guess: Point) -> Result<Self, OrbitError> {
        let field = FieldFn::from_exprs(label, fx, fy);
        Self::from_field(label, field, center_guess)
    }

    /// General subsystem from an arbitrary field closure.
    pub fn from_field(label: &str, field: FieldFn, center_guess: Point) -> Result<Self, OrbitError> {
        let center = locate_zero(&field, center_guess)?;
        Self::finish(label, SubsystemKind::General, field, center, None, None)
    }

    /// `x' = m H_y`, `y' = -m H_x` with `m = 1` when no scale is given.
    pub fn hamiltonian(label: &str, h: &Expr, scale: Option<&Expr>, center_guess: Point) -> Result<Self, OrbitError> {
        let hx = h.differentiate(Var::X);
        let hy = h.differentiate(Var::Y);
        let (chx, chy) = (CompiledExpr::new(&hx), CompiledExpr::new(&hy));
        let cscale = scale.map(CompiledExpr::new);
        let cs = cscale.clone();
        let field = FieldFn::new(label, move |p: Point| {
            let m = match &cs {
                Some(s) => s.eval(p[0], p[1])?,
                None => 1.0,
            };
            Ok([m * chy.eval(p[0], p[1])?, -m * chx.eval(p[0], p[1])?])
        })
        .with_note(match scale {
            Some(s) => format!("H = {h}, scale {s}"),
            None => format!("H = {h}"),
        });
        let center = locate_zero(&field, center_guess)?;
        if let Some(s) = &cscale {
            if s.eval(center[0], center[1])? == 0.0 {
                return Err(OrbitError::HypothesisViolated { detail: "time scale vanishes at the center".into() });
            }
        }
        // Nondegenerate extremum: definite Hessian.
        let hxx = hx.differentiate(Var::X).eval(center[0], center[1])?;
        let hxy = hx.differentiate(Var::Y).eval(center[0], center[1])?;
        let hyy = hy.differentiate(Var::Y).eval(center[0], center[1])?;
        if hxx * hyy - hxy * hxy <= 1e-12 * (hxx.abs() + hyy.abs()).max(1e-300) {
            return Err(OrbitError::HypothesisViolated {
                detail: format!("Hessian of H at {center:?} is not definite"),
            });
        }
        let data = HamiltonianData { h: h.clone(), ch: CompiledExpr::new(h), scale: scale.cloned(), cscale };
        Self::finish(label, SubsystemKind::Hamiltonian, field, center, Some(data), None)
    }

    /// `x' = y`, `y' = -g(x)`, with energy `y^2/2 + G(x)`.
    pub fn newtonian(label: &str, g: &Expr, center_guess: f64) -> Result<Self, OrbitError> {
        if g.depends_on(Var::Y) {
            return Err(OrbitError::HypothesisViolated { detail: "g must depend on x only".into() });
        }
        let data = Newtonian::new(g.clone());
        let mut x = center_guess;
        for _ in 0..100 {
            let gx = data.g(x)?;
            let d = data.dg(x)?;
            if gx == 0.0 || d == 0.0 {
                break;
            }
            let step = gx / d;
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let gx = data.g(x)?;
        if gx.abs() > 1e-10 {
            return Err(OrbitError::CenterNotFound { detail: format!("g({x}) = {gx:e}") });
        }
        if data.dg(x)? <= 0.0 {
            return Err(OrbitError::HypothesisViolated { detail: format!("g'({x}) <= 0: not a center") });
        }
        let cg = CompiledExpr::new(g);
        let field =
            FieldFn::new(label, move |p: Point| Ok([p[1], -cg.eval(p[0], 0.0)?])).with_note(format!("g(x) = {g}"));
        Self::finish(label, SubsystemKind::Newtonian, field, [x, 0.0], None, Some(data))
    }

    fn finish(
        label: &str,
        kind: SubsystemKind,
        field: FieldFn,
        center: Point,
        hamiltonian: Option<HamiltonianData>,
        newtonian: Option<Newtonian>,
    ) -> Result<Self, OrbitError> {
        let jacobian = fd_jacobian(&field, center)?;
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let tr = jacobian[0][0] + jacobian[1][1];
        if det <= 0.0 || tr * tr >= 4.0 * det {
            return Err(OrbitError::HypothesisViolated {
                detail: format!("equilibrium {center:?} is not a linear center (trace {tr:e}, det {det:e})"),
            });
        }
        Ok(Subsystem { label: label.to_string(), kind, field, center, hamiltonian, newtonian, jacobian })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> SubsystemKind {
        self.kind
    }

    pub fn field(&self) -> &FieldFn {
        &self.field
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn newtonian_data(&self) -> Option<&Newtonian> {
        self.newtonian.as_ref()
    }

    pub fn hamiltonian_expr(&self) -> Option<&Expr> {
        self.hamiltonian.as_ref().map(|h| &h.h)
    }

    pub fn scale_expr(&self) -> Option<&Expr> {
        self.hamiltonian.as_ref().and_then(|h| h.scale.as_ref())
    }

    /// Period of the linearization at the center.
    pub fn linear_period(&self) -> f64 {
        let j = &self.jacobian;
        2.0 * PI / (j[0][0] * j[1][1] - j[0][1] * j[1][0]).sqrt()
    }

    /// Whether orbits have a conserved energy.
    pub fn has_energy(&self) -> bool {
        self.kind != SubsystemKind::General
    }

    /// Conserved energy, when the subsystem has one.
    pub fn energy(&self, p: Point) -> Option<Result<f64, OrbitError>> {
        if let Some(h) = &self.hamiltonian {
            return Some(h.ch.eval(p[0], p[1]).map_err(OrbitError::from));
        }
        let n = self.newtonian.as_ref()?;
        Some(self.potential(n, p[0]).map(|g| 0.5 * p[1] * p[1] + g))
    }

    /// `G(x) = ∫ g` from the center.
    pub fn potential_at(&self, x: f64) -> Option<Result<f64, OrbitError>> {
        self.newtonian.as_ref().map(|n| self.potential(n, x))
    }

    fn potential(&self, n: &Newtonian, x: f64) -> Result<f64, OrbitError> {
        let a = self.center[0];
        let tol = 1e-14 * (1.0 + (x - a).abs());
        crate::quad::integrate(|t| n.g(t).map_err(crate::quad::QuadError::Domain), a, x, tol)
            .or_else(|e| match e {
                // The error estimate is pessimistic; accept what the rounding floor allows.
                crate::quad::QuadError::NoConvergence { .. } => {
                    crate::quad::integrate(|t| n.g(t).map_err(crate::quad::QuadError::Domain), a, x, 1e-10 * (1.0 + (x - a).abs()))
                }
                other => Err(other),
            })
            .map(|r| r.value)
            .map_err(OrbitError::from)
    }

    /// Antiderivative in `x` of `1/|m|` from the center abscissa, used for the
    /// weighted area. `None` when the subsystem has no time scale.
    pub(crate) fn weight_primitive(&self, p: Point) -> Option<Result<f64, OrbitError>> {
        let data = self.hamiltonian.as_ref()?;
        let (scale, cs) = (data.scale.as_ref()?, data.cscale.as_ref()?);
        let cx = self.center[0];
        if !scale.depends_on(Var::X) {
            return Some(cs.eval(p[0], p[1]).map(|m| (p[0] - cx) / m.abs()).map_err(OrbitError::from));
        }
        let tol = 1e-13 * (1.0 + (p[0] - cx).abs());
        Some(
            crate::quad::integrate(
                |t| {
                    cs.eval(t, p[1]).map(|m| 1.0 / m.abs()).map_err(crate::quad::QuadError::Domain)
                },
                cx,
                p[0],
                tol,
            )
            .map(|r| r.value)
            .map_err(OrbitError::from),
        )
    }
}
