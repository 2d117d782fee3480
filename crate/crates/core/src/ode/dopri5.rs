//! Dormand–Prince 5(4) with the standard fourth-order continuous extension.

use super::{OdeError, Stats, Tolerances};
use crate::expr::DomainError;


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
// step ratio limits: hnew/h in [1/FAC_MAX_INV, 1/FAC_MIN_INV]
const FAC_MIN_INV: f64 = 0.2;
const FAC_MAX_INV: f64 = 10.0;

/// Interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    h: f64,
    coef: [[f64; N]; 5],
    y1: [f64; N],
}

impl<const N: usize> DenseSegment<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        if t == self.t1 {
            return self.y1;
        }
        if t == self.t0 {
            return self.coef[0];
        }
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.coef;
        std::array::from_fn(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
    }

    /// The same interpolant, ending early at `t`.
    pub fn truncated(&self, t: f64) -> Self {
        DenseSegment { t1: t, y1: self.eval(t), ..*self }
    }

    pub fn start(&self) -> [f64; N] {
        self.coef[0]
    }

    pub fn end(&self) -> [f64; N] {
        self.y1
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Trouble {
    None,
    NonFinite,
    Field,
}

/// Adaptive stepper state.
pub(crate) struct Stepper<'a, const N: usize, F> {
    f: &'a F,
    tol: &'a Tolerances,
    pub t: f64,
    pub y: [f64; N],
    k1: [f64; N],
    h: f64,
    facold: f64,
    last_rejected: bool,
    pub stats: Stats,
    field_error: Option<DomainError>,
}

fn lin<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        y[i] + h * acc
    })
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl<'a, const N: usize, F> Stepper<'a, N, F>
where
    F: Fn(&[f64; N]) -> Result<[f64; N], DomainError>,
{
    pub fn new(f: &'a F, tol: &'a Tolerances, t0: f64, y0: [f64; N], horizon: f64) -> Result<Self, OdeError> {
        if !finite(&y0) {
            return Err(OdeError::NonFiniteState { t: t0 });
        }
        let k1 = f(&y0).map_err(|e| OdeError::FieldUndefined { t: t0, source: e })?;
        let mut s = Stepper {
            f,
            tol,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            facold: 1e-4,
            last_rejected: false,
            stats: Stats { steps: 0, rejected: 0, rhs_evals: 1 },
            field_error: None,
        };
        s.h = s.initial_step(horizon);
        Ok(s)
    }

    fn scale(&self, a: &[f64; N], b: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| self.tol.atol + self.tol.rtol * a[i].abs().max(b[i].abs()))
    }

    fn norm(v: &[f64; N], sc: &[f64; N]) -> f64 {
        (v.iter().zip(sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / N as f64).sqrt()
    }

    fn initial_step(&mut self, horizon: f64) -> f64 {
        let cap = self.tol.max_step.unwrap_or(f64::INFINITY).min(horizon.abs().max(f64::MIN_POSITIVE));
        let sc = self.scale(&self.y, &self.y);
        let d0 = Self::norm(&self.y, &sc);
        let d1 = Self::norm(&self.k1, &sc);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(cap);
        let y1 = lin(&self.y, h0, &[(1.0, &self.k1)]);
        let h1 = match (self.f)(&y1) {
            Ok(f1) => {
                self.stats.rhs_evals += 1;
                let diff: [f64; N] = std::array::from_fn(|i| f1[i] - self.k1[i]);
                let d2 = Self::norm(&diff, &sc) / h0;
                let m = d1.max(d2);
                if m <= 1e-15 {
                    (h0 * 1e-3).max(1e-6)
                } else {
                    (0.01 / m).powf(0.2)
                }
            }
            Err(_) => h0 * 1e-3,
        };
        (100.0 * h0).min(h1).min(cap)
    }

    /// Take one accepted step that does not pass `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseSegment<N>, OdeError> {
        let mut trouble = Trouble::None;
        loop {
            if self.stats.steps + self.stats.rejected >= self.tol.max_steps {
                return Err(OdeError::TooManySteps { t: self.t });
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.tol.max_step.unwrap_or(f64::INFINITY));
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let floor = 16.0 * f64::EPSILON * self.t.abs().max(1.0);
            if h < floor && !last {
                return Err(match trouble {
                    Trouble::NonFinite => OdeError::NonFiniteState { t: self.t },
                    Trouble::Field => OdeError::FieldUndefined {
                        t: self.t,
                        source: self.field_error.clone().expect("field error recorded"),
                    },
                    Trouble::None => OdeError::StepSizeUnderflow { t: self.t },
                });
            }
            match self.attempt(h) {
                Attempt::Accepted(seg, hnext) => {
                    self.t = if last { t_end } else { self.t + h };
                    self.y = seg.y1;
                    self.h = hnext;
                    self.stats.steps += 1;
                    self.last_rejected = false;
                    let mut seg = seg;
                    seg.t1 = self.t;
                    return Ok(seg);
                }
                Attempt::Rejected(hnext) => {
                    self.stats.rejected += 1;
                    self.last_rejected = true;
                    self.h = hnext;
                }
                Attempt::Failed(why) => {
                    self.stats.rejected += 1;
                    self.last_rejected = true;
                    trouble = why;
                    self.h = h * 0.25;
                }
            }
        }
    }

    fn eval(&mut self, y: &[f64; N]) -> Result<[f64; N], Trouble> {
        self.stats.rhs_evals += 1;
        if !finite(y) {
            return Err(Trouble::NonFinite);
        }
        match (self.f)(y) {
            Ok(v) if finite(&v) => Ok(v),
            Ok(_) => Err(Trouble::NonFinite),
            Err(e) => {
                self.field_error = Some(e);
                Err(Trouble::Field)
            }
        }
    }

    fn attempt(&mut self, h: f64) -> Attempt<N> {
        match self.try_stages(h) {
            Ok(a) => a,
            Err(why) => Attempt::Failed(why),
        }
    }

    fn try_stages(&mut self, h: f64) -> Result<Attempt<N>, Trouble> {
        let y = self.y;
        let k1 = self.k1;
        let k2 = self.eval(&lin(&y, h, &[(A21, &k1)]))?;
        let k3 = self.eval(&lin(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = self.eval(&lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = self.eval(&lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = self.eval(&lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let ynew = lin(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = self.eval(&ynew)?;
        let errv: [f64; N] =
            std::array::from_fn(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let sc = self.scale(&y, &ynew);
        let err = Self::norm(&errv, &sc);
        if !err.is_finite() {
            return Err(Trouble::NonFinite);
        }
        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            let fac = (fac11 / self.facold.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX_INV, 1.0 / FAC_MIN_INV);
            let mut hnew = h / fac;
            if self.last_rejected {
                hnew = hnew.min(h);
            }
            self.facold = err.max(1e-4);
            let ydiff: [f64; N] = std::array::from_fn(|i| ynew[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let c3: [f64; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let c4: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            self.k1 = k7;
            let seg = DenseSegment { t0: self.t, t1: self.t + h, h, coef: [y, ydiff, bspl, c3, c4], y1: ynew };
            Ok(Attempt::Accepted(seg, hnew))
        } else {
            let hnew = h / (1.0 / FAC_MIN_INV).min(fac11 / SAFETY);
            Ok(Attempt::Rejected(hnew))
        }
    }
}

enum Attempt<const N: usize> {
    Accepted(DenseSegment<N>, f64),
    Rejected(f64),
    Failed(Trouble),
}
