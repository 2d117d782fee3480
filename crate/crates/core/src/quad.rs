//! Adaptive Gauss–Kronrod quadrature on a finite interval.

use std::collections::BinaryHeap;

use crate::expr::DomainError;

/// Why a quadrature could not meet its tolerance.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("quadrature did not converge (error estimate {achieved_error:e})")]
    NoConvergence { achieved_error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss
// weights (the Gauss nodes are XGK[1], XGK[3], XGK[5], XGK[7]).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 2000;

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F, E>(f: &mut F, a: f64, b: f64) -> Result<Piece, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Piece { a, b, value: k * h, error: ((k - g) * h).abs(), abs: abs * h.abs() })
}

/// Integrate `f` over `[a, b]` until the summed error estimate is below `tol`.
///
/// Subdivision always splits the piece with the largest estimate. A
/// requested tolerance below the rounding floor of the integral cannot be
/// met and is reported as [`QuadError::NoConvergence`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> Result<f64, QuadError>,
{
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let first = kronrod(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut total = first.value;
    let mut err = first.error;
    let mut abs = first.abs;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let floor = 50.0 * f64::EPSILON * abs;
        if err <= tol || err <= floor {
            if err > tol {
                return Err(QuadError::NoConvergence { achieved_error: err });
            }
            return Ok(QuadResult { value: total, error: err, evaluations });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(QuadError::NoConvergence { achieved_error: err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            return Err(QuadError::NoConvergence { achieved_error: err });
        }
        let left = kronrod(&mut f, worst.a, mid)?;
        let right = kronrod(&mut f, mid, worst.b)?;
        evaluations += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
        // Re-sum occasionally so the running totals do not drift.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
            abs = heap.iter().map(|p| p.abs).sum();
        }
    }
}

/// Convenience wrapper for infallible integrands.
pub fn integrate_fn<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> f64,
{
    integrate(|t| Ok(f(t)), a, b, tol)
}
