//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used for mass and moment checks of the densities and for the integral
//! oracles in the verification suites.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

/// An integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrate `f` over `[a, b]` to an absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b);
    let mut error = first.error;
    heap.push(first);
    while error > abs_tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                estimate: error,
                tolerance: abs_tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically to shed accumulated rounding in the running total.
        if heap.len() % 64 == 0 {
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Quadrature { value, error })
}

/// Integrate `f` over `[a, inf)` through the map `x = a + u / (1 - u)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    integrate(
        |u: f64| {
            let w = 1.0 - u;
            let x = a + u / w;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / (w * w)
            }
        },
        0.0,
        1.0,
        abs_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| 3.0 * x * x + 2.0 * x - 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((q.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let q = integrate(|x: f64| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!(q.value.abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_exponential_and_gamma() {
        let q = integrate_semi_infinite(|x: f64| (-x).exp(), 0.0, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
        let q = integrate_semi_infinite(|x: f64| x.powi(3) * (-2.0 * x).exp(), 0.0, 1e-12).unwrap();
        assert!((q.value - 6.0 / 16.0).abs() < 1e-12);
        let q = integrate_semi_infinite(|x: f64| (-x).exp(), 1.0, 1e-12).unwrap();
        assert!((q.value - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_over_window() {
        let q = integrate(
            |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -12.0,
            12.0,
            1e-12,
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-9).unwrap().value, 0.0);
        let q = integrate(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((q.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(
            |x: f64| if x > 0.5 { 1.0 / (x - 0.5) } else { 0.0 },
            0.0,
            1.0,
            1e-12,
        );
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
