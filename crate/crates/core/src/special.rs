//! Special functions behind every series in the crate: Poisson kernels,
//! Stirling numbers of the second kind, Bell (Touchard) polynomials and the
//! lower incomplete gamma function.
//!
//! Exact Stirling numbers are kept as `u128` up to [`STIRLING_MAX`]. Beyond
//! that only logarithms of Bell polynomials are available, through a table of
//! `ln S_2(n, k)` built once with the same additive recurrence in log space
//! (all terms positive, so no cancellation), up to [`LN_BELL_MAX`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::function::{factorial, gamma};

use crate::error::{domain, invalid, Error, Result};

/// Largest degree with exact integer Stirling numbers.
pub const STIRLING_MAX: usize = 25;

/// Largest degree for which `ln B_n(x)` can be evaluated.
pub const LN_BELL_MAX: usize = 1024;

/// Truncation policy shared by every infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    /// Bound on the neglected tail mass (absolute for Poisson mixtures,
    /// relative for the Bell series).
    pub tolerance: f64,
    /// Hard cap on the number of retained terms.
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(tolerance: f64, max_terms: usize) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(invalid("tolerance", format!("{tolerance} not in (0, 1)")));
        }
        if max_terms == 0 {
            return Err(invalid("max_terms", "must be at least 1"));
        }
        Ok(Self {
            tolerance,
            max_terms,
        })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            tolerance: 1e-14,
            max_terms: LN_BELL_MAX,
        }
    }
}

/// Value of `B_n(x)` together with its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellEval {
    pub n: usize,
    pub x: f64,
    pub value: f64,
    pub log_value: f64,
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut acc = CompensatedSum::default();
    for t in &terms {
        acc.add((t - max).exp());
    }
    max + acc.value().ln()
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    factorial::ln_factorial(n as u64)
}

fn check_rate(a: f64) -> Result<()> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(domain(format!(
            "Poisson mean must be finite and >= 0, got {a}"
        )));
    }
    Ok(())
}

/// `ln p(m; a)`; `-inf` for impossible counts.
pub fn ln_poisson_pmf(m: u64, a: f64) -> Result<f64> {
    check_rate(a)?;
    if a == 0.0 {
        return Ok(if m == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(-a + m as f64 * a.ln() - factorial::ln_factorial(m))
}

/// Poisson probability `e^{-a} a^m / m!`, evaluated in log space.
///
/// Counts are unsigned, so a negative `m` cannot be expressed.
pub fn poisson_pmf(m: u64, a: f64) -> Result<f64> {
    Ok(ln_poisson_pmf(m, a)?.exp())
}

/// Partial sum `sum_{i<=n} p(i; a)`.
pub fn poisson_cdf(n: u64, a: f64) -> Result<f64> {
    check_rate(a)?;
    if a == 0.0 {
        return Ok(1.0);
    }
    let ln_a = a.ln();
    let mut acc = CompensatedSum::default();
    for i in 0..=n {
        let term = (-a + i as f64 * ln_a - factorial::ln_factorial(i)).exp();
        acc.add(term);
        // Past the mode the remaining terms shrink geometrically.
        if i as f64 > a {
            let r = a / (i as f64 + 1.0);
            if term * r / (1.0 - r) <= f64::EPSILON * 1e-3 * acc.value() {
                break;
            }
        }
    }
    Ok(acc.value().min(1.0))
}

/// Chernoff bound on `P{X >= m}` for `X ~ Poisson(a)`.
pub fn poisson_tail_bound(m: u64, a: f64) -> f64 {
    let m = m as f64;
    if m <= a {
        return 1.0;
    }
    if a == 0.0 {
        return 0.0;
    }
    (-a + m - m * (m / a).ln()).exp().min(1.0)
}

/// Smallest `N` such that the Poisson(a) mass beyond `N` is below the tolerance.
pub fn poisson_truncation(a: f64, ctl: &SeriesControl) -> Result<usize> {
    check_rate(a)?;
    let mut m = a.floor() as u64 + 1;
    loop {
        if poisson_tail_bound(m, a) <= ctl.tolerance {
            let needed = m as usize;
            if needed > ctl.max_terms {
                return Err(Error::TruncationCap {
                    needed,
                    cap: ctl.max_terms,
                });
            }
            return Ok(needed - 1);
        }
        m += 1;
    }
}

fn stirling_table() -> &'static Vec<Vec<u128>> {
    static TABLE: OnceLock<Vec<Vec<u128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<u128>> = vec![vec![1]];
        for n in 1..=STIRLING_MAX {
            let prev = &rows[n - 1];
            let mut row = vec![0u128; n + 1];
            for (k, slot) in row.iter_mut().enumerate().skip(1) {
                let stay = prev.get(k).copied().unwrap_or(0);
                *slot = k as u128 * stay + prev[k - 1];
            }
            rows.push(row);
        }
        rows
    })
}

/// Flat triangular table of `ln S_2(n, k)`; row `n` starts at `n(n+1)/2`.
fn ln_stirling_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows = LN_BELL_MAX + 1;
        let mut table = vec![f64::NEG_INFINITY; rows * (rows + 1) / 2];
        table[0] = 0.0;
        for n in 1..rows {
            let prev = (n - 1) * n / 2;
            let cur = n * (n + 1) / 2;
            for k in 1..=n {
                let stay = if k < n {
                    (k as f64).ln() + table[prev + k]
                } else {
                    f64::NEG_INFINITY
                };
                table[cur + k] = log_add_exp(stay, table[prev + k - 1]);
            }
        }
        table
    })
}

fn ln_stirling_row(n: usize) -> &'static [f64] {
    let start = n * (n + 1) / 2;
    &ln_stirling_table()[start..start + n + 1]
}

/// Exact Stirling number of the second kind, built with the additive
/// recurrence. `S_2(n, k) = 0` for `k > n`.
pub fn stirling2(n: usize, k: usize) -> Result<u128> {
    if n > STIRLING_MAX {
        return Err(Error::UnsupportedDegree {
            n,
            max: STIRLING_MAX,
        });
    }
    if k > n {
        return Ok(0);
    }
    Ok(stirling_table()[n][k])
}

fn check_argument(x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(domain(format!(
            "Bell polynomial argument must be finite and >= 0, got {x}"
        )));
    }
    Ok(())
}

/// `B_n(x) = sum_k S_2(n, k) x^k` with compensated summation.
pub fn bell_poly(n: usize, x: f64) -> Result<BellEval> {
    if n > STIRLING_MAX {
        return Err(Error::UnsupportedDegree {
            n,
            max: STIRLING_MAX,
        });
    }
    check_argument(x)?;
    let row = &stirling_table()[n];
    let mut acc = CompensatedSum::default();
    let mut power = 1.0;
    for &s in row {
        acc.add(s as f64 * power);
        power *= x;
    }
    let value = acc.value();
    let log_value = if value.is_finite() {
        value.ln()
    } else {
        let ln_x = x.ln();
        log_sum_exp(
            row.iter()
                .enumerate()
                .filter(|(_, &s)| s > 0)
                .map(|(k, &s)| (s as f64).ln() + k as f64 * ln_x),
        )
    };
    Ok(BellEval {
        n,
        x,
        value,
        log_value,
    })
}

/// `ln B_n(x)` for degrees up to [`LN_BELL_MAX`].
pub fn ln_bell(n: usize, x: f64) -> Result<f64> {
    if n <= STIRLING_MAX {
        return Ok(bell_poly(n, x)?.log_value);
    }
    if n > LN_BELL_MAX {
        return Err(Error::UnsupportedDegree {
            n,
            max: LN_BELL_MAX,
        });
    }
    check_argument(x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_x = x.ln();
    Ok(log_sum_exp(
        ln_stirling_row(n)
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &ls)| ls + k as f64 * ln_x),
    ))
}

/// `B'_n(x)`.
///
/// For `x > 0` and `n + 1 <= STIRLING_MAX` this is `-B_n(x) + B_{n+1}(x)/x`.
/// At `x = 0`, and for degrees past the exact table, the polynomial is
/// differentiated term by term instead.
pub fn bell_poly_derivative(n: usize, x: f64) -> Result<f64> {
    check_argument(x)?;
    if n > LN_BELL_MAX {
        return Err(Error::UnsupportedDegree {
            n,
            max: LN_BELL_MAX,
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    if x == 0.0 {
        // Coefficient of x is S_2(n, 1) = 1.
        return Ok(1.0);
    }
    if n < STIRLING_MAX {
        let b_n = bell_poly(n, x)?.value;
        let b_next = bell_poly(n + 1, x)?.value;
        return Ok(-b_n + b_next / x);
    }
    let ln_x = x.ln();
    let row = ln_stirling_row(n);
    Ok(log_sum_exp(
        row.iter()
            .enumerate()
            .skip(1)
            .map(|(k, &ls)| (k as f64).ln() + ls + (k as f64 - 1.0) * ln_x),
    )
    .exp())
}

/// `B_n(x)` from the Poisson moment series `sum_k k^n x^k e^{-x} / k!`.
///
/// Summation stops once the geometric bound on the remaining terms drops
/// below `ctl.tolerance` relative to the partial sum.
pub fn bell_poly_series(n: usize, x: f64, ctl: &SeriesControl) -> Result<f64> {
    check_argument(x)?;
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let ln_x = x.ln();
    let nf = n as f64;
    let mut acc = CompensatedSum::default();
    if n == 0 {
        acc.add((-x).exp());
    }
    for k in 1..=ctl.max_terms {
        let kf = k as f64;
        let term = (nf * kf.ln() + kf * ln_x - x - ln_factorial(k)).exp();
        acc.add(term);
        let ratio = ((kf + 1.0) / kf).powf(nf) * x / (kf + 1.0);
        if ratio < 1.0 && term * ratio / (1.0 - ratio) <= ctl.tolerance * acc.value() {
            return Ok(acc.value());
        }
    }
    Err(Error::TruncationCap {
        needed: ctl.max_terms + 1,
        cap: ctl.max_terms,
    })
}

/// `B_n(x)` by generating the coefficients with `B_{m+1} = x (B'_m + B_m)`
/// starting from `B_0 = 1`, then Horner evaluation.
pub fn bell_poly_recursive(n: usize, x: f64) -> Result<f64> {
    if n > STIRLING_MAX {
        return Err(Error::UnsupportedDegree {
            n,
            max: STIRLING_MAX,
        });
    }
    check_argument(x)?;
    let mut coeffs = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            // x * B'_m contributes k c_k x^k, x * B_m contributes c_k x^{k+1}.
            next[k] += k as f64 * c;
            next[k + 1] += c;
        }
        coeffs = next;
    }
    Ok(coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c))
}

/// Lower incomplete gamma `gamma(a, z) = int_0^z t^{a-1} e^{-t} dt`.
///
/// Backed by the series / continued-fraction evaluation in `statrs`.
pub fn lower_incomplete_gamma(a: f64, z: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!(
            "incomplete gamma shape must be positive, got {a}"
        )));
    }
    if z.is_nan() || z < 0.0 {
        return Err(domain(format!(
            "incomplete gamma limit must be >= 0, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(gamma::gamma(a));
    }
    gamma::checked_gamma_li(a, z).map_err(|e| domain(e.to_string()))
}

/// Regularized lower incomplete gamma `P(a, z)`.
pub(crate) fn regularized_lower_gamma(a: f64, z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z.is_infinite() {
        1.0
    } else {
        gamma::gamma_lr(a, z)
    }
}

/// Standard normal CDF via the musl `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pmf_basic_values() {
        assert_eq!(poisson_pmf(0, 0.0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(3, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            poisson_pmf(0, 2.5).unwrap(),
            (-2.5f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            poisson_pmf(2, 1.0).unwrap(),
            (-1.0f64).exp() / 2.0,
            max_relative = 1e-14
        );
        assert!(poisson_pmf(1, -1.0).is_err());
        assert!(poisson_pmf(1, f64::NAN).is_err());
    }

    #[test]
    fn pmf_large_arguments_stay_finite() {
        let p = poisson_pmf(1000, 1000.0).unwrap();
        assert!(p > 0.0 && p < 0.02);
        let total: f64 = (0..5000).map(|m| poisson_pmf(m, 2000.0).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_normalizes_under_truncation() {
        let ctl = SeriesControl::default();
        let n = poisson_truncation(5.0, &ctl).unwrap();
        let total: f64 = (0..=n as u64).map(|m| poisson_pmf(m, 5.0).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn cdf_edge_cases() {
        assert_relative_eq!(
            poisson_cdf(0, 3.0).unwrap(),
            (-3.0f64).exp(),
            max_relative = 1e-15
        );
        for n in 0..5 {
            assert_eq!(poisson_cdf(n, 0.0).unwrap(), 1.0);
        }
        assert!(poisson_cdf(2, -0.5).is_err());
        let direct: f64 = (0..=10).map(|i| poisson_pmf(i, 1.0).unwrap()).sum();
        let cdf = poisson_cdf(10, 1.0).unwrap();
        assert!((cdf - direct).abs() < 1e-15);
        let tail: f64 = (11..40).map(|i| poisson_pmf(i, 1.0).unwrap()).sum();
        assert!((1.0 - cdf - tail).abs() < 1e-15);
        // very large n terminates early
        assert!((poisson_cdf(u64::MAX / 2, 4.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncation_respects_cap() {
        let ctl = SeriesControl::new(1e-12, 10).unwrap();
        assert!(matches!(
            poisson_truncation(50.0, &ctl),
            Err(Error::TruncationCap { .. })
        ));
        assert!(SeriesControl::new(0.0, 10).is_err());
        assert!(SeriesControl::new(1.0, 10).is_err());
        assert!(SeriesControl::new(1e-3, 0).is_err());
    }

    #[test]
    fn stirling_small_values() {
        assert_eq!(stirling2(0, 0).unwrap(), 1);
        assert_eq!(stirling2(4, 2).unwrap(), 7);
        assert_eq!(stirling2(5, 3).unwrap(), 25);
        assert_eq!(stirling2(3, 5).unwrap(), 0);
        assert_eq!(stirling2(7, 0).unwrap(), 0);
        assert!(matches!(
            stirling2(STIRLING_MAX + 1, 2),
            Err(Error::UnsupportedDegree { .. })
        ));
    }

    /// Brute-force enumeration of set partitions by restricted growth strings.
    fn count_partitions(n: usize, k: usize) -> u128 {
        fn rec(pos: usize, n: usize, k: usize, max_used: usize, acc: &mut u128) {
            if pos == n {
                if max_used == k {
                    *acc += 1;
                }
                return;
            }
            for block in 1..=(max_used + 1).min(k) {
                rec(pos + 1, n, k, max_used.max(block), acc);
            }
        }
        if n == 0 {
            return u128::from(k == 0);
        }
        let mut acc = 0;
        rec(0, n, k, 0, &mut acc);
        acc
    }

    #[test]
    fn stirling_matches_enumeration() {
        assert_eq!(count_partitions(3, 2), 3);
        for n in 0..=9 {
            for k in 0..=n {
                assert_eq!(
                    stirling2(n, k).unwrap(),
                    count_partitions(n, k),
                    "S2({n},{k})"
                );
            }
        }
    }

    #[test]
    fn bell_known_polynomials() {
        for x in [0.0, 0.3, 7.0] {
            assert_eq!(bell_poly(0, x).unwrap().value, 1.0);
        }
        assert_eq!(bell_poly(2, 2.0).unwrap().value, 6.0);
        assert_eq!(bell_poly(5, 1.0).unwrap().value, 52.0);
        let x: f64 = 1.7;
        assert_relative_eq!(
            bell_poly(4, x).unwrap().value,
            x + 7.0 * x.powi(2) + 6.0 * x.powi(3) + x.powi(4),
            max_relative = 1e-15
        );
        let e = bell_poly(6, 3.0).unwrap();
        assert_relative_eq!(e.log_value.exp(), e.value, max_relative = 1e-14);
        assert!(bell_poly(STIRLING_MAX + 1, 1.0).is_err());
        assert!(bell_poly(3, -1.0).is_err());
    }

    #[test]
    fn bell_numbers_are_row_sums() {
        for n in 0..=15 {
            let row: u128 = (0..=n).map(|k| stirling2(n, k).unwrap()).sum();
            assert_eq!(bell_poly(n, 1.0).unwrap().value, row as f64);
        }
        assert_eq!(bell_poly(15, 1.0).unwrap().value, 1_382_958_545.0);
    }

    #[test]
    fn log_bell_is_continuous_across_table_switch() {
        for x in [0.05, 1.0, 12.0, 300.0] {
            for n in (STIRLING_MAX - 2)..=STIRLING_MAX {
                let exact = bell_poly(n, x).unwrap().log_value;
                let ln_x = x.ln();
                let tabled = log_sum_exp(
                    ln_stirling_row(n)
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, &ls)| ls + k as f64 * ln_x),
                );
                assert_relative_eq!(exact, tabled, max_relative = 1e-13, epsilon = 1e-13);
            }
        }
        assert_eq!(ln_bell(40, 0.0).unwrap(), f64::NEG_INFINITY);
        assert!(ln_bell(LN_BELL_MAX + 1, 1.0).is_err());
    }

    #[test]
    fn log_bell_large_degree_matches_series() {
        let ctl = SeriesControl::new(1e-15, 5000).unwrap();
        for (n, x) in [(30usize, 2.0f64), (60, 10.0), (100, 40.0)] {
            let series = bell_poly_series(n, x, &ctl).unwrap();
            assert_relative_eq!(ln_bell(n, x).unwrap(), series.ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn derivative_small_cases_and_zero() {
        assert_eq!(bell_poly_derivative(0, 2.0).unwrap(), 0.0);
        assert_relative_eq!(
            bell_poly_derivative(1, 3.5).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_eq!(bell_poly_derivative(4, 0.0).unwrap(), 1.0);
        assert_eq!(bell_poly_derivative(0, 0.0).unwrap(), 0.0);
        assert!(bell_poly_derivative(2, -1.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        let fd = (bell_poly(3, 1.0 + h).unwrap().value - bell_poly(3, 1.0 - h).unwrap().value)
            / (2.0 * h);
        // B_3' = 1 + 6x + 3x^2 -> 10 at x = 1
        assert!((bell_poly_derivative(3, 1.0).unwrap() - fd).abs() < 1e-6);
        assert!((fd - 10.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_past_exact_table_uses_coefficients() {
        let n = 30;
        let x: f64 = 4.0;
        let h = 1e-5 * x;
        let fd =
            ((ln_bell(n, x + h).unwrap()).exp() - (ln_bell(n, x - h).unwrap()).exp()) / (2.0 * h);
        assert_relative_eq!(bell_poly_derivative(n, x).unwrap(), fd, max_relative = 1e-7);
    }

    #[test]
    fn recursion_route_matches_dobinski() {
        for n in 0..=20 {
            for x in [0.1, 2.0, 50.0] {
                assert_relative_eq!(
                    bell_poly_recursive(n, x).unwrap(),
                    bell_poly(n, x).unwrap().value,
                    max_relative = 1e-14
                );
            }
        }
    }

    /// Composite Simpson on [0, z] for a smooth integrand.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn incomplete_gamma_values() {
        for z in [0.0, 0.5, 3.0, 40.0] {
            assert_relative_eq!(
                lower_incomplete_gamma(1.0, z).unwrap(),
                -(-z).exp_m1(),
                max_relative = 1e-13,
                epsilon = 1e-300
            );
        }
        assert_eq!(lower_incomplete_gamma(2.5, 0.0).unwrap(), 0.0);
        let oracle = simpson(|t| t * (-t).exp(), 0.0, 1.0, 2000);
        assert!((oracle - 0.264_241_117_657_115_4).abs() < 1e-12);
        assert!((lower_incomplete_gamma(2.0, 1.0).unwrap() - oracle).abs() < 1e-12);
        assert!(lower_incomplete_gamma(0.0, 1.0).is_err());
        assert!(lower_incomplete_gamma(1.0, -1.0).is_err());
        assert_relative_eq!(
            lower_incomplete_gamma(4.0, f64::INFINITY).unwrap(),
            6.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn incomplete_gamma_integer_closed_form() {
        for a in 1..6u64 {
            for z in [0.2, 1.0, 4.0, 11.0] {
                // z^a e^{-z} sum_k z^k / (a (a+1) ... (a+k)), free of cancellation.
                let (mut term, mut series) = (1.0 / a as f64, 0.0);
                for k in 0..400 {
                    series += term;
                    term *= z / (a as f64 + k as f64 + 1.0);
                }
                let expected = z.powi(a as i32) * (-z).exp() * series;
                assert_relative_eq!(
                    lower_incomplete_gamma(a as f64, z).unwrap(),
                    expected,
                    max_relative = 1e-11
                );
            }
        }
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_relative_eq!(
            normal_cdf(1.96),
            0.975_002_104_851_780,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            normal_cdf(-5.0),
            2.866_515_718_791_939e-7,
            max_relative = 1e-12
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bell_bounds(n in 1usize..=STIRLING_MAX, x in 0.0f64..60.0) {
                let b = bell_poly(n, x).unwrap().value;
                prop_assert!(b >= x.powi(n as i32) * (1.0 - 1e-14));
                prop_assert!(b >= x * (1.0 - 1e-14));
            }

            #[test]
            fn binomial_convolution(n in 0usize..=15, a in 0.0f64..20.0, b in 0.0f64..20.0) {
                let mut lhs = 0.0;
                for k in 0..=n {
                    let binom = factorial::binomial(n as u64, k as u64);
                    lhs += binom * bell_poly(k, a).unwrap().value * bell_poly(n - k, b).unwrap().value;
                }
                let rhs = bell_poly(n, a + b).unwrap().value;
                prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300));
            }

            #[test]
            fn derivative_recurrence(n in 0usize..=19, x in 0.01f64..50.0) {
                let b = bell_poly(n, x).unwrap().value;
                let d = bell_poly_derivative(n, x).unwrap();
                let next = bell_poly(n + 1, x).unwrap().value;
                prop_assert!((x * (d + b) - next).abs() <= 1e-9 * next);
            }

            #[test]
            fn poisson_cdf_monotone(n in 0u64..60, a in 0.0f64..40.0) {
                let lo = poisson_cdf(n, a).unwrap();
                let hi = poisson_cdf(n + 1, a).unwrap();
                prop_assert!(hi >= lo && hi <= 1.0 && lo >= 0.0);
            }
        }
    }
}
