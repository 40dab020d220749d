//! Goodness-of-fit statistics for comparing simulated samples to analytic laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Kolmogorov distance `sup |F_n(x) - F(x)|` between the empirical law of
/// `samples` and a CDF with left limits `cdf_left`. Handles atoms in `F`.
/// Sorts `samples` in place.
pub fn ks_statistic<F, G>(samples: &mut [f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < samples.len() {
        let x = samples[i];
        let mut j = i;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d
            .max((cdf_left(x) - below).abs())
            .max((cdf(x) - upto).abs());
        i = j;
    }
    d
}

/// Asymptotic Kolmogorov tail `P{sqrt(n) D_n > x}`.
pub fn kolmogorov_pvalue(x: f64) -> f64 {
    // The series converges slowly near 0 where the tail is 1 to double precision.
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic critical value of `D_n` at level `alpha`.
pub fn ks_critical_value(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let (mut lo, mut hi) = (0.2, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_pvalue(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / (n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of integer-valued samples to `pmf`.
///
/// States with expected count at least `min_expected` form their own cells;
/// all remaining mass is pooled into one cell, which is merged into the
/// largest cell if it is itself too small.
pub fn chi_square_gof(samples: &[u64], pmf: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return Err(invalid("samples", "empty sample"));
    }
    let mut counts = vec![0u64; pmf.len()];
    let mut outside = 0u64;
    for &s in samples {
        match counts.get_mut(s as usize) {
            Some(c) => *c += 1,
            None => outside += 1,
        }
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut rest_obs = outside as f64;
    let mut rest_exp = (1.0 - pmf.iter().sum::<f64>()).max(0.0) * n;
    for (state, &p) in pmf.iter().enumerate() {
        let e = p * n;
        if e >= min_expected {
            cells.push((counts[state] as f64, e));
        } else {
            rest_obs += counts[state] as f64;
            rest_exp += e;
        }
    }
    if rest_exp >= min_expected || cells.is_empty() {
        cells.push((rest_obs, rest_exp));
    } else if let Some(big) = cells.iter_mut().max_by(|a, b| a.1.total_cmp(&b.1)) {
        big.0 += rest_obs;
        big.1 += rest_exp;
    }
    if cells.len() < 2 {
        return Err(invalid(
            "pmf",
            "fewer than two cells with enough expected count",
        ));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| invalid("dof", e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Binomial standard error `sqrt(p (1 - p) / n)`.
pub fn proportion_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Pooled two-proportion z statistic.
pub fn two_proportion_z(x1: usize, n1: usize, x2: usize, n2: usize) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = x1 as f64 / n1f;
    let p2 = x2 as f64 / n2f;
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (p1 - p2) / se
    }
}
