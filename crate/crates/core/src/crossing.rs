//! First-crossing and first-hitting times of the iterated Poisson process.
//!
//! `T = inf{t > 0 : Z(t) >= beta(t)}` for a boundary with `beta(0) = k >= 1`,
//! and `H = inf{t > 0 : Z(t) = k}` for the first visit to state `k`.
//!
//! Paths of `Z` are nondecreasing, so for a nonincreasing boundary the
//! survival function is a CDF of `Z(t)` at the largest integer strictly below
//! `beta(t)`. For the unit-slope increasing boundary `k + t` the avoiding
//! probabilities `g(j; n) = P{Z(n) = j, T > n}` are propagated one unit of
//! time at a time.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::iterated::{stirling_partial, IteratedLaw};
use crate::special::{
    bell_poly, bell_poly_derivative, ln_factorial, lower_incomplete_gamma, stirling2,
    CompensatedSum,
};

/// Boundary `beta_k(t)` with `beta_k(0) = k`.
#[derive(Clone)]
pub enum Boundary {
    /// `beta(t) = k`.
    Constant { k: usize },
    /// `beta(t) = max(k - t, 0)`.
    LinearDecreasing { k: usize },
    /// `beta(t) = k + t`.
    LinearIncreasing { k: usize },
    /// A caller-supplied boundary, declared nonincreasing.
    General {
        k: usize,
        beta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Constant { k } => write!(f, "Constant {{ k: {k} }}"),
            Boundary::LinearDecreasing { k } => write!(f, "LinearDecreasing {{ k: {k} }}"),
            Boundary::LinearIncreasing { k } => write!(f, "LinearIncreasing {{ k: {k} }}"),
            Boundary::General { k, .. } => write!(f, "General {{ k: {k}, .. }}"),
        }
    }
}

fn check_level(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "boundary level must be at least 1"));
    }
    Ok(())
}

impl Boundary {
    pub fn constant(k: usize) -> Result<Self> {
        check_level(k)?;
        Ok(Boundary::Constant { k })
    }

    pub fn linear_decreasing(k: usize) -> Result<Self> {
        check_level(k)?;
        Ok(Boundary::LinearDecreasing { k })
    }

    pub fn linear_increasing(k: usize) -> Result<Self> {
        check_level(k)?;
        Ok(Boundary::LinearIncreasing { k })
    }

    /// Wraps a nonincreasing function; `beta(0)` must be a positive integer.
    pub fn general(beta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let start = beta(0.0);
        let k = start.round();
        if !(k >= 1.0 && (start - k).abs() <= 1e-12) {
            return Err(invalid(
                "beta",
                format!("beta(0) must be a positive integer, got {start}"),
            ));
        }
        Ok(Boundary::General {
            k: k as usize,
            beta: Arc::new(beta),
        })
    }

    pub fn k(&self) -> usize {
        match self {
            Boundary::Constant { k }
            | Boundary::LinearDecreasing { k }
            | Boundary::LinearIncreasing { k }
            | Boundary::General { k, .. } => *k,
        }
    }

    pub fn level(&self, t: f64) -> f64 {
        match self {
            Boundary::Constant { k } => *k as f64,
            Boundary::LinearDecreasing { k } => (*k as f64 - t).max(0.0),
            Boundary::LinearIncreasing { k } => *k as f64 + t,
            Boundary::General { beta, .. } => beta(t).max(0.0),
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        !matches!(self, Boundary::LinearIncreasing { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Constant { .. } => "constant",
            Boundary::LinearDecreasing { .. } => "linear_decreasing",
            Boundary::LinearIncreasing { .. } => "linear_increasing",
            Boundary::General { .. } => "general_nonincreasing",
        }
    }
}

/// Largest integer strictly below `x` (for `x > 0`).
pub fn floor_minus(x: f64) -> i64 {
    x.ceil() as i64 - 1
}

/// Survival, density and defect of `T` at one time point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingResult {
    pub t: f64,
    pub survival: f64,
    /// Density of `T`, where a closed form is available.
    pub density: Option<f64>,
    /// `P{T = inf}`, where known.
    pub defect: Option<f64>,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(domain(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// `P{T > t} = P_{floor(beta(t)-)}(t)` for a nonincreasing boundary.
///
/// Once the boundary has reached zero the crossing has certainly happened.
pub fn survival_nonincreasing(boundary: &Boundary, t: f64, law: &IteratedLaw) -> Result<f64> {
    if !boundary.is_nonincreasing() {
        return Err(Error::WrongOperation(format!(
            "{} boundary is not nonincreasing; use survival_linear_increasing",
            boundary.name()
        )));
    }
    check_time(t)?;
    let level = boundary.level(t);
    if level <= 0.0 {
        return Ok(0.0);
    }
    law.cdf(floor_minus(level) as usize, t)
}

/// Density of `T` for the constant boundary `k`: `-d/dt P_{k-1}(t)`,
/// differentiated term by term through `B'_j`.
pub fn crossing_density_constant(k: usize, t: f64, law: &IteratedLaw) -> Result<f64> {
    check_level(k)?;
    check_time(t)?;
    let c = law.params.exit_rate();
    let a = law.params.bell_rate();
    let decay = (-c * t).exp();
    if k == 1 {
        return Ok(c * decay);
    }
    let ln_mu = law.params.mu().ln();
    let mut acc = CompensatedSum::default();
    for j in 1..k {
        let weight = (j as f64 * ln_mu - ln_factorial(j)).exp();
        acc.add(weight * bell_poly_derivative(j, a * t)?);
    }
    let value = c * law.cdf(k - 1, t)? - a * decay * acc.value();
    Ok(value.max(0.0))
}

/// The same density from the Stirling expansion of `P_{k-1}(t)`, with the
/// power sums starting at `i = 1`. Kept as an independent cross-check.
pub fn crossing_density_constant_stirling(k: usize, t: f64, law: &IteratedLaw) -> Result<f64> {
    check_level(k)?;
    check_time(t)?;
    let c = law.params.exit_rate();
    let a = law.params.bell_rate();
    let mu = law.params.mu();
    let p0 = (-c * t).exp();
    let x = a * t;
    let mut level = CompensatedSum::default();
    let mut slope = CompensatedSum::default();
    level.add(1.0);
    for i in 1..k {
        let weight = stirling_partial(i, k - 1, mu)?;
        level.add(x.powi(i as i32) * weight);
        slope.add(i as f64 * x.powi(i as i32 - 1) * weight);
    }
    Ok(p0 * c * level.value() - p0 * a * slope.value())
}

/// `E(T)` for the constant boundary `k`:
/// `(1 / c) [1 + sum_{i=1}^{k-1} i! / (e^mu - 1)^i C(i; k-1)]`.
pub fn mean_crossing_time_constant(k: usize, law: &IteratedLaw) -> Result<f64> {
    check_level(k)?;
    let mu = law.params.mu();
    let ln_b = mu.exp_m1().ln();
    let mut acc = CompensatedSum::default();
    acc.add(1.0);
    for i in 1..k {
        let scale = (ln_factorial(i) - i as f64 * ln_b).exp();
        acc.add(scale * stirling_partial(i, k - 1, mu)?);
    }
    Ok(acc.value() / law.params.exit_rate())
}

/// Density of the first-hitting time of state `k`:
/// `(e^{-mu} mu^k / k!) lambda e^{-ct} B'_k(lambda e^{-mu} t)`.
/// Defective: it integrates to the hitting probability.
pub fn hitting_density(k: usize, t: f64, law: &IteratedLaw) -> Result<f64> {
    check_level(k)?;
    check_time(t)?;
    let mu = law.params.mu();
    let ln_front = -mu + k as f64 * mu.ln() - ln_factorial(k) + law.params.lambda().ln()
        - law.params.exit_rate() * t;
    Ok(ln_front.exp() * bell_poly_derivative(k, law.params.bell_rate() * t)?)
}

/// Distribution function of the first-hitting time of state `k`,
/// `(mu^k/k!) [e^{-ct} B_k(a t) + sum_{j=0}^k S_2(k,j) gamma(j+1, ct) / (e^mu - 1)^j]`.
///
/// The `j = 0` term vanishes because `S_2(k, 0) = 0` for `k >= 1`.
pub fn hitting_cdf(k: usize, t: f64, law: &IteratedLaw) -> Result<f64> {
    check_level(k)?;
    check_time(t)?;
    let mu = law.params.mu();
    if t.is_infinite() {
        return hitting_probability(k, mu);
    }
    let c = law.params.exit_rate();
    let ln_b = mu.exp_m1().ln();
    let mut acc = CompensatedSum::default();
    acc.add((-c * t).exp() * bell_poly(k, law.params.bell_rate() * t)?.value);
    for j in 0..=k {
        let s = stirling2(k, j)? as f64;
        if s == 0.0 {
            continue;
        }
        acc.add(s * lower_incomplete_gamma(j as f64 + 1.0, c * t)? * (-(j as f64) * ln_b).exp());
    }
    let front = (k as f64 * mu.ln() - ln_factorial(k)).exp();
    Ok(front * acc.value())
}

/// `pi_k = P{H < inf} = (mu^k/k!) sum_{j=1}^k S_2(k,j) j! / (e^mu - 1)^j`.
/// Independent of `lambda`.
pub fn hitting_probability(k: usize, mu: f64) -> Result<f64> {
    check_level(k)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(
            "mu",
            format!("must be positive and finite, got {mu}"),
        ));
    }
    let ln_b = mu.exp_m1().ln();
    let ln_front = k as f64 * mu.ln() - ln_factorial(k);
    let mut acc = CompensatedSum::default();
    for j in 1..=k {
        let s = stirling2(k, j)? as f64;
        acc.add((s.ln() + ln_factorial(j) - j as f64 * ln_b + ln_front).exp());
    }
    Ok(acc.value())
}

/// Avoiding probabilities `g(j; n) = P{Z(n) = j, T > n}` for the boundary
/// `k + t` at integer times `n = 0..=horizon`. Row `n` holds `j = 0..k+n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidingTable {
    k: usize,
    rows: Vec<Vec<f64>>,
    #[serde(skip)]
    law: Option<IteratedLaw>,
}

impl AvoidingTable {
    pub fn build(k: usize, horizon: usize, law: &IteratedLaw) -> Result<Self> {
        check_level(k)?;
        let step: Vec<f64> = (0..k + horizon)
            .map(|j| law.pmf(j, 1.0))
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(horizon + 1);
        let mut first = vec![0.0; k];
        first[0] = 1.0;
        rows.push(first);
        for n in 1..=horizon {
            let prev: &Vec<f64> = &rows[n - 1];
            let width = k + n;
            let row: Vec<f64> = (0..width)
                .map(|j| {
                    // States reachable from row n-1 without touching k + s on the way.
                    let mut acc = CompensatedSum::default();
                    for (i, &g) in prev.iter().enumerate().take(j + 1) {
                        acc.add(g * step[j - i]);
                    }
                    acc.value()
                })
                .collect();
            rows.push(row);
        }
        Ok(Self {
            k,
            rows,
            law: Some(*law),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `g(j; n)`, zero outside the stored range.
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.rows
            .get(n)
            .and_then(|r| r.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// `P{T > n}` as the row sum.
    pub fn survival_at_integer(&self, n: usize) -> f64 {
        let mut acc = CompensatedSum::default();
        for &g in &self.rows[n] {
            acc.add(g);
        }
        acc.value()
    }

    /// `P{T > t}` for `0 <= t < horizon + 1`; between integers the row at
    /// `floor(t)` is convolved with the law of the remaining increment.
    pub fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let n = t.floor() as usize;
        if n > self.horizon() {
            return Err(domain(format!(
                "t = {t} lies beyond the table horizon {}",
                self.horizon()
            )));
        }
        let elapsed = t - n as f64;
        if elapsed == 0.0 {
            return Ok(self.survival_at_integer(n));
        }
        let law = self.law.as_ref().ok_or_else(|| {
            Error::WrongOperation("table was deserialized without its law".into())
        })?;
        let top = self.k + n;
        let inc: Vec<f64> = (0..=top)
            .map(|i| law.pmf(i, elapsed))
            .collect::<Result<_>>()?;
        let row = &self.rows[n];
        let mut acc = CompensatedSum::default();
        for i in 0..=top {
            for m in 0..=i.min(row.len().saturating_sub(1)) {
                acc.add(row[m] * inc[i - m]);
            }
        }
        Ok(acc.value())
    }
}

/// Survival of `T` for the boundary `k + t`.
pub fn survival_linear_increasing(k: usize, t: f64, law: &IteratedLaw) -> Result<f64> {
    check_time(t)?;
    if t.is_infinite() {
        return Err(domain("survival at t = inf needs a limit, not a table"));
    }
    AvoidingTable::build(k, t.floor() as usize, law)?.survival(t)
}

/// Survival, density and defect of `T` for any supported boundary.
pub fn crossing_result(boundary: &Boundary, t: f64, law: &IteratedLaw) -> Result<CrossingResult> {
    match boundary {
        Boundary::Constant { k } => Ok(CrossingResult {
            t,
            survival: survival_nonincreasing(boundary, t, law)?,
            density: Some(crossing_density_constant(*k, t, law)?),
            defect: Some(0.0),
        }),
        Boundary::LinearDecreasing { .. } => Ok(CrossingResult {
            t,
            survival: survival_nonincreasing(boundary, t, law)?,
            density: None,
            defect: Some(0.0),
        }),
        Boundary::General { .. } => Ok(CrossingResult {
            t,
            survival: survival_nonincreasing(boundary, t, law)?,
            density: None,
            defect: None,
        }),
        Boundary::LinearIncreasing { k } => Ok(CrossingResult {
            t,
            survival: survival_linear_increasing(*k, t, law)?,
            density: None,
            defect: None,
        }),
    }
}
