//! The iterated Poisson process `Z(t) = M[N(t)]`: unit jumps, so `Z` lives on
//! the nonnegative integers and
//!
//! `p_n(t) = exp(-lambda t (1 - e^{-mu})) mu^n / n! B_n(lambda t e^{-mu})`.
//!
//! These probabilities double as the mixing weights of every subordinated
//! compound Poisson law, so [`IteratedLaw::weights`] is the workhorse of the
//! crate. Truncation uses a Chernoff bound on the upper tail of `Z(t)`.

use serde::{Deserialize, Serialize};

use crate::cpp::{laplace_exponent, JumpSpec, ModelParams};
use crate::error::{domain, invalid, Error, Result};
use crate::special::{
    ln_bell, ln_factorial, stirling2, CompensatedSum, SeriesControl, LN_BELL_MAX, STIRLING_MAX,
};

/// Truncated vector of `p_n(t)`, `n = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    t: f64,
    probs: Vec<f64>,
}

impl Weights {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `p_n(t)`, zero past the truncation point.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Running sums `P_n(t)`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = CompensatedSum::default();
        self.probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value().min(1.0)
            })
            .collect()
    }
}

/// Iterated Poisson process with given intensities and truncation policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IteratedLaw {
    pub params: ModelParams,
    pub ctl: SeriesControl,
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

impl IteratedLaw {
    pub fn new(params: ModelParams, ctl: SeriesControl) -> Self {
        Self { params, ctl }
    }

    fn lambda(&self) -> f64 {
        self.params.lambda()
    }

    fn mu(&self) -> f64 {
        self.params.mu()
    }

    /// `ln p_n(t)`.
    pub fn ln_pmf(&self, n: usize, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(if n == 0 { 0.0 } else { f64::NEG_INFINITY });
        }
        let x = self.params.bell_rate() * t;
        Ok(
            -self.params.exit_rate() * t + n as f64 * self.mu().ln() - ln_factorial(n)
                + ln_bell(n, x)?,
        )
    }

    /// `p_n(t) = P{Z(t) = n}`; the law at `t = 0` is a point mass at zero.
    pub fn pmf(&self, n: usize, t: f64) -> Result<f64> {
        Ok(self.ln_pmf(n, t)?.exp())
    }

    /// `p_n(t)` from the recurrence
    /// `p_n = (lambda e^{-mu} t / n) sum_{k=1}^n mu^{n-k+1} / (n-k)! p_{k-1}`.
    ///
    /// Runs on `p_k / p_0` and rescales at the end, so a tiny `p_0` does not
    /// zero out the whole chain.
    pub fn pmf_recursive(&self, n: usize, t: f64) -> Result<f64> {
        check_time(t)?;
        if n == 0 {
            return self.pmf(0, t);
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let scale = self.params.bell_rate() * t;
        let ln_mu = self.mu().ln();
        let mut ratios = vec![1.0f64];
        for m in 1..=n {
            let mut acc = CompensatedSum::default();
            for k in 1..=m {
                let coef = ((m - k + 1) as f64 * ln_mu - ln_factorial(m - k)).exp();
                acc.add(coef * ratios[k - 1]);
            }
            ratios.push(scale * acc.value() / m as f64);
        }
        Ok((ratios[n].ln() - self.params.exit_rate() * t).exp())
    }

    /// Chernoff bound on `P{Z(t) >= m}`.
    pub fn tail_bound(&self, m: usize, t: f64) -> f64 {
        let rate = self.lambda() * self.mu() * t;
        let m = m as f64;
        if t <= 0.0 {
            return if m > 0.0 { 0.0 } else { 1.0 };
        }
        if m <= rate {
            return 1.0;
        }
        // Saddle point: u = e^theta solves ln u + mu (u - 1) = ln(m / rate).
        let target = (m / rate).ln();
        let mu = self.mu();
        let mut u = 1.0f64;
        for _ in 0..200 {
            let g = u.ln() + mu * (u - 1.0) - target;
            let step = g / (1.0 / u + mu);
            u -= step;
            if step.abs() <= 1e-15 * u {
                break;
            }
        }
        let cumulant = self.lambda() * t * (mu * (u - 1.0)).exp_m1();
        (cumulant - u.ln() * m).exp().min(1.0)
    }

    /// Smallest `N` with `P{Z(t) > N}` below the tolerance.
    pub fn truncation_index(&self, t: f64) -> Result<usize> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(0);
        }
        let mean = self.lambda() * self.mu() * t;
        let mut m = mean.floor() as usize + 1;
        while self.tail_bound(m, t) > self.ctl.tolerance {
            m += 1;
            if m > LN_BELL_MAX + 1 {
                break;
            }
        }
        let cap = self.ctl.max_terms.min(LN_BELL_MAX + 1);
        if m > cap {
            return Err(Error::TruncationCap { needed: m, cap });
        }
        Ok(m - 1)
    }

    /// `p_0(t), ..., p_N(t)` with `N` from [`Self::truncation_index`].
    pub fn weights(&self, t: f64) -> Result<Weights> {
        let last = self.truncation_index(t)?;
        let probs = (0..=last)
            .map(|n| self.pmf(n, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Weights { t, probs })
    }

    /// `P_n(t) = sum_{j<=n} p_j(t)`. Terms past the truncation point are
    /// dropped (their total is below the tolerance).
    pub fn cdf(&self, n: usize, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        // A finite sum needs no truncation; the tail bound only caps huge `n`.
        let last = if n <= LN_BELL_MAX {
            n
        } else {
            n.min(self.truncation_index(t)?)
        };
        let mut acc = CompensatedSum::default();
        for j in 0..=last {
            acc.add(self.pmf(j, t)?);
        }
        Ok(acc.value().min(1.0))
    }

    /// `P_n(t)` from the Stirling-number expansion
    /// `e^{-ct} [1 + 1{n>=1} sum_{k=1}^n (lambda e^{-mu} t)^k C(k; n)]`,
    /// `C(k; n) = sum_{j=k}^n S_2(j, k) mu^j / j!`.
    ///
    /// The power sum starts at `k = 1`; starting at `k = 0` would count the
    /// constant term twice and give `P_n(0) = 2`.
    pub fn cdf_closed_form(&self, n: usize, t: f64) -> Result<f64> {
        check_time(t)?;
        if n > STIRLING_MAX {
            return Err(Error::UnsupportedDegree {
                n,
                max: STIRLING_MAX,
            });
        }
        let x = self.params.bell_rate() * t;
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        let mut power = 1.0;
        for k in 1..=n {
            power *= x;
            acc.add(power * stirling_partial(k, n, self.mu())?);
        }
        Ok((-self.params.exit_rate() * t).exp() * acc.value())
    }

    /// `P{Z(s) = k | Z(t) = n}` for `0 < s < t`.
    pub fn conditional_pmf(&self, k: usize, s: f64, t: f64, n: usize) -> Result<f64> {
        if k > n {
            return Err(domain(format!("state {k} exceeds conditioning value {n}")));
        }
        if !(s > 0.0 && s < t && t.is_finite()) {
            return Err(domain(format!("need 0 < s < t, got s = {s}, t = {t}")));
        }
        let a = self.params.bell_rate();
        let ln_binom = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
        let ln_value =
            ln_binom + ln_bell(k, a * s)? + ln_bell(n - k, a * (t - s))? - ln_bell(n, a * t)?;
        Ok(ln_value.exp())
    }

    /// Variance-to-mean ratio `1 + mu`, the same at every `t > 0`.
    pub fn dispersion_index(&self) -> f64 {
        1.0 + self.mu()
    }

    /// `E{S_n} = (1/lambda) (mu^n / n!) sum_{k>=0} k^n e^{-mu k}` with `0^0 = 1`.
    pub fn mean_sojourn(&self, n: usize) -> Result<f64> {
        let mu = self.mu();
        let nf = n as f64;
        let mut ln_sum = if n == 0 { 0.0 } else { f64::NEG_INFINITY };
        let peak = nf / mu;
        for k in 1..=self.ctl.max_terms {
            let kf = k as f64;
            let ln_term = nf * kf.ln() - mu * kf;
            ln_sum = log_add(ln_sum, ln_term);
            if kf >= peak {
                // Term ratios ((k+1)/k)^n e^{-mu} decrease, so the tail is geometric.
                let ratio = ((kf + 1.0) / kf).powf(nf) * (-mu).exp();
                if ratio < 1.0 {
                    let ln_tail = ln_term + ratio.ln() - (1.0 - ratio).ln();
                    if ln_tail - ln_sum <= self.ctl.tolerance.ln() {
                        return Ok(
                            (ln_sum + nf * mu.ln() - ln_factorial(n) - self.lambda().ln()).exp(),
                        );
                    }
                }
            }
        }
        Err(Error::TruncationCap {
            needed: self.ctl.max_terms + 1,
            cap: self.ctl.max_terms,
        })
    }

    /// `Psi(theta) = lambda [1 - exp(-mu (1 - e^{-theta}))]`.
    pub fn levy_exponent(&self, theta: f64) -> Result<f64> {
        laplace_exponent(theta, &self.params, &JumpSpec::DegenerateUnit)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `C(i; m) = sum_{j=i}^m S_2(j, i) mu^j / j!`.
pub(crate) fn stirling_partial(i: usize, m: usize, mu: f64) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for j in i..=m {
        let s = stirling2(j, i)? as f64;
        acc.add(s * (j as f64 * mu.ln() - ln_factorial(j)).exp());
    }
    Ok(acc.value())
}

/// Returns `(Psi(theta) at lambda = xi / mu, xi (1 - e^{-theta}))`; the gap
/// closes as `mu -> 0` with `lambda mu = xi` fixed.
pub fn levy_exponent_limit_check(theta: f64, xi: f64, mu: f64) -> Result<(f64, f64)> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(invalid("xi", format!("must be positive, got {xi}")));
    }
    let params = ModelParams::new(xi / mu, mu)?;
    let psi = laplace_exponent(theta, &params, &JumpSpec::DegenerateUnit)?;
    Ok((psi, -xi * (-theta).exp_m1()))
}
