//! Law of the subordinated compound Poisson process `Z(t) = Y[N(t)]`.
//!
//! `Y(t)` is a compound Poisson process with rate `mu` and i.i.d. jumps `X_i`,
//! `N(t)` an independent Poisson process with rate `lambda`. Marginally
//! `Z(t)` is again compound Poisson, and its CDF is a mixture of the n-fold
//! jump convolutions weighted by the iterated Poisson probabilities `p_n(t)`.
//! All n-fold convolutions are closed form (gamma, normal, unit step).

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::exec::Exec;
use crate::iterated::{IteratedLaw, Weights};
use crate::quad;
use crate::special::{
    ln_factorial, ln_poisson_pmf, normal_cdf, normal_pdf, poisson_truncation,
    regularized_lower_gamma, CompensatedSum, SeriesControl,
};

/// Intensities of the subordinator `N(t)` (`lambda`) and of the inner
/// process `M(t)` (`mu`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("must be positive and finite, got {lambda}"),
            ));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid(
                "mu",
                format!("must be positive and finite, got {mu}"),
            ));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Rate at which `Z` leaves its current state, `lambda (1 - e^{-mu})`.
    pub fn exit_rate(&self) -> f64 {
        -self.lambda * (-self.mu).exp_m1()
    }

    /// Argument scale of the Bell polynomials, `lambda e^{-mu}`.
    pub fn bell_rate(&self) -> f64 {
        self.lambda * (-self.mu).exp()
    }
}

/// Law of the jumps `X_i` of the inner compound Poisson process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSpec {
    /// `X_i = 1` almost surely; `Z` is then the iterated Poisson process.
    DegenerateUnit,
    /// Exponential with rate `zeta`.
    Exponential { zeta: f64 },
    /// Normal with mean `eta` and standard deviation `sigma`.
    Normal { eta: f64, sigma: f64 },
}

impl JumpSpec {
    pub fn exponential(zeta: f64) -> Result<Self> {
        let spec = JumpSpec::Exponential { zeta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn normal(eta: f64, sigma: f64) -> Result<Self> {
        let spec = JumpSpec::Normal { eta, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpSpec::DegenerateUnit => Ok(()),
            JumpSpec::Exponential { zeta } => {
                if zeta > 0.0 && zeta.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(
                        "zeta",
                        format!("must be positive and finite, got {zeta}"),
                    ))
                }
            }
            JumpSpec::Normal { eta, sigma } => {
                if !eta.is_finite() {
                    return Err(invalid("eta", format!("must be finite, got {eta}")));
                }
                if sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(
                        "sigma",
                        format!("must be positive and finite, got {sigma}"),
                    ))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            JumpSpec::DegenerateUnit => "degenerate_unit",
            JumpSpec::Exponential { .. } => "exponential",
            JumpSpec::Normal { .. } => "normal",
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, JumpSpec::DegenerateUnit)
    }

    /// Jump mean `xi`.
    pub fn mean(&self) -> f64 {
        match *self {
            JumpSpec::DegenerateUnit => 1.0,
            JumpSpec::Exponential { zeta } => 1.0 / zeta,
            JumpSpec::Normal { eta, .. } => eta,
        }
    }

    /// Jump variance `sigma^2`.
    pub fn variance(&self) -> f64 {
        match *self {
            JumpSpec::DegenerateUnit => 0.0,
            JumpSpec::Exponential { zeta } => 1.0 / (zeta * zeta),
            JumpSpec::Normal { sigma, .. } => sigma * sigma,
        }
    }

    /// Moment generating function `E{e^{s X}}`.
    ///
    /// For exponential jumps the open region `s < zeta` is required; the
    /// boundary `s = zeta` is rejected.
    pub fn mgf(&self, s: f64) -> Result<f64> {
        if s.is_nan() {
            return Err(domain("mgf argument is NaN"));
        }
        match *self {
            JumpSpec::DegenerateUnit => Ok(s.exp()),
            JumpSpec::Exponential { zeta } => {
                if s < zeta {
                    Ok(zeta / (zeta - s))
                } else {
                    Err(domain(format!(
                        "mgf of exponential({zeta}) diverges at s = {s} (needs s < {zeta})"
                    )))
                }
            }
            JumpSpec::Normal { eta, sigma } => Ok((eta * s + 0.5 * sigma * sigma * s * s).exp()),
        }
    }

    /// `F_X^{(n)}(x)`, the CDF of the n-fold sum (right-continuous).
    pub fn convolution_cdf(&self, n: usize, x: f64) -> f64 {
        if n == 0 {
            return if x >= 0.0 { 1.0 } else { 0.0 };
        }
        match *self {
            JumpSpec::DegenerateUnit => {
                if x >= n as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            JumpSpec::Exponential { zeta } => regularized_lower_gamma(n as f64, zeta * x),
            JumpSpec::Normal { eta, sigma } => {
                let nf = n as f64;
                normal_cdf((x - nf * eta) / (sigma * nf.sqrt()))
            }
        }
    }

    /// Left limit `F_X^{(n)}(x-)`.
    pub fn convolution_cdf_left(&self, n: usize, x: f64) -> f64 {
        match (n, self) {
            (0, _) => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            (_, JumpSpec::DegenerateUnit) => {
                if x > n as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.convolution_cdf(n, x),
        }
    }

    /// `f_X^{(n)}(x)` for `n >= 1`.
    pub fn convolution_density(&self, n: usize, x: f64) -> Result<f64> {
        debug_assert!(n >= 1);
        match *self {
            JumpSpec::DegenerateUnit => Err(Error::NoDensity("degenerate_unit")),
            JumpSpec::Exponential { zeta } => {
                if x < 0.0 {
                    Ok(0.0)
                } else if x == 0.0 {
                    Ok(if n == 1 { zeta } else { 0.0 })
                } else {
                    let nf = n as f64;
                    Ok(
                        (nf * zeta.ln() + (nf - 1.0) * x.ln() - zeta * x - ln_factorial(n - 1))
                            .exp(),
                    )
                }
            }
            JumpSpec::Normal { eta, sigma } => {
                let nf = n as f64;
                let scale = sigma * nf.sqrt();
                Ok(normal_pdf((x - nf * eta) / scale) / scale)
            }
        }
    }
}

/// First two moments of `Z(t)` and of the jump law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    /// Variance over mean; `None` when the mean is zero.
    pub dispersion_index: Option<f64>,
    pub xi: f64,
    pub sigma2: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// The process `Z` for a fixed jump law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatedCpp {
    pub params: ModelParams,
    pub jumps: JumpSpec,
    pub ctl: SeriesControl,
}

impl SubordinatedCpp {
    pub fn new(params: ModelParams, jumps: JumpSpec, ctl: SeriesControl) -> Result<Self> {
        jumps.validate()?;
        Ok(Self { params, jumps, ctl })
    }

    pub fn iterated(&self) -> IteratedLaw {
        IteratedLaw::new(self.params, self.ctl)
    }

    /// The marginal law of `Z(t)`, with the mixing weights computed once.
    pub fn at(&self, t: f64) -> Result<Marginal> {
        check_time(t)?;
        Ok(Marginal {
            jumps: self.jumps,
            weights: self.iterated().weights(t)?,
        })
    }
}

/// Marginal law of `Z(t)` at one fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    jumps: JumpSpec,
    weights: Weights,
}

impl Marginal {
    pub fn t(&self) -> f64 {
        self.weights.t()
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Mass of the atom at zero contributed by `N`-paths without effective jumps,
    /// `e^{-lambda t (1 - e^{-mu})}`.
    pub fn atom(&self) -> f64 {
        self.weights.get(0)
    }

    /// `H_Z(z; t)`, right-continuous (the atom is included at `z = 0`).
    pub fn cdf(&self, z: f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for (n, &w) in self.weights.probs().iter().enumerate() {
            acc.add(w * self.jumps.convolution_cdf(n, z));
        }
        acc.value().clamp(0.0, 1.0)
    }

    /// `H_Z(z-; t)`.
    pub fn cdf_left(&self, z: f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for (n, &w) in self.weights.probs().iter().enumerate() {
            acc.add(w * self.jumps.convolution_cdf_left(n, z));
        }
        acc.value().clamp(0.0, 1.0)
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, z: f64) -> Result<f64> {
        if !self.jumps.is_continuous() {
            return Err(Error::NoDensity(self.jumps.name()));
        }
        let mut acc = CompensatedSum::default();
        for (n, &w) in self.weights.probs().iter().enumerate().skip(1) {
            acc.add(w * self.jumps.convolution_density(n, z)?);
        }
        Ok(acc.value().max(0.0))
    }

    /// `1 - atom`, the mass of the absolutely continuous part.
    pub fn continuous_mass(&self) -> f64 {
        1.0 - self.atom()
    }

    /// The continuous-part mass by adaptive quadrature of [`Marginal::density`].
    pub fn integrated_density(&self, abs_tol: f64) -> Result<f64> {
        if !self.jumps.is_continuous() {
            return Err(Error::NoDensity(self.jumps.name()));
        }
        let f = |z: f64| self.density(z).unwrap_or(f64::NAN);
        let right = quad::integrate_semi_infinite(f, 0.0, abs_tol)?.value;
        let left = match self.jumps {
            JumpSpec::Normal { .. } => {
                quad::integrate_semi_infinite(|x| f(-x), 0.0, abs_tol)?.value
            }
            _ => 0.0,
        };
        Ok(left + right)
    }

    pub fn cdf_grid(&self, zs: &[f64], exec: Exec) -> Vec<f64> {
        exec.map(zs, |&z| self.cdf(z))
    }

    pub fn density_grid(&self, zs: &[f64], exec: Exec) -> Result<Vec<f64>> {
        exec.map(zs, |&z| self.density(z)).into_iter().collect()
    }
}

/// Atom of `Z(t)` at zero, `e^{-lambda t (1 - e^{-mu})}`.
pub fn atom_mass(t: f64, params: &ModelParams) -> Result<f64> {
    check_time(t)?;
    Ok((-params.exit_rate() * t).exp())
}

/// CDF of the inner process `Y(t)` as a Poisson(`mu t`) mixture of convolutions.
pub fn cpp_cdf_y(
    y: f64,
    t: f64,
    params: &ModelParams,
    jumps: &JumpSpec,
    ctl: &SeriesControl,
) -> Result<f64> {
    check_time(t)?;
    jumps.validate()?;
    let a = params.mu() * t;
    let last = poisson_truncation(a, ctl)?;
    let mut acc = CompensatedSum::default();
    for m in 0..=last {
        let w = ln_poisson_pmf(m as u64, a)?.exp();
        acc.add(w * jumps.convolution_cdf(m, y));
    }
    Ok(acc.value().clamp(0.0, 1.0))
}

/// CDF of `Z(t)` in Bell-polynomial form.
pub fn cpp_cdf_z(
    z: f64,
    t: f64,
    params: &ModelParams,
    jumps: &JumpSpec,
    ctl: &SeriesControl,
) -> Result<f64> {
    Ok(SubordinatedCpp::new(*params, *jumps, *ctl)?.at(t)?.cdf(z))
}

/// Density of the continuous part of `Z(t)`; discrete jump laws have none.
pub fn cpp_density_z(
    z: f64,
    t: f64,
    params: &ModelParams,
    jumps: &JumpSpec,
    ctl: &SeriesControl,
) -> Result<f64> {
    if !jumps.is_continuous() {
        return Err(Error::NoDensity(jumps.name()));
    }
    SubordinatedCpp::new(*params, *jumps, *ctl)?
        .at(t)?
        .density(z)
}

fn check_zeta(zeta: f64) -> Result<()> {
    JumpSpec::Exponential { zeta }.validate()
}

/// Poisson CDF values `P(m; x)` for `m = 0..len`.
fn poisson_cdf_run(x: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = CompensatedSum::default();
    for m in 0..len {
        acc.add(ln_poisson_pmf(m as u64, x).map(f64::exp).unwrap_or(0.0));
        out.push(acc.value().min(1.0));
    }
    out
}

/// Exponential jumps: `H_Z(z; t) = 1 - sum_{m>=1} p_m(t) P(m-1; zeta z)`.
pub fn exp_jump_cdf(
    z: f64,
    t: f64,
    params: &ModelParams,
    zeta: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    check_zeta(zeta)?;
    check_time(t)?;
    if z < 0.0 {
        return Ok(0.0);
    }
    let weights = IteratedLaw::new(*params, *ctl).weights(t)?;
    Ok(exp_jump_cdf_with(&weights, z, zeta))
}

pub(crate) fn exp_jump_cdf_with(weights: &Weights, z: f64, zeta: f64) -> f64 {
    let probs = weights.probs();
    let cdfs = poisson_cdf_run(zeta * z, probs.len());
    let mut acc = CompensatedSum::default();
    for m in 1..probs.len() {
        acc.add(probs[m] * cdfs[m - 1]);
    }
    (1.0 - acc.value()).clamp(0.0, 1.0)
}

/// Exponential jumps, second form: `H_Z(z; t) = sum_j p(j; zeta z) P_j(t)`.
pub fn exp_jump_cdf_alt(
    z: f64,
    t: f64,
    params: &ModelParams,
    zeta: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    check_zeta(zeta)?;
    check_time(t)?;
    if z < 0.0 {
        return Ok(0.0);
    }
    let weights = IteratedLaw::new(*params, *ctl).weights(t)?;
    let cumulative = weights.cumulative();
    let x = zeta * z;
    let last = poisson_truncation(x, ctl)?;
    let mut acc = CompensatedSum::default();
    for j in 0..=last {
        let pj = ln_poisson_pmf(j as u64, x)?.exp();
        let cdf = cumulative
            .get(j)
            .copied()
            .unwrap_or_else(|| *cumulative.last().expect("weights are nonempty"));
        acc.add(pj * cdf);
    }
    Ok(acc.value().clamp(0.0, 1.0))
}

/// Exponential jumps: `h_Z(z; t) = zeta sum_{m>=1} p_m(t) p(m-1; zeta z)`.
///
/// Zero below the support; at `z = 0` the right limit `zeta p_1(t)`.
pub fn exp_jump_density(
    z: f64,
    t: f64,
    params: &ModelParams,
    zeta: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    check_zeta(zeta)?;
    check_time(t)?;
    if z < 0.0 {
        return Ok(0.0);
    }
    let weights = IteratedLaw::new(*params, *ctl).weights(t)?;
    Ok(exp_jump_density_with(&weights, z, zeta))
}

pub(crate) fn exp_jump_density_with(weights: &Weights, z: f64, zeta: f64) -> f64 {
    let x = zeta * z;
    let mut acc = CompensatedSum::default();
    for (m, &w) in weights.probs().iter().enumerate().skip(1) {
        let p = ln_poisson_pmf(m as u64 - 1, x).map(f64::exp).unwrap_or(0.0);
        acc.add(w * p);
    }
    zeta * acc.value()
}

/// Normal jumps: `H_Z(z; t) = p_0(t) 1{z>=0} + sum_{n>=1} p_n(t) Phi((z - n eta)/(sigma sqrt n))`.
pub fn normal_jump_cdf(
    z: f64,
    t: f64,
    params: &ModelParams,
    eta: f64,
    sigma: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    let jumps = JumpSpec::normal(eta, sigma)?;
    check_time(t)?;
    let weights = IteratedLaw::new(*params, *ctl).weights(t)?;
    let probs = weights.probs();
    let mut acc = CompensatedSum::default();
    if z >= 0.0 {
        acc.add(probs[0]);
    }
    for (n, &w) in probs.iter().enumerate().skip(1) {
        acc.add(w * jumps.convolution_cdf(n, z));
    }
    Ok(acc.value().clamp(0.0, 1.0))
}

/// Normal jumps: density of the continuous part.
pub fn normal_jump_density(
    z: f64,
    t: f64,
    params: &ModelParams,
    eta: f64,
    sigma: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    JumpSpec::normal(eta, sigma)?;
    check_time(t)?;
    let weights = IteratedLaw::new(*params, *ctl).weights(t)?;
    let mut acc = CompensatedSum::default();
    for (n, &w) in weights.probs().iter().enumerate().skip(1) {
        let nf = n as f64;
        acc.add(w / nf.sqrt() * normal_pdf((z - nf * eta) / (sigma * nf.sqrt())));
    }
    Ok(acc.value() / sigma)
}

/// Laplace exponent `Psi(theta) = lambda [1 - e^{-mu (1 - M_X(-theta))}]`,
/// so that `E{e^{-theta Z(t)}} = e^{-t Psi(theta)}`.
pub fn laplace_exponent(theta: f64, params: &ModelParams, jumps: &JumpSpec) -> Result<f64> {
    jumps.validate()?;
    let m = jumps.mgf(-theta)?;
    Ok(-params.lambda() * (-params.mu() * (1.0 - m)).exp_m1())
}

pub fn moments_z(t: f64, params: &ModelParams, jumps: &JumpSpec) -> Result<MomentSummary> {
    check_time(t)?;
    jumps.validate()?;
    let xi = jumps.mean();
    let sigma2 = jumps.variance();
    let rate = params.lambda() * params.mu() * t;
    let mean = rate * xi;
    let variance = rate * (sigma2 + (params.mu() + 1.0) * xi * xi);
    Ok(MomentSummary {
        t,
        mean,
        variance,
        dispersion_index: (mean != 0.0).then(|| variance / mean),
        xi,
        sigma2,
    })
}
