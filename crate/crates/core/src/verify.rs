//! Verification suites: formula cross-checks, figure data and Monte Carlo
//! comparisons. Each check reports the measured discrepancy against its band.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cpp::{
    cpp_cdf_z, exp_jump_cdf, exp_jump_cdf_alt, exp_jump_density, JumpSpec, ModelParams,
    SubordinatedCpp,
};
use crate::crossing::{
    crossing_density_constant, crossing_density_constant_stirling, hitting_cdf,
    hitting_probability, mean_crossing_time_constant, survival_linear_increasing, Boundary,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::iterated::IteratedLaw;
use crate::mc::{self, HitOutcome, SimConfig, Simulator};
use crate::quad;
use crate::special::{bell_poly, bell_poly_recursive, bell_poly_series, SeriesControl};
use crate::stats;

/// One verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    /// Passes when `measured <= tolerance`.
    pub fn within(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.3e} vs tolerance {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    FormulaCrossChecks,
    FigureReproduction,
    AnalyticVsMc,
}

impl Suite {
    pub const ALL: [Suite; 3] = [
        Suite::FormulaCrossChecks,
        Suite::FigureReproduction,
        Suite::AnalyticVsMc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::FormulaCrossChecks => "formula-cross-checks",
            Suite::FigureReproduction => "figure-reproduction",
            Suite::AnalyticVsMc => "analytic-vs-mc",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "suite",
                reason: format!(
                    "unknown suite {s:?}; expected one of formula-cross-checks, figure-reproduction, analytic-vs-mc"
                ),
            })
    }
}

/// Settings for the Monte Carlo suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub seed: u64,
    pub replicates: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            seed: 42,
            replicates: 100_000,
        }
    }
}

pub fn run_suite(suite: Suite, mc: McSettings, exec: Exec) -> Result<Vec<CheckResult>> {
    match suite {
        Suite::FormulaCrossChecks => formula_cross_checks(),
        Suite::FigureReproduction => figure_reproduction(),
        Suite::AnalyticVsMc => analytic_vs_mc(mc, exec),
    }
}

fn law(lambda: f64, mu: f64) -> Result<IteratedLaw> {
    Ok(IteratedLaw::new(
        ModelParams::new(lambda, mu)?,
        SeriesControl::default(),
    ))
}

pub fn formula_cross_checks() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let ctl = SeriesControl::default();

    let mut pmf_gap: f64 = 0.0;
    let mut cdf_gap: f64 = 0.0;
    let mut mass_gap: f64 = 0.0;
    for lambda in [1.0, 2.0, 4.0] {
        for mu in [0.5, 1.0, 3.0] {
            let l = law(lambda, mu)?;
            for t in [0.5, 1.0, 2.0] {
                for n in 0..40 {
                    pmf_gap = pmf_gap.max((l.pmf_recursive(n, t)? - l.pmf(n, t)?).abs());
                }
                for n in 0..=20 {
                    cdf_gap = cdf_gap.max((l.cdf_closed_form(n, t)? - l.cdf(n, t)?).abs());
                }
                mass_gap = mass_gap.max((l.weights(t)?.probs().iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    out.push(CheckResult::within("pmf_recursive vs pmf", pmf_gap, 1e-10));
    out.push(CheckResult::within(
        "cdf_closed_form vs cdf",
        cdf_gap,
        1e-10,
    ));
    out.push(CheckResult::within("pmf normalisation", mass_gap, 1e-10));

    let mut bell_gap: f64 = 0.0;
    for n in 0..=20 {
        for x in [0.1, 1.0, 10.0, 50.0] {
            let a = bell_poly(n, x)?.value;
            let b = bell_poly_series(n, x, &ctl)?;
            let c = bell_poly_recursive(n, x)?;
            bell_gap = bell_gap.max(((a - b) / a).abs()).max(((a - c) / a).abs());
        }
    }
    out.push(CheckResult::within("Bell polynomial forms", bell_gap, 1e-9));

    let mut exp_gap: f64 = 0.0;
    for (lambda, mu, zeta) in [(1.0, 1.0, 1.0), (2.0, 0.5, 2.0), (0.5, 2.0, 0.7)] {
        let params = ModelParams::new(lambda, mu)?;
        let jumps = JumpSpec::exponential(zeta)?;
        for t in [0.5, 1.0, 3.0] {
            for z in [0.0, 0.3, 1.0, 4.0] {
                let a = exp_jump_cdf(z, t, &params, zeta, &ctl)?;
                let b = exp_jump_cdf_alt(z, t, &params, zeta, &ctl)?;
                let c = cpp_cdf_z(z, t, &params, &jumps, &ctl)?;
                exp_gap = exp_gap.max((a - b).abs()).max((a - c).abs());
            }
        }
    }
    out.push(CheckResult::within(
        "exponential-jump CDF forms",
        exp_gap,
        1e-10,
    ));

    let mut unit_gap: f64 = 0.0;
    let params = ModelParams::new(2.0, 1.0)?;
    let l = IteratedLaw::new(params, ctl);
    for n in 0..=10 {
        let z = cpp_cdf_z(
            n as f64 + 0.5,
            1.5,
            &params,
            &JumpSpec::DegenerateUnit,
            &ctl,
        )?;
        unit_gap = unit_gap.max((z - l.cdf(n, 1.5)?).abs());
    }
    out.push(CheckResult::within(
        "unit-jump CDF vs iterated CDF",
        unit_gap,
        1e-12,
    ));

    let mut psi_gap: f64 = 0.0;
    for k in 1..=6 {
        for t in [0.2, 1.0, 4.0] {
            psi_gap = psi_gap.max(
                (crossing_density_constant(k, t, &l)?
                    - crossing_density_constant_stirling(k, t, &l)?)
                .abs(),
            );
        }
    }
    out.push(CheckResult::within(
        "crossing density forms",
        psi_gap,
        1e-12,
    ));

    let mut mean_gap: f64 = 0.0;
    for k in 1..=4 {
        let q = quad::integrate_semi_infinite(|t| l.cdf(k - 1, t).unwrap_or(f64::NAN), 0.0, 1e-12)?;
        let m = mean_crossing_time_constant(k, &l)?;
        mean_gap = mean_gap.max(((m - q.value) / q.value).abs());
    }
    out.push(CheckResult::within(
        "mean crossing time vs quadrature",
        mean_gap,
        1e-8,
    ));

    let mut hit_gap: f64 = 0.0;
    for mu in [0.5, 1.0, 2.0] {
        let l = law(1.0, mu)?;
        for k in 1..=4 {
            let far = hitting_cdf(k, 1e4, &l)?;
            hit_gap = hit_gap.max((far - hitting_probability(k, mu)?).abs());
        }
    }
    out.push(CheckResult::within(
        "hitting CDF limit vs hitting probability",
        hit_gap,
        1e-8,
    ));
    Ok(out)
}

/// Continuous-part masses of `Z(t)` for `mu = zeta = 1`, exponential jumps,
/// `t = 1..5`, rounded to four decimals.
pub const FIGURE_MASSES: [(f64, [f64; 5]); 2] = [
    (1.0, [0.4685, 0.7175, 0.8499, 0.9202, 0.9576]),
    (2.0, [0.7175, 0.9202, 0.9775, 0.9936, 0.9982]),
];

pub fn figure_reproduction() -> Result<Vec<CheckResult>> {
    let ctl = SeriesControl::default();
    let mut out = Vec::new();
    for (lambda, masses) in FIGURE_MASSES {
        let params = ModelParams::new(lambda, 1.0)?;
        let cpp = SubordinatedCpp::new(params, JumpSpec::exponential(1.0)?, ctl)?;
        for (i, &expected) in masses.iter().enumerate() {
            let t = (i + 1) as f64;
            let marginal = cpp.at(t)?;
            let closed = 1.0 - marginal.atom();
            out.push(CheckResult::within(
                format!("continuous mass lambda={lambda} t={t}"),
                (closed - expected).abs(),
                5e-5,
            ));
            let q = quad::integrate_semi_infinite(
                |z| exp_jump_density(z, t, &params, 1.0, &ctl).unwrap_or(f64::NAN),
                0.0,
                1e-10,
            )?;
            out.push(CheckResult::within(
                format!("integrated density lambda={lambda} t={t}"),
                (q.value - expected).abs(),
                1e-4,
            ));
        }
    }
    Ok(out)
}

/// Kolmogorov distance of simulated `Z(t)` against the analytic CDF, in the
/// band `coefficient / sqrt(n)`, and the frequency of `Z(t) = 0` against the atom.
pub fn marginal_vs_mc(
    name: &str,
    sim: &Simulator,
    t: f64,
    mc: McSettings,
    exec: Exec,
    coefficient: f64,
) -> Result<Vec<CheckResult>> {
    let config = SimConfig::new(mc.seed, mc.replicates, t)?;
    let cpp = SubordinatedCpp::new(*sim.params(), *sim.jumps(), SeriesControl::default())?;
    let marginal = cpp.at(t)?;
    let mut samples = mc::sample_z_many(sim, t, &config, exec);
    let zeros = samples.iter().filter(|&&z| z == 0.0).count();
    let d = stats::ks_statistic(&mut samples, |z| marginal.cdf(z), |z| marginal.cdf_left(z));
    let n = mc.replicates;
    let atom = marginal.atom();
    let freq = zeros as f64 / n as f64;
    Ok(vec![
        CheckResult::within(
            format!("{name}: Kolmogorov distance"),
            d,
            coefficient / (n as f64).sqrt(),
        ),
        CheckResult::within(
            format!("{name}: atom frequency (standard errors)"),
            (freq - atom).abs() / stats::proportion_se(atom, n),
            3.0,
        ),
    ])
}

pub fn analytic_vs_mc(mc: McSettings, exec: Exec) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let n = mc.replicates;

    // Constant boundary k = 1: T is exponential with the exit rate.
    let params = ModelParams::new(2.0, 1.0)?;
    let sim = Simulator::new(params, JumpSpec::DegenerateUnit)?;
    let config = SimConfig::new(mc.seed, n, mc::default_horizon(&params))?;
    let boundary = Boundary::constant(1)?;
    let times = mc::crossing_times(&sim, &boundary, &config, exec);
    let censored = times.iter().filter(|t| t.is_none()).count();
    let mut crossed: Vec<f64> = times
        .into_iter()
        .map(|t| t.unwrap_or(f64::INFINITY))
        .collect();
    let c = params.exit_rate();
    let d = stats::ks_statistic(
        &mut crossed,
        |t| 1.0 - (-c * t).exp(),
        |t| 1.0 - (-c * t).exp(),
    );
    out.push(CheckResult::within(
        "constant boundary k=1: Kolmogorov distance",
        d,
        stats::ks_critical_value(0.05, n)?,
    ));
    out.push(CheckResult::within(
        "constant boundary k=1: censored paths",
        censored as f64,
        0.0,
    ));

    // Chi-square fit of the iterated pmf.
    for (lambda, mu, t) in [(4.0, 3.0, 1.0), (4.0, 4.0, 1.0), (2.0, 1.0, 2.0)] {
        let params = ModelParams::new(lambda, mu)?;
        let sim = Simulator::new(params, JumpSpec::DegenerateUnit)?;
        let config = SimConfig::new(mc.seed, n, t)?;
        let samples: Vec<u64> = mc::sample_z_many(&sim, t, &config, exec)
            .into_iter()
            .map(|z| z as u64)
            .collect();
        let weights = IteratedLaw::new(params, SeriesControl::default()).weights(t)?;
        let test = stats::chi_square_gof(&samples, weights.probs(), 5.0)?;
        out.push(CheckResult {
            name: format!("iterated pmf chi-square lambda={lambda} mu={mu} t={t} (1 - p-value)"),
            measured: 1.0 - test.p_value,
            tolerance: 0.99,
            passed: test.p_value >= 0.01,
        });
    }

    // First-hitting frequency of state 1.
    for lambda in [1.0, 2.0] {
        let params = ModelParams::new(lambda, 1.0)?;
        let sim = Simulator::new(params, JumpSpec::DegenerateUnit)?;
        let config = SimConfig::new(mc.seed, n, mc::default_horizon(&params))?;
        let outcomes = mc::hitting_outcomes(&sim, 1, &config, exec)?;
        let hits = outcomes
            .iter()
            .filter(|o| matches!(o, HitOutcome::Hit(_)))
            .count();
        let pi = hitting_probability(1, 1.0)?;
        out.push(CheckResult::within(
            format!("hitting frequency k=1 lambda={lambda} (standard errors)"),
            (hits as f64 / n as f64 - pi).abs() / stats::proportion_se(pi, n),
            3.0,
        ));
    }

    // Linear increasing boundary.
    let params = ModelParams::new(2.0, 1.0)?;
    let l = IteratedLaw::new(params, SeriesControl::default());
    let sim = Simulator::new(params, JumpSpec::DegenerateUnit)?;
    let config = SimConfig::new(mc.seed, n, 2.5)?;
    let boundary = Boundary::linear_increasing(2)?;
    let survived = mc::crossing_times(&sim, &boundary, &config, exec)
        .iter()
        .filter(|t| t.is_none())
        .count();
    let s = survival_linear_increasing(2, 2.5, &l)?;
    out.push(CheckResult::within(
        "linear increasing boundary k=2 t=2.5 (standard errors)",
        (survived as f64 / n as f64 - s).abs() / stats::proportion_se(s, n),
        3.0,
    ));

    let p = ModelParams::new(1.0, 1.0)?;
    out.extend(marginal_vs_mc(
        "exponential jumps",
        &Simulator::new(p, JumpSpec::exponential(1.0)?)?,
        1.0,
        mc,
        exec,
        1.63,
    )?);
    out.extend(marginal_vs_mc(
        "normal jumps",
        &Simulator::new(p, JumpSpec::normal(0.5, 1.0)?)?,
        1.0,
        mc,
        exec,
        1.63,
    )?);
    Ok(out)
}
