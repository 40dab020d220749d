//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use poisub::cpp::JumpSpec;
use poisub::crossing::{
    crossing_density_constant, hitting_cdf, hitting_density, hitting_probability,
    mean_crossing_time_constant, survival_nonincreasing, AvoidingTable, Boundary,
};
use poisub::iterated::levy_exponent_limit_check;
use poisub::mc::{self, HitOutcome, SimConfig, Simulator};
use poisub::special::{bell_poly, bell_poly_recursive, bell_poly_series};
use poisub::verify::{self, CheckResult, McSettings};
use poisub::{quad, stats, Exec, IteratedLaw, ModelParams, SeriesControl};

type Checks = Vec<CheckResult>;

fn law(lambda: f64, mu: f64) -> IteratedLaw {
    IteratedLaw::new(
        ModelParams::new(lambda, mu).unwrap(),
        SeriesControl::default(),
    )
}

fn max_check(name: &str, values: impl IntoIterator<Item = f64>, tolerance: f64) -> CheckResult {
    let worst = values
        .into_iter()
        .fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) });
    CheckResult::within(
        name,
        if worst.is_nan() { f64::INFINITY } else { worst },
        tolerance,
    )
}

fn figure_masses() -> Checks {
    verify::figure_reproduction().unwrap()
}

fn bell_forms() -> Checks {
    let ctl = SeriesControl::default();
    let mut series = Vec::new();
    let mut recursion = Vec::new();
    for n in 0..=20 {
        for x in [0.1, 1.0, 10.0, 50.0] {
            let stirling = bell_poly(n, x).unwrap().value;
            series.push(((bell_poly_series(n, x, &ctl).unwrap() - stirling) / stirling).abs());
            recursion.push(((bell_poly_recursive(n, x).unwrap() - stirling) / stirling).abs());
        }
    }
    vec![
        max_check(
            "Stirling sum vs Poisson moment series (relative)",
            series,
            1e-9,
        ),
        max_check(
            "Stirling sum vs coefficient recursion (relative)",
            recursion,
            1e-9,
        ),
    ]
}

fn iterated_identities() -> Checks {
    let (mut mass, mut recursive, mut semigroup, mut mean, mut var) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for lambda in [1.0, 2.0, 4.0] {
        for mu in [0.5, 1.0, 3.0] {
            let l = law(lambda, mu);
            for t in [0.5, 1.0, 2.0] {
                let w = l.weights(t).unwrap();
                mass.push((w.probs().iter().sum::<f64>() - 1.0).abs());
                for n in 0..w.len() {
                    recursive.push((l.pmf_recursive(n, t).unwrap() - w.get(n)).abs());
                }
                let (s, r) = (t / 3.0, t - t / 3.0);
                let (ws, wr) = (l.weights(s).unwrap(), l.weights(r).unwrap());
                for n in 0..w.len() {
                    let conv: f64 = (0..=n).map(|j| ws.get(j) * wr.get(n - j)).sum();
                    semigroup.push((conv - w.get(n)).abs());
                }
                let m1: f64 = w
                    .probs()
                    .iter()
                    .enumerate()
                    .map(|(n, p)| n as f64 * p)
                    .sum();
                let m2: f64 = w
                    .probs()
                    .iter()
                    .enumerate()
                    .map(|(n, p)| (n * n) as f64 * p)
                    .sum();
                let want_mean = lambda * mu * t;
                let want_var = lambda * mu * (1.0 + mu) * t;
                mean.push(((m1 - want_mean) / want_mean).abs());
                var.push(((m2 - m1 * m1 - want_var) / want_var).abs());
            }
        }
    }
    vec![
        max_check("sum of p_n(t) equals 1", mass, 1e-10),
        max_check("ratio recursion vs Bell form", recursive, 1e-10),
        max_check("semigroup convolution", semigroup, 1e-10),
        max_check("mean lambda mu t (relative)", mean, 1e-6),
        max_check("variance lambda mu (1 + mu) t (relative)", var, 1e-6),
    ]
}

fn constant_boundary() -> Checks {
    let mut out = Vec::new();
    let (lambda, mu) = (2.0, 1.0);
    let params = ModelParams::new(lambda, mu).unwrap();
    let l = law(lambda, mu);
    let c = params.exit_rate();

    // k = 1: the analytic law is exponential with the exit rate.
    let b1 = Boundary::constant(1).unwrap();
    let expo_gap = [0.1, 0.5, 1.0, 3.0, 8.0].iter().map(|&t| {
        let s = survival_nonincreasing(&b1, t, &l).unwrap();
        let d = crossing_density_constant(1, t, &l).unwrap();
        (s - (-c * t).exp())
            .abs()
            .max((d - c * (-c * t).exp()).abs())
    });
    out.push(max_check(
        "k=1 survival and density are exponential",
        expo_gap,
        1e-14,
    ));

    let n = 100_000;
    let sim = Simulator::new(params, JumpSpec::DegenerateUnit).unwrap();
    let config = SimConfig::new(20_240_601, n, mc::default_horizon(&params)).unwrap();
    let mut times: Vec<f64> = mc::crossing_times(&sim, &b1, &config, Exec::default())
        .into_iter()
        .map(|t| t.unwrap_or(f64::INFINITY))
        .collect();
    let d = stats::ks_statistic(
        &mut times,
        |t| 1.0 - (-c * t).exp(),
        |t| 1.0 - (-c * t).exp(),
    );
    out.push(CheckResult::within(
        "k=1 Monte Carlo Kolmogorov distance (5% level)",
        d,
        stats::ks_critical_value(0.05, n).unwrap(),
    ));

    let (mut mass, mut fd) = (Vec::new(), Vec::new());
    for k in 2..=4 {
        let q = quad::integrate_semi_infinite(
            |t| crossing_density_constant(k, t, &l).unwrap(),
            0.0,
            1e-10,
        )
        .unwrap();
        mass.push((q.value - 1.0).abs());
        for t in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let h = 1e-5;
            let slope = -(l.cdf(k - 1, t + h).unwrap() - l.cdf(k - 1, t - h).unwrap()) / (2.0 * h);
            fd.push((crossing_density_constant(k, t, &l).unwrap() - slope).abs());
        }
    }
    out.push(max_check("k=2..4 density integrates to 1", mass, 1e-6));
    out.push(max_check("k=2..4 density vs finite differences", fd, 1e-6));

    let mut mean = Vec::new();
    for (lambda, mu) in [(2.0, 1.0), (1.0, 0.5), (1.0, 2.0)] {
        let l = law(lambda, mu);
        for k in 1..=4 {
            let q =
                quad::integrate_semi_infinite(|t| l.cdf(k - 1, t).unwrap(), 0.0, 1e-13).unwrap();
            let m = mean_crossing_time_constant(k, &l).unwrap();
            mean.push(((m - q.value) / q.value).abs());
        }
    }
    out.push(max_check(
        "E(T) closed form vs integrated survival (relative)",
        mean,
        1e-8,
    ));
    out
}

fn hitting() -> Checks {
    let mut out = Vec::new();
    let (mut limit, mut integral) = (Vec::new(), Vec::new());
    for mu in [0.5, 1.0, 2.0] {
        for lambda in [1.0, 2.0] {
            let l = law(lambda, mu);
            for k in 1..=4 {
                let pi = hitting_probability(k, mu).unwrap();
                limit.push((hitting_cdf(k, f64::INFINITY, &l).unwrap() - pi).abs());
                limit.push((hitting_cdf(k, 2e3, &l).unwrap() - pi).abs());
                let q = quad::integrate_semi_infinite(
                    |t| hitting_density(k, t, &l).unwrap(),
                    0.0,
                    1e-12,
                )
                .unwrap();
                integral.push((q.value - pi).abs());
            }
        }
    }
    out.push(max_check("F_H at infinity equals pi_k", limit, 1e-8));
    out.push(max_check("integral of h equals pi_k", integral, 1e-8));

    let n = 1_000_000;
    let mu = 1.0;
    for k in [1, 2] {
        let pi = hitting_probability(k, mu).unwrap();
        let mut hits = Vec::new();
        for (i, lambda) in [1.0, 2.0].into_iter().enumerate() {
            let params = ModelParams::new(lambda, mu).unwrap();
            let sim = Simulator::new(params, JumpSpec::DegenerateUnit).unwrap();
            let config = SimConfig::new(
                77 + i as u64 + 10 * k as u64,
                n,
                mc::default_horizon(&params),
            )
            .unwrap();
            let outcomes = mc::hitting_outcomes(&sim, k, &config, Exec::default()).unwrap();
            let h = outcomes
                .iter()
                .filter(|o| matches!(o, HitOutcome::Hit(_)))
                .count();
            let censored = outcomes
                .iter()
                .filter(|o| matches!(o, HitOutcome::Censored))
                .count();
            out.push(CheckResult::within(
                format!("k={k} lambda={lambda} hit frequency vs pi_k (standard errors)"),
                (h as f64 / n as f64 - pi).abs() / stats::proportion_se(pi, n),
                3.0,
            ));
            out.push(CheckResult::within(
                format!("k={k} lambda={lambda} censored paths"),
                censored as f64,
                0.0,
            ));
            hits.push(h);
        }
        out.push(CheckResult::within(
            format!("k={k} hit frequencies for lambda=1 and lambda=2 (|z|)"),
            stats::two_proportion_z(hits[0], n, hits[1], n).abs(),
            3.0,
        ));
    }
    out
}

fn linear_increasing() -> Checks {
    let mut out = Vec::new();
    let (lambda, mu) = (2.0, 1.0);
    let params = ModelParams::new(lambda, mu).unwrap();
    let l = law(lambda, mu);
    let (mut dominance, mut rows, mut continuity) = (Vec::new(), Vec::new(), Vec::new());
    let mut tables = Vec::new();
    for k in 1..=4 {
        let table = AvoidingTable::build(k, 8, &l).unwrap();
        for n in 0..=8 {
            for (j, &g) in table.row(n).iter().enumerate() {
                // Equality holds exactly for j <= k, so compare up to rounding.
                let p = l.pmf(j, n as f64).unwrap();
                dominance.push(((g - p) / p).max(0.0));
            }
            let sum: f64 = table.row(n).iter().sum();
            rows.push((table.survival(n as f64).unwrap() - sum).abs());
            continuity.push(
                (table.survival(n as f64 + 1e-13).unwrap() - table.survival(n as f64).unwrap())
                    .abs(),
            );
        }
        tables.push(table);
    }
    out.push(max_check(
        "g(j; n) <= p_j(n) (relative excess)",
        dominance,
        1e-14,
    ));
    out.push(max_check(
        "survival at integers equals row sums",
        rows,
        1e-15,
    ));
    out.push(max_check(
        "right-limit continuity at integers",
        continuity,
        1e-12,
    ));

    let n = 100_000;
    let sim = Simulator::new(params, JumpSpec::DegenerateUnit).unwrap();
    for (k, table) in (1..=4).zip(&tables) {
        let boundary = Boundary::linear_increasing(k).unwrap();
        let config = SimConfig::new(900 + k as u64, n, 4.0).unwrap();
        let times = mc::crossing_times(&sim, &boundary, &config, Exec::default());
        for t in [1.0, 2.5, 4.0] {
            let alive = times.iter().filter(|x| x.is_none_or(|x| x > t)).count();
            let s = table.survival(t).unwrap();
            out.push(CheckResult::within(
                format!("k={k} t={t} survival frequency (standard errors)"),
                (alive as f64 / n as f64 - s).abs() / stats::proportion_se(s, n),
                3.0,
            ));
        }
    }
    out
}

fn continuous_jumps() -> Checks {
    let mc = McSettings {
        seed: 31_415,
        replicates: 1_000_000,
    };
    let params = ModelParams::new(1.0, 1.0).unwrap();
    let exp = Simulator::new(params, JumpSpec::exponential(1.0).unwrap()).unwrap();
    let normal = Simulator::new(params, JumpSpec::normal(0.5, 1.0).unwrap()).unwrap();
    let mut out =
        verify::marginal_vs_mc("exponential jumps", &exp, 1.0, mc, Exec::default(), 1.63).unwrap();
    out.extend(
        verify::marginal_vs_mc(
            "normal jumps",
            &normal,
            1.0,
            McSettings { seed: 27_182, ..mc },
            Exec::default(),
            1.63,
        )
        .unwrap(),
    );
    out
}

fn limits() -> Checks {
    let mut out = Vec::new();
    let xi = 1.0;
    let mus = [1e-1, 1e-2, 1e-3];
    for theta in [0.5, 1.0] {
        let err = |mu: f64| {
            let (psi, limit) = levy_exponent_limit_check(theta, xi, mu).unwrap();
            (psi - limit).abs()
        };
        let errors: Vec<f64> = mus.iter().map(|&m| err(m)).collect();
        for i in 0..2 {
            // Each step down the grid must at least halve the error...
            out.push(CheckResult::within(
                format!("theta={theta} error ratio e({})/e({})", mus[i + 1], mus[i]),
                errors[i + 1] / errors[i],
                0.5,
            ));
            // ...at first order.
            let order = (errors[i] / errors[i + 1]).ln() / (mus[i] / mus[i + 1]).ln();
            out.push(CheckResult::within(
                format!(
                    "theta={theta} observed order between mu={} and mu={} (|order - 1|)",
                    mus[i],
                    mus[i + 1]
                ),
                (order - 1.0).abs(),
                0.05,
            ));
        }
    }

    let l = law(1.0, 1.0);
    let (t, s, n) = (1e4, 3e3, 10);
    let tv: f64 = 0.5
        * (0..=n)
            .map(|k| {
                let binom = binomial(n, k) * 0.3f64.powi(k as i32) * 0.7f64.powi((n - k) as i32);
                (l.conditional_pmf(k, s, t, n).unwrap() - binom).abs()
            })
            .sum::<f64>();
    out.push(CheckResult::within(
        "conditional law vs binomial(10, 0.3) total variation",
        tv,
        0.01,
    ));
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Checks,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "continuous-part masses for exponential jumps",
            budget: Duration::from_secs(1),
            run: figure_masses,
        },
        Criterion {
            id: 2,
            name: "Bell polynomial cross-validation",
            budget: Duration::from_secs(1),
            run: bell_forms,
        },
        Criterion {
            id: 3,
            name: "iterated-law identities",
            budget: Duration::from_secs(5),
            run: iterated_identities,
        },
        Criterion {
            id: 4,
            name: "constant-boundary crossing",
            budget: Duration::from_secs(30),
            run: constant_boundary,
        },
        Criterion {
            id: 5,
            name: "hitting quantities",
            budget: Duration::from_secs(60),
            run: hitting,
        },
        Criterion {
            id: 6,
            name: "linear increasing boundary",
            budget: Duration::from_secs(60),
            run: linear_increasing,
        },
        Criterion {
            id: 7,
            name: "continuous jumps vs simulation",
            budget: Duration::from_secs(120),
            run: continuous_jumps,
        },
        Criterion {
            id: 8,
            name: "limit properties",
            budget: Duration::from_secs(5),
            run: limits,
        },
    ];
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let checks = (c.run)();
        let elapsed = start.elapsed();
        let failed: Vec<&CheckResult> = checks.iter().filter(|r| !r.passed).collect();
        let in_time = elapsed <= c.budget;
        let ok = failed.is_empty() && in_time;
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {} {}: {} ({} checks, {} failed, {:.2}s of {}s)",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            checks.len(),
            failed.len(),
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
        );
        for r in &checks {
            if verbose || !r.passed {
                println!("    {r}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
