//! Monte Carlo simulation of `Z(t) = Y(N(t))`.
//!
//! Paths are built from the compound-sum representation: `N` jumps at
//! exponential inter-arrival epochs and each epoch adds an independent
//! `W ~ Y(1)`, i.e. a Poisson(`mu`) number of jumps `X_i`.
//!
//! Replicates are grouped into fixed blocks of [`BLOCK`]; block `b` draws from
//! a ChaCha8 stream seeded by the master seed with stream id `b`. The output of
//! a run therefore depends only on the seed and the parameters, never on the
//! execution strategy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::cpp::{JumpSpec, ModelParams};
use crate::crossing::Boundary;
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;

/// Replicates per random stream.
pub const BLOCK: usize = 4096;

const BISECTION_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicates: usize,
    pub horizon: f64,
}

impl SimConfig {
    pub fn new(seed: u64, replicates: usize, horizon: f64) -> Result<Self> {
        if replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        if horizon.is_nan() || horizon <= 0.0 {
            return Err(invalid(
                "horizon",
                format!("must be positive, got {horizon}"),
            ));
        }
        Ok(Self {
            seed,
            replicates,
            horizon,
        })
    }
}

/// Censoring horizon covering 50 mean sojourns in a state: `50 / (lambda (1 - e^{-mu}))`.
pub fn default_horizon(params: &ModelParams) -> f64 {
    50.0 / params.exit_rate()
}

/// One simulated path: epochs of `N`, the increments `W_i` added at each
/// epoch and the running values of `Z`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub epochs: Vec<f64>,
    pub increments: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl PathSample {
    /// `Z(t)` on this path (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.epochs.partition_point(|&e| e <= t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }
}

/// Outcome of one first-hitting experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HitOutcome {
    Hit(f64),
    /// The path jumped over the target state.
    Overshot,
    /// The horizon passed before the path reached or passed the target.
    Censored,
}

#[derive(Debug, Clone, Copy)]
enum JumpSampler {
    Unit,
    Exponential(Exp<f64>),
    Normal(Normal<f64>),
}

/// Prebuilt samplers for one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Simulator {
    params: ModelParams,
    jumps: JumpSpec,
    arrivals: Exp<f64>,
    count: Poisson<f64>,
    jump: JumpSampler,
}

fn distr_error(name: &'static str, e: impl std::fmt::Display) -> Error {
    invalid(name, e.to_string())
}

impl Simulator {
    pub fn new(params: ModelParams, jumps: JumpSpec) -> Result<Self> {
        jumps.validate()?;
        let arrivals = Exp::new(params.lambda()).map_err(|e| distr_error("lambda", e))?;
        let count = Poisson::new(params.mu()).map_err(|e| distr_error("mu", e))?;
        let jump = match jumps {
            JumpSpec::DegenerateUnit => JumpSampler::Unit,
            JumpSpec::Exponential { zeta } => {
                JumpSampler::Exponential(Exp::new(zeta).map_err(|e| distr_error("zeta", e))?)
            }
            JumpSpec::Normal { eta, sigma } => {
                JumpSampler::Normal(Normal::new(eta, sigma).map_err(|e| distr_error("sigma", e))?)
            }
        };
        Ok(Self {
            params,
            jumps,
            arrivals,
            count,
            jump,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn jumps(&self) -> &JumpSpec {
        &self.jumps
    }

    /// One draw of `W = X_1 + ... + X_K` with `K ~ Poisson(mu)`.
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = self.count.sample(rng) as u64;
        match self.jump {
            JumpSampler::Unit => k as f64,
            JumpSampler::Exponential(d) => (0..k).map(|_| d.sample(rng)).sum(),
            JumpSampler::Normal(d) => (0..k).map(|_| d.sample(rng)).sum(),
        }
    }

    /// Path of `Z` on `[0, horizon]`.
    pub fn simulate_path<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> PathSample {
        let mut path = PathSample::default();
        let mut t = 0.0;
        let mut level = 0.0;
        loop {
            t += self.arrivals.sample(rng);
            if t > horizon {
                return path;
            }
            let w = self.sample_w(rng);
            level += w;
            path.epochs.push(t);
            path.increments.push(w);
            path.cumulative.push(level);
        }
    }

    /// One draw of `Z(t)` without storing the path.
    pub fn sample_z<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        let mut clock = 0.0;
        let mut level = 0.0;
        loop {
            clock += self.arrivals.sample(rng);
            if clock > t {
                return level;
            }
            level += self.sample_w(rng);
        }
    }

    /// First time `Z(t) >= beta(t)` on `[0, horizon]`, `None` if censored.
    pub fn first_crossing<R: Rng + ?Sized>(
        &self,
        boundary: &Boundary,
        horizon: f64,
        rng: &mut R,
    ) -> Option<f64> {
        let descending = boundary.is_nonincreasing();
        let mut t = 0.0;
        let mut level = 0.0;
        loop {
            let next = t + self.arrivals.sample(rng);
            if descending {
                let end = next.min(horizon);
                if let Some(s) = descent_crossing(boundary, level, t, end) {
                    return Some(s);
                }
            }
            if next > horizon {
                return None;
            }
            level += self.sample_w(rng);
            t = next;
            if level >= boundary.level(t) {
                return Some(t);
            }
        }
    }

    /// First epoch at which `Z` equals `k`. Unit jumps only.
    pub fn hitting<R: Rng + ?Sized>(
        &self,
        k: usize,
        horizon: f64,
        rng: &mut R,
    ) -> Result<HitOutcome> {
        if self.jumps != JumpSpec::DegenerateUnit {
            return Err(Error::WrongOperation(format!(
                "first-hitting times need unit jumps, got {}",
                self.jumps.name()
            )));
        }
        if k == 0 {
            return Err(invalid("k", "target state must be at least 1"));
        }
        let target = k as u64;
        let mut t = 0.0;
        let mut level = 0u64;
        loop {
            t += self.arrivals.sample(rng);
            if t > horizon {
                return Ok(HitOutcome::Censored);
            }
            level += self.count.sample(rng) as u64;
            if level == target {
                return Ok(HitOutcome::Hit(t));
            }
            if level > target {
                return Ok(HitOutcome::Overshot);
            }
        }
    }
}

/// First `s` in `(start, end]` where a nonincreasing boundary has come down
/// to `level`, if any.
fn descent_crossing(boundary: &Boundary, level: f64, start: f64, end: f64) -> Option<f64> {
    match boundary {
        Boundary::Constant { .. } | Boundary::LinearIncreasing { .. } => None,
        Boundary::LinearDecreasing { k } => {
            let s = *k as f64 - level;
            (s > start && s <= end).then_some(s)
        }
        Boundary::General { .. } => {
            if boundary.level(end) > level {
                return None;
            }
            let (mut lo, mut hi) = (start, end);
            while hi - lo > BISECTION_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                if boundary.level(mid) <= level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
    }
}

/// `W` draw for the given jumps; builds the samplers on every call.
pub fn sample_w<R: Rng + ?Sized>(jumps: &JumpSpec, mu: f64, rng: &mut R) -> Result<f64> {
    let params = ModelParams::new(1.0, mu)?;
    Ok(Simulator::new(params, *jumps)?.sample_w(rng))
}

pub fn simulate_path<R: Rng + ?Sized>(
    params: &ModelParams,
    jumps: &JumpSpec,
    horizon: f64,
    rng: &mut R,
) -> Result<PathSample> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(invalid(
            "horizon",
            format!("must be positive, got {horizon}"),
        ));
    }
    Ok(Simulator::new(*params, *jumps)?.simulate_path(horizon, rng))
}

pub fn first_crossing_sample<R: Rng + ?Sized>(
    boundary: &Boundary,
    params: &ModelParams,
    jumps: &JumpSpec,
    horizon: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(invalid(
            "horizon",
            format!("must be positive, got {horizon}"),
        ));
    }
    Ok(Simulator::new(*params, *jumps)?.first_crossing(boundary, horizon, rng))
}

pub fn hitting_sample<R: Rng + ?Sized>(
    k: usize,
    params: &ModelParams,
    jumps: &JumpSpec,
    horizon: f64,
    rng: &mut R,
) -> Result<HitOutcome> {
    Simulator::new(*params, *jumps)?.hitting(k, horizon, rng)
}

/// Random stream for block `block` of a run with master seed `seed`.
pub fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Run `f` once per replicate; replicate `i` uses the stream of block
/// `i / BLOCK`, consumed in replicate order within the block.
pub fn replicate<T, F>(config: &SimConfig, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync + Send,
{
    let blocks = config.replicates.div_ceil(BLOCK);
    exec.map_range(blocks, |b| {
        let mut rng = block_rng(config.seed, b);
        let len = BLOCK.min(config.replicates - b * BLOCK);
        (0..len).map(|_| f(&mut rng)).collect::<Vec<T>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// `config.replicates` draws of `Z(t)`.
pub fn sample_z_many(sim: &Simulator, t: f64, config: &SimConfig, exec: Exec) -> Vec<f64> {
    replicate(config, exec, |rng| sim.sample_z(t, rng))
}

/// First-crossing times censored at `config.horizon`.
pub fn crossing_times(
    sim: &Simulator,
    boundary: &Boundary,
    config: &SimConfig,
    exec: Exec,
) -> Vec<Option<f64>> {
    replicate(config, exec, |rng| {
        sim.first_crossing(boundary, config.horizon, rng)
    })
}

/// First-hitting outcomes for state `k`.
pub fn hitting_outcomes(
    sim: &Simulator,
    k: usize,
    config: &SimConfig,
    exec: Exec,
) -> Result<Vec<HitOutcome>> {
    replicate(config, exec, |rng| sim.hitting(k, config.horizon, rng))
        .into_iter()
        .collect()
}
