//! `poisub`: tables of laws, crossing quantities and Monte Carlo experiments
//! for the Poisson-subordinated compound Poisson process.

mod range;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use poisub::cpp::moments_z;
use poisub::crossing::{
    crossing_result, hitting_cdf, hitting_density, hitting_probability, mean_crossing_time_constant,
};
use poisub::mc::{self, HitOutcome};
use poisub::verify::{self, McSettings, Suite};
use poisub::{
    AvoidingTable, Boundary, Exec, IteratedLaw, JumpSpec, ModelParams, SeriesControl, SimConfig,
    Simulator, SubordinatedCpp,
};

use range::{FloatRange, IntRange};
use table::{Cell, Table};

#[derive(Debug, Parser)]
#[command(
    name = "poisub",
    version,
    about = "Laws, crossing times and simulations of Poisson-subordinated compound Poisson processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file; defaults to `<output-dir>/<command>.<ext>` or stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Directory for output files when `--output` is not given.
    #[arg(long, global = true, env = "POISUB_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    /// Evaluate grids and replicates on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum JumpKind {
    Unit,
    Exp,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum BoundaryKind {
    Constant,
    LinearDecreasing,
    LinearIncreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SimTarget {
    Z,
    Crossing,
    Hitting,
}

#[derive(Debug, Args, Serialize)]
struct Model {
    /// Rate of the subordinating Poisson process N.
    #[arg(long)]
    lambda: f64,
    /// Rate of the inner Poisson process M.
    #[arg(long)]
    mu: f64,
}

#[derive(Debug, Args, Serialize)]
struct Jumps {
    /// Law of the jumps X.
    #[arg(long, value_enum, default_value_t = JumpKind::Unit)]
    jumps: JumpKind,
    /// Rate of exponential jumps.
    #[arg(long)]
    zeta: Option<f64>,
    /// Mean of normal jumps.
    #[arg(long)]
    eta: Option<f64>,
    /// Standard deviation of normal jumps.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct TimeGrid {
    /// Times, `a` or `a..b`.
    #[arg(long)]
    t: FloatRange,
    /// Step of the time grid.
    #[arg(long, default_value_t = 1.0)]
    t_step: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Command {
    /// Probabilities p_n(t) of the iterated Poisson process.
    #[command(allow_negative_numbers = true)]
    Pmf {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        time: TimeGrid,
        /// States; defaults to the truncation range at each t.
        #[arg(long)]
        n: Option<IntRange>,
    },
    /// CDF of Z(t).
    #[command(allow_negative_numbers = true)]
    Cdf {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        jumps: Jumps,
        #[command(flatten)]
        time: TimeGrid,
        /// Arguments z, `a` or `a..b`.
        #[arg(long, allow_hyphen_values = true)]
        z: FloatRange,
        #[arg(long, default_value_t = 0.01)]
        z_step: f64,
    },
    /// Density of the continuous part of Z(t); without `--z`, the masses per t.
    #[command(allow_negative_numbers = true)]
    Density {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        jumps: Jumps,
        #[command(flatten)]
        time: TimeGrid,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<FloatRange>,
        #[arg(long, default_value_t = 0.01)]
        z_step: f64,
    },
    /// Mean, variance and dispersion index of Z(t).
    #[command(allow_negative_numbers = true)]
    Moments {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        jumps: Jumps,
        #[command(flatten)]
        time: TimeGrid,
    },
    /// Survival and density of the first-crossing time of the iterated process.
    #[command(allow_negative_numbers = true)]
    Crossing {
        #[command(flatten)]
        model: Model,
        #[arg(long, value_enum, default_value_t = BoundaryKind::Constant)]
        boundary: BoundaryKind,
        /// Boundary levels k = beta(0).
        #[arg(long)]
        k: IntRange,
        /// Times; required unless `--mean`.
        #[arg(long)]
        t: Option<FloatRange>,
        #[arg(long, default_value_t = 1.0)]
        t_step: f64,
        /// Mean crossing time instead (constant boundary).
        #[arg(long)]
        mean: bool,
    },
    /// First-hitting time of state k: density and CDF, or with `--prob` the
    /// hitting probability.
    #[command(allow_negative_numbers = true)]
    Hitting {
        /// Rate of N; needed unless `--prob`.
        #[arg(long)]
        lambda: Option<f64>,
        /// Rates mu, `a` or `a..b`.
        #[arg(long)]
        mu: FloatRange,
        #[arg(long, default_value_t = 0.1)]
        mu_step: f64,
        /// Target states, `a` or `a..b`.
        #[arg(long)]
        k: IntRange,
        /// Times; required unless `--prob`.
        #[arg(long)]
        t: Option<FloatRange>,
        #[arg(long, default_value_t = 1.0)]
        t_step: f64,
        /// Probability of ever visiting k.
        #[arg(long)]
        prob: bool,
    },
    /// Avoiding probabilities g(j; n) for the boundary k + t.
    #[command(allow_negative_numbers = true)]
    Avoiding {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        k: usize,
        /// Last integer time of the table.
        #[arg(long, default_value_t = 10)]
        n_max: usize,
    },
    /// Monte Carlo replicates.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        jumps: Jumps,
        /// Z(t) values, first-crossing times or first-hitting times.
        #[arg(long, value_enum, default_value_t = SimTarget::Z)]
        target: SimTarget,
        /// Observation time for `--target z`.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, value_enum, default_value_t = BoundaryKind::Constant)]
        boundary: BoundaryKind,
        /// Boundary level or target state.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Censoring horizon; defaults to 50 mean sojourns.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run a verification suite.
    #[command(allow_negative_numbers = true)]
    Verify {
        /// formula-cross-checks, figure-reproduction or analytic-vs-mc.
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        replicates: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pmf { .. } => "pmf",
            Command::Cdf { .. } => "cdf",
            Command::Density { .. } => "density",
            Command::Moments { .. } => "moments",
            Command::Crossing { .. } => "crossing",
            Command::Hitting { .. } => "hitting",
            Command::Avoiding { .. } => "avoiding",
            Command::Simulate { .. } => "simulate",
            Command::Verify { .. } => "verify",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Simulate { seed, .. } | Command::Verify { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Verification(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<poisub::Error> for Failure {
    fn from(e: poisub::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Validation(e)
    }
}

type Outcome<T> = Result<T, Failure>;

impl Model {
    fn params(&self) -> Outcome<ModelParams> {
        Ok(ModelParams::new(self.lambda, self.mu)?)
    }

    fn law(&self) -> Outcome<IteratedLaw> {
        Ok(IteratedLaw::new(self.params()?, SeriesControl::default()))
    }
}

fn required(value: Option<f64>, flag: &str, jumps: &str) -> Outcome<f64> {
    value.ok_or_else(|| Failure::Validation(format!("{jumps} jumps need --{flag}")))
}

impl Jumps {
    fn spec(&self) -> Outcome<JumpSpec> {
        Ok(match self.jumps {
            JumpKind::Unit => JumpSpec::DegenerateUnit,
            JumpKind::Exp => JumpSpec::exponential(required(self.zeta, "zeta", "exponential")?)?,
            JumpKind::Normal => JumpSpec::normal(
                required(self.eta, "eta", "normal")?,
                required(self.sigma, "sigma", "normal")?,
            )?,
        })
    }
}

impl TimeGrid {
    fn values(&self) -> Outcome<Vec<f64>> {
        if self.t.start < 0.0 {
            return Err(Failure::Validation(format!(
                "times must be >= 0, got {}",
                self.t
            )));
        }
        Ok(self.t.grid(self.t_step)?)
    }
}

fn boundary(kind: BoundaryKind, k: usize) -> Outcome<Boundary> {
    Ok(match kind {
        BoundaryKind::Constant => Boundary::constant(k)?,
        BoundaryKind::LinearDecreasing => Boundary::linear_decreasing(k)?,
        BoundaryKind::LinearIncreasing => Boundary::linear_increasing(k)?,
    })
}

fn collect<T>(results: Vec<poisub::Result<T>>) -> Outcome<Vec<T>> {
    Ok(results.into_iter().collect::<poisub::Result<Vec<T>>>()?)
}

fn run(command: &Command, exec: Exec) -> Outcome<Table> {
    match command {
        Command::Pmf { model, time, n } => {
            let law = model.law()?;
            let mut table = Table::new(&["t", "n", "pmf"]);
            for t in time.values()? {
                match n {
                    Some(range) => {
                        for n in range.values() {
                            table.push(vec![t.into(), n.into(), law.pmf(n, t)?.into()]);
                        }
                    }
                    None => {
                        let w = law.weights(t)?;
                        for (n, &p) in w.probs().iter().enumerate() {
                            table.push(vec![t.into(), n.into(), p.into()]);
                        }
                    }
                }
            }
            Ok(table)
        }
        Command::Cdf {
            model,
            jumps,
            time,
            z,
            z_step,
        } => {
            let cpp =
                SubordinatedCpp::new(model.params()?, jumps.spec()?, SeriesControl::default())?;
            let zs = z.grid(*z_step)?;
            let mut table = Table::new(&["t", "z", "cdf"]);
            for t in time.values()? {
                let marginal = cpp.at(t)?;
                for (&z, v) in zs.iter().zip(marginal.cdf_grid(&zs, exec)) {
                    table.push(vec![t.into(), z.into(), v.into()]);
                }
            }
            Ok(table)
        }
        Command::Density {
            model,
            jumps,
            time,
            z,
            z_step,
        } => {
            let cpp =
                SubordinatedCpp::new(model.params()?, jumps.spec()?, SeriesControl::default())?;
            let times = time.values()?;
            match z {
                Some(z) => {
                    let zs = z.grid(*z_step)?;
                    let mut table = Table::new(&["t", "z", "density"]);
                    for t in times {
                        let marginal = cpp.at(t)?;
                        for (&z, v) in zs.iter().zip(marginal.density_grid(&zs, exec)?) {
                            table.push(vec![t.into(), z.into(), v.into()]);
                        }
                    }
                    Ok(table)
                }
                None => {
                    let mut table =
                        Table::new(&["t", "atom", "continuous_mass", "integrated_density"]);
                    let rows = collect(exec.map(&times, |&t| {
                        let m = cpp.at(t)?;
                        Ok((m.atom(), m.continuous_mass(), m.integrated_density(1e-10)?))
                    }))?;
                    for (t, (atom, mass, integral)) in times.into_iter().zip(rows) {
                        table.push(vec![t.into(), atom.into(), mass.into(), integral.into()]);
                    }
                    Ok(table)
                }
            }
        }
        Command::Moments { model, jumps, time } => {
            let params = model.params()?;
            let spec = jumps.spec()?;
            let mut table = Table::new(&["t", "mean", "variance", "dispersion_index"]);
            for t in time.values()? {
                let m = moments_z(t, &params, &spec)?;
                table.push(vec![
                    t.into(),
                    m.mean.into(),
                    m.variance.into(),
                    m.dispersion_index.into(),
                ]);
            }
            Ok(table)
        }
        Command::Crossing {
            model,
            boundary: kind,
            k,
            t,
            t_step,
            mean,
        } => {
            let law = model.law()?;
            if *mean {
                if *kind != BoundaryKind::Constant {
                    return Err(Failure::Validation(
                        "--mean is available for the constant boundary only".into(),
                    ));
                }
                let mut table = Table::new(&["k", "mean_crossing_time"]);
                for k in k.values() {
                    table.push(vec![k.into(), mean_crossing_time_constant(k, &law)?.into()]);
                }
                return Ok(table);
            }
            let times = TimeGrid {
                t: t.ok_or_else(|| {
                    Failure::Validation("crossing needs --t unless --mean is given".into())
                })?,
                t_step: *t_step,
            }
            .values()?;
            let mut table = Table::new(&["k", "t", "survival", "density"]);
            for k in k.values() {
                if *kind == BoundaryKind::LinearIncreasing {
                    let last = times.last().copied().unwrap_or(0.0);
                    let avoiding = AvoidingTable::build(k, last.floor() as usize, &law)?;
                    let survival = collect(exec.map(&times, |&t| avoiding.survival(t)))?;
                    for (&t, s) in times.iter().zip(survival) {
                        table.push(vec![k.into(), t.into(), s.into(), Cell::Empty]);
                    }
                } else {
                    let b = boundary(*kind, k)?;
                    let results = collect(exec.map(&times, |&t| crossing_result(&b, t, &law)))?;
                    for r in results {
                        table.push(vec![
                            k.into(),
                            r.t.into(),
                            r.survival.into(),
                            r.density.into(),
                        ]);
                    }
                }
            }
            Ok(table)
        }
        Command::Hitting {
            lambda,
            mu,
            mu_step,
            k,
            t,
            t_step,
            prob,
        } => {
            let mus = mu.grid(*mu_step)?;
            if *prob {
                let mut table = Table::new(&["mu", "k", "probability"]);
                for &mu in &mus {
                    for k in k.values() {
                        table.push(vec![
                            mu.into(),
                            k.into(),
                            hitting_probability(k, mu)?.into(),
                        ]);
                    }
                }
                return Ok(table);
            }
            let lambda = lambda.ok_or_else(|| {
                Failure::Validation("hitting needs --lambda unless --prob is given".into())
            })?;
            let times = TimeGrid {
                t: t.ok_or_else(|| {
                    Failure::Validation("hitting needs --t unless --prob is given".into())
                })?,
                t_step: *t_step,
            }
            .values()?;
            let mut table = Table::new(&["mu", "k", "t", "density", "cdf"]);
            for &mu in &mus {
                let law = Model { lambda, mu }.law()?;
                for k in k.values() {
                    for &t in &times {
                        table.push(vec![
                            mu.into(),
                            k.into(),
                            t.into(),
                            hitting_density(k, t, &law)?.into(),
                            hitting_cdf(k, t, &law)?.into(),
                        ]);
                    }
                }
            }
            Ok(table)
        }
        Command::Avoiding { model, k, n_max } => {
            let table_g = AvoidingTable::build(*k, *n_max, &model.law()?)?;
            let mut table = Table::new(&["n", "j", "g"]);
            for n in 0..=*n_max {
                for (j, &g) in table_g.row(n).iter().enumerate() {
                    table.push(vec![n.into(), j.into(), g.into()]);
                }
            }
            Ok(table)
        }
        Command::Simulate {
            model,
            jumps,
            target,
            t,
            boundary: kind,
            k,
            horizon,
            replicates,
            seed,
        } => {
            let params = model.params()?;
            let sim = Simulator::new(params, jumps.spec()?)?;
            match target {
                SimTarget::Z => {
                    let t = t.ok_or_else(|| Failure::Validation("--target z needs --t".into()))?;
                    let config = SimConfig::new(*seed, *replicates, t)?;
                    let mut table = Table::new(&["replicate", "z"]);
                    for (i, z) in mc::sample_z_many(&sim, t, &config, exec)
                        .into_iter()
                        .enumerate()
                    {
                        table.push(vec![i.into(), z.into()]);
                    }
                    Ok(table)
                }
                SimTarget::Crossing => {
                    let config = SimConfig::new(
                        *seed,
                        *replicates,
                        horizon.unwrap_or(mc::default_horizon(&params)),
                    )?;
                    let b = boundary(*kind, *k)?;
                    let mut table = Table::new(&["replicate", "outcome", "time"]);
                    for (i, time) in mc::crossing_times(&sim, &b, &config, exec)
                        .into_iter()
                        .enumerate()
                    {
                        let outcome = if time.is_some() {
                            "crossed"
                        } else {
                            "censored"
                        };
                        table.push(vec![i.into(), outcome.into(), time.into()]);
                    }
                    Ok(table)
                }
                SimTarget::Hitting => {
                    let config = SimConfig::new(
                        *seed,
                        *replicates,
                        horizon.unwrap_or(mc::default_horizon(&params)),
                    )?;
                    let mut table = Table::new(&["replicate", "outcome", "time"]);
                    for (i, o) in mc::hitting_outcomes(&sim, *k, &config, exec)?
                        .into_iter()
                        .enumerate()
                    {
                        let (outcome, time) = match o {
                            HitOutcome::Hit(t) => ("hit", Some(t)),
                            HitOutcome::Overshot => ("overshot", None),
                            HitOutcome::Censored => ("censored", None),
                        };
                        table.push(vec![i.into(), outcome.into(), time.into()]);
                    }
                    Ok(table)
                }
            }
        }
        Command::Verify {
            suite,
            seed,
            replicates,
        } => {
            let suite: Suite = suite.parse()?;
            let settings = McSettings {
                seed: *seed,
                replicates: *replicates,
            };
            SimConfig::new(*seed, *replicates, 1.0)?;
            let results = verify::run_suite(suite, settings, exec)?;
            let mut table = Table::new(&["check", "measured", "tolerance", "passed"]);
            for r in &results {
                eprintln!("{r}");
                table.push(vec![
                    r.name.as_str().into(),
                    r.measured.into(),
                    r.tolerance.into(),
                    if r.passed { "true" } else { "false" }.into(),
                ]);
            }
            Ok(table)
        }
    }
}

fn emit(cli: &Cli, table: &Table) -> Outcome<()> {
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = cli.output.clone().or_else(|| {
        cli.output_dir
            .as_ref()
            .map(|d| d.join(format!("{}.{ext}", cli.command.name())))
    });
    let io_err = |e: io::Error| {
        Failure::Io(match &path {
            Some(p) => format!("cannot write {}: {e}", p.display()),
            None => format!("cannot write to stdout: {e}"),
        })
    };
    let mut out: Box<dyn Write> = match &path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.format {
        Format::Csv => table.write_csv(&mut out).map_err(io_err)?,
        Format::Json => {
            let metadata = json!({
                "params": serde_json::to_value(&cli.command).map_err(|e| Failure::Io(e.to_string()))?,
                "seed": cli.command.seed(),
                "version": poisub::VERSION,
            });
            serde_json::to_writer_pretty(&mut out, &table.to_json(metadata))
                .map_err(|e| io_err(e.into()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let result = run(&cli.command, exec).and_then(|table| {
        emit(&cli, &table)?;
        if cli.command.name() == "verify"
            && table
                .rows
                .iter()
                .any(|r| r.last() == Some(&Cell::Str("false".into())))
        {
            return Err(Failure::Verification("one or more checks failed".into()));
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Validation(m) => ("invalid input", m),
                Failure::Verification(m) => ("verification failed", m),
                Failure::Io(m) => ("i/o error", m),
            };
            eprintln!("error: {kind}: {msg}");
            ExitCode::from(f.code())
        }
    }
}
