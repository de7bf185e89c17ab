//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or other runtime failure, 2 invalid
//! parameters, 3 a work guard tripped, 4 the drift scan's exceptional set
//! changed when the radius was doubled.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::drift::{self, DriftReport};
use crate::error::{Error, Result};
use crate::montecarlo::{self, ReturnEstimates};
use crate::output::{unix_timestamp, write_csv, write_json};
use crate::prob::Prob;
use crate::queue::{Policy, QueueState, SystemParams};
use crate::series::{self, Backend, SeriesReport, SeriesValues};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "syncq", version, about = "Synchronized queues, their excess walk and return-probability series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Serialize, Clone, Debug)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// R_d(n), its inverse and partial sums for n = 0..=n_max.
    Series(SeriesArgs),
    /// Exhaustive Lyapunov drift scan for three queues at p = 1/2.
    DriftScan(DriftArgs),
    /// Simulate one queue batch under a service policy.
    Simulate(SimulateArgs),
    /// Monte Carlo estimates of R_d(n) with confidence intervals.
    EstimateReturn(EstimateArgs),
    /// Growth of origin visits between horizons T and 2T.
    VisitGrowth(GrowthArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Exact,
    Log,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Log => Backend::Log,
        }
    }
}

/// Output placement. Neither flag changes the file contents, so they are
/// left out of the embedded configuration.
#[derive(Args, Serialize, Clone, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct SeriesArgs {
    #[arg(long = "d", default_value_t = 2)]
    pub d: u32,
    #[arg(long = "p", default_value = "1/2")]
    pub p: Prob,
    #[arg(long = "n-max", default_value_t = 40)]
    pub n_max: u64,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    pub backend: BackendArg,
    /// d = 2..=5, p = 1/2, n = 0..=40, exact.
    #[arg(long)]
    pub fig2: bool,
    /// Budget for the exact back-end in 64-bit word multiplications.
    #[arg(long = "work-limit", default_value_t = 20_000_000_000)]
    pub work_limit: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct DriftArgs {
    #[arg(long = "d", default_value_t = 3)]
    pub d: u32,
    #[arg(long, default_value_t = 200.0)]
    pub radius: f64,
    /// Emit one CSV row per scanned class.
    #[arg(long = "emit-per-state")]
    pub emit_per_state: bool,
    #[arg(long = "max-states", default_value_t = drift::DEFAULT_MAX_STATES)]
    pub max_states: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct SimulateArgs {
    #[arg(long = "d", default_value_t = 2)]
    pub d: usize,
    #[arg(long = "p", default_value = "1/4")]
    pub p: Prob,
    #[arg(long = "mbar", default_value = "1/2")]
    pub mbar: Prob,
    #[arg(long = "T", default_value_t = 100_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// greedy | never-serve | threshold:K
    #[arg(long, default_value = "greedy", value_parser = parse_policy)]
    pub policy: Policy,
    /// Initial backlog, comma separated; empty queues by default.
    #[arg(long, value_delimiter = ',')]
    pub q0: Option<Vec<u64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    Independent,
    SingleTrajectory,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct EstimateArgs {
    #[arg(long = "d", default_value_t = 2)]
    pub d: usize,
    #[arg(long = "p", default_value = "1/2")]
    pub p: Prob,
    #[arg(long = "n-max", default_value_t = 10)]
    pub n_max: u64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EstimateMode::Independent)]
    pub mode: EstimateMode,
    /// Trajectory length for the single-trajectory mode.
    #[arg(long = "T", default_value_t = 1_000_000)]
    pub horizon: u64,
    /// Budget in simulated arrival draws.
    #[arg(long = "work-limit", default_value_t = 200_000_000_000)]
    pub work_limit: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct GrowthArgs {
    #[arg(long = "d", default_value_t = 2)]
    pub d: usize,
    #[arg(long = "p", default_value = "1/2")]
    pub p: Prob,
    #[arg(long = "T", default_value_t = 100_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 64)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Budget in simulated arrival draws.
    #[arg(long = "work-limit", default_value_t = 200_000_000_000)]
    pub work_limit: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

fn parse_policy(s: &str) -> std::result::Result<Policy, String> {
    match s {
        "greedy" => Ok(Policy::Greedy),
        "never-serve" => Ok(Policy::NeverServe),
        other => other
            .strip_prefix("threshold:")
            .and_then(|k| k.parse::<u64>().ok())
            .filter(|&k| k >= 1)
            .map(Policy::Threshold)
            .ok_or_else(|| format!("unknown policy `{other}` (greedy | never-serve | threshold:K with K >= 1)")),
    }
}

/// Rough cost of the exact back-end: row `n` touches `n + 1` integers of about
/// `n d log2(b)` bits, i.e. roughly `d log2(b) n_max^3 / 192` word products.
pub fn exact_work_estimate(n_max: u64, d: u32, p: Prob) -> u64 {
    let bits = (p.denom() as f64).log2().max(1.0);
    (d as f64 * bits * (n_max as f64).powi(3) / 192.0).ceil() as u64
}

fn guard(what: &'static str, required: u64, limit: u64) -> Result<()> {
    if required > limit {
        Err(Error::WorkLimit { what, required, limit })
    } else {
        Ok(())
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn f64_str(v: f64) -> String {
    format!("{v}")
}

fn rational_str(r: &BigRational) -> String {
    r.to_string()
}

#[derive(Serialize)]
struct SeriesRowOut {
    n: u64,
    r: String,
    inv_r: String,
    partial_sum: String,
    r_float: f64,
}

#[derive(Serialize)]
struct SeriesOut {
    d: u32,
    p: Prob,
    n_max: u64,
    backend: Backend,
    slope: Option<series::SlopeFit>,
    classification: series::Classification,
    rows: Vec<SeriesRowOut>,
}

fn series_rows(rep: &SeriesReport) -> Vec<SeriesRowOut> {
    (0..=rep.n_max)
        .map(|n| {
            let (r, inv_r, partial) = match &rep.values {
                SeriesValues::Exact { r, partial } => {
                    let v = r[n as usize].value();
                    let inv = if v.is_zero() { "inf".to_string() } else { rational_str(&(BigRational::one() / v)) };
                    (rational_str(v), inv, rational_str(&partial[n as usize]))
                }
                SeriesValues::Log { ln_r, partial } => {
                    let l = ln_r[n as usize];
                    (f64_str(l.exp()), f64_str((-l).exp()), f64_str(partial[n as usize]))
                }
            };
            SeriesRowOut { n, r, inv_r, partial_sum: partial, r_float: rep.r_f64(n) }
        })
        .collect()
}

fn series_out(rep: &SeriesReport) -> SeriesOut {
    SeriesOut {
        d: rep.d,
        p: rep.p,
        n_max: rep.n_max,
        backend: rep.backend,
        slope: rep.slope.clone(),
        classification: rep.classification,
        rows: series_rows(rep),
    }
}

pub fn cmd_series(args: &SeriesArgs, config: &Command) -> Result<i32> {
    let jobs: Vec<(u32, Prob, u64, Backend)> = if args.fig2 {
        (2..=5).map(|d| (d, Prob::HALF, 40, Backend::Exact)).collect()
    } else {
        if args.d == 0 {
            return Err(Error::InvalidParams("d must be at least 1".into()));
        }
        args.p.require_open_unit("p")?;
        vec![(args.d, args.p, args.n_max, args.backend.into())]
    };
    for &(d, p, n_max, backend) in &jobs {
        if backend == Backend::Exact {
            guard("exact series evaluation", exact_work_estimate(n_max, d, p), args.work_limit)?;
        }
    }
    let reports: Vec<SeriesReport> =
        jobs.iter().map(|&(d, p, n_max, backend)| series::partial_sum(n_max, d, p, backend)).collect();
    let w = open_output(&args.out.output)?;
    let ts = unix_timestamp();
    match (args.out.format.unwrap_or(Format::Csv), args.fig2) {
        (Format::Csv, false) => {
            let rows = series_rows(&reports[0]).into_iter().map(|r| vec![r.n.to_string(), r.r, r.inv_r, r.partial_sum]);
            write_csv(w, "syncq/series/v1", config, ts, &["n", "r", "inv_r", "partial_sum"], rows)?;
        }
        (Format::Csv, true) => {
            let rows = reports.iter().flat_map(|rep| {
                series_rows(rep)
                    .into_iter()
                    .map(move |r| vec![rep.d.to_string(), r.n.to_string(), r.r, r.inv_r, r.partial_sum])
            });
            write_csv(w, "syncq/series-fig2/v1", config, ts, &["d", "n", "r", "inv_r", "partial_sum"], rows)?;
        }
        (Format::Json, false) => write_json(w, "syncq/series/v1", config, ts, &series_out(&reports[0]))?,
        (Format::Json, true) => {
            let all: Vec<SeriesOut> = reports.iter().map(series_out).collect();
            write_json(w, "syncq/series-fig2/v1", config, ts, &all)?
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DriftOut<'a> {
    #[serde(flatten)]
    report: &'a DriftReport,
    doubled_radius: f64,
    doubled_rho0: f64,
    doubled_exceptional_states: &'a [[i64; 3]],
    stable_under_doubling: bool,
}

pub fn cmd_drift_scan(args: &DriftArgs, config: &Command) -> Result<i32> {
    if args.d != 3 {
        return Err(Error::InvalidParams(format!("the drift scan is defined for d = 3 only, got d = {}", args.d)));
    }
    let report = drift::drift_scan_with(args.radius, args.emit_per_state, args.max_states)?;
    let doubled = drift::drift_scan_with(2.0 * args.radius, false, args.max_states)?;
    let stable = report.exceptional_states == doubled.exceptional_states;
    let w = open_output(&args.out.output)?;
    let ts = unix_timestamp();
    let default_format = if args.emit_per_state { Format::Csv } else { Format::Json };
    match args.out.format.unwrap_or(default_format) {
        Format::Csv => {
            let states = report.per_state.clone().unwrap_or_else(|| {
                drift::classes_within(args.radius * args.radius)
                    .into_iter()
                    .map(|x| drift::StateDrift { state: x, rho: drift::rho_thirds(&x) as f64 / 3.0, delta_f: drift::delta_f(&x) })
                    .collect()
            });
            let rows = states.into_iter().map(|s| {
                vec![
                    s.state[0].to_string(),
                    s.state[1].to_string(),
                    s.state[2].to_string(),
                    drift::rho(&s.state).to_string(),
                    f64_str(s.delta_f),
                ]
            });
            write_csv(w, "syncq/drift-states/v1", config, ts, &["x1", "x2", "x3", "rho", "delta_f"], rows)?;
        }
        Format::Json => {
            let out = DriftOut {
                report: &report,
                doubled_radius: doubled.radius,
                doubled_rho0: doubled.rho0,
                doubled_exceptional_states: &doubled.exceptional_states,
                stable_under_doubling: stable,
            };
            write_json(w, "syncq/drift-scan/v1", config, ts, &out)?;
        }
    }
    Ok(if stable { EXIT_OK } else { EXIT_UNSTABLE })
}

#[derive(Serialize)]
struct SimulateOut<'a> {
    #[serde(flatten)]
    stats: &'a montecarlo::TrajectoryStats,
    mean_parallel: f64,
    mean_excess_max: f64,
    origin_visit_rate: f64,
}

pub fn cmd_simulate(args: &SimulateArgs, config: &Command) -> Result<i32> {
    let params = SystemParams::new(args.d, args.p, args.mbar)?;
    let q0 = match &args.q0 {
        Some(q) if q.len() != args.d => return Err(Error::LengthMismatch { left: q.len(), right: args.d }),
        Some(q) => Some(QueueState::new(q.clone())),
        None => None,
    };
    let stats = montecarlo::simulate_queue(&params, args.policy, args.horizon, args.seed, q0)?;
    let w = open_output(&args.out.output)?;
    let ts = unix_timestamp();
    match args.out.format.unwrap_or(Format::Json) {
        Format::Json => {
            let out = SimulateOut {
                stats: &stats,
                mean_parallel: stats.mean_parallel(),
                mean_excess_max: stats.mean_excess_max(),
                origin_visit_rate: stats.origin_visit_rate(),
            };
            write_json(w, "syncq/simulate/v1", config, ts, &out)?;
        }
        Format::Csv => {
            let header = [
                "policy", "horizon", "origin_visits", "returns", "max_backlog", "mean_parallel", "max_parallel",
                "mean_excess_max", "services",
            ];
            let row = vec![
                stats.policy.clone(),
                stats.horizon.to_string(),
                stats.origin_visits.to_string(),
                stats.return_times.len().to_string(),
                stats.max_backlog.to_string(),
                f64_str(stats.mean_parallel()),
                stats.max_parallel.to_string(),
                f64_str(stats.mean_excess_max()),
                stats.services.to_string(),
            ];
            write_csv(w, "syncq/simulate/v1", config, ts, &header, [row])?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct EstimateRowOut {
    #[serde(flatten)]
    est: montecarlo::ReturnEstimate,
    exact_r: f64,
    within_ci: bool,
}

#[derive(Serialize)]
struct EstimateOut {
    d: usize,
    p: Prob,
    seed: u64,
    mode: montecarlo::EstimatorMode,
    ci_sigmas: f64,
    rows: Vec<EstimateRowOut>,
}

fn exact_reference(n: u64, d: usize, p: Prob) -> f64 {
    if n <= 200 {
        series::rd_exact(n, d as u32, p).to_f64()
    } else {
        series::rd_log(n, d as u32, p).exp()
    }
}

pub fn cmd_estimate_return(args: &EstimateArgs, config: &Command) -> Result<i32> {
    if args.d < 2 {
        return Err(Error::InvalidParams(format!("d must be at least 2, got {}", args.d)));
    }
    args.p.require_open_unit("p")?;
    let est: ReturnEstimates = match args.mode {
        EstimateMode::Independent => {
            let steps = args.trials.saturating_mul(args.n_max * (args.n_max + 1) / 2).saturating_mul(args.d as u64);
            guard("independent-restart estimate", steps, args.work_limit)?;
            montecarlo::estimate_rd(args.n_max, args.d, args.p, args.trials, args.seed)?
        }
        EstimateMode::SingleTrajectory => {
            let work = args.horizon.saturating_mul(args.n_max + 1).saturating_add(args.horizon * args.d as u64);
            guard("single-trajectory estimate", work, args.work_limit)?;
            montecarlo::estimate_rd_single_trajectory(args.n_max, args.d, args.p, args.horizon, args.seed)?
        }
    };
    let rows: Vec<EstimateRowOut> = est
        .estimates
        .iter()
        .map(|e| {
            let exact_r = exact_reference(e.n, args.d, args.p);
            EstimateRowOut { est: e.clone(), exact_r, within_ci: (e.estimate - exact_r).abs() <= est.ci_sigmas * e.std_error }
        })
        .collect();
    let w = open_output(&args.out.output)?;
    let ts = unix_timestamp();
    match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let header = ["n", "trials", "returns", "estimate", "std_error", "ci_low", "ci_high", "exact_r", "within_ci"];
            let body = rows.iter().map(|r| {
                vec![
                    r.est.n.to_string(),
                    r.est.trials.to_string(),
                    r.est.returns.to_string(),
                    f64_str(r.est.estimate),
                    f64_str(r.est.std_error),
                    f64_str(r.est.ci_low),
                    f64_str(r.est.ci_high),
                    f64_str(r.exact_r),
                    r.within_ci.to_string(),
                ]
            });
            write_csv(w, "syncq/estimate-return/v1", config, ts, &header, body)?;
        }
        Format::Json => {
            let out = EstimateOut { d: est.d, p: est.p, seed: est.seed, mode: est.mode.clone(), ci_sigmas: est.ci_sigmas, rows };
            write_json(w, "syncq/estimate-return/v1", config, ts, &out)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_visit_growth(args: &GrowthArgs, config: &Command) -> Result<i32> {
    args.p.require_open_unit("p")?;
    let draws = args.trials.saturating_mul(2 * args.horizon).saturating_mul(args.d as u64);
    guard("visit-growth simulation", draws, args.work_limit)?;
    let rep = montecarlo::visit_growth(args.d, args.p, args.horizon, args.trials, args.seed)?;
    let w = open_output(&args.out.output)?;
    let ts = unix_timestamp();
    match args.out.format.unwrap_or(Format::Json) {
        Format::Json => write_json(w, "syncq/visit-growth/v1", config, ts, &rep)?,
        Format::Csv => {
            let rows = rep.curve.iter().map(|&(t, v)| vec![t.to_string(), f64_str(v)]);
            write_csv(w, "syncq/visit-growth/v1", config, ts, &["t", "mean_visits"], rows)?;
        }
    }
    Ok(EXIT_OK)
}

fn workers(cmd: &Command) -> Option<usize> {
    match cmd {
        Command::Series(a) => a.out.workers,
        Command::DriftScan(a) => a.out.workers,
        Command::Simulate(a) => a.out.workers,
        Command::EstimateReturn(a) => a.out.workers,
        Command::VisitGrowth(a) => a.out.workers,
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let cmd = &cli.command;
    let go = || match cmd {
        Command::Series(a) => cmd_series(a, cmd),
        Command::DriftScan(a) => cmd_drift_scan(a, cmd),
        Command::Simulate(a) => cmd_simulate(a, cmd),
        Command::EstimateReturn(a) => cmd_estimate_return(a, cmd),
        Command::VisitGrowth(a) => cmd_visit_growth(a, cmd),
    };
    match workers(cmd) {
        Some(0) => Err(Error::InvalidParams("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else if matches!(e, Error::WorkLimit { .. }) {
                EXIT_GUARD
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
