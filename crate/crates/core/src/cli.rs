//! Command-line front end: bound tables, Monte Carlo sweeps, exact
//! enumeration, erasure-channel experiments and distribution comparisons.
//!
//! Every option may also come from a `key = value` config file (keys mirror
//! the long flag names); flags on the command line take precedence.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::bounds::{self, BoundTables};
use crate::codec::RaptorConfig;
use crate::degree::OmegaSpec;
use crate::persist::{self, fmt_g17, Format};
use crate::sim::{self, CurveSource, SimError, Simulator, SweepRecord};

/// Overrides the directory used when `--out` is not given.
pub const OUT_DIR_ENV: &str = "RAPTOR_BOUNDS_OUT_DIR";

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ETA: f64 = 0.7;
pub const DEFAULT_TARGET: f64 = 0.95;
/// Relative agreement required between the general bounds and the closed
/// forms for the binomial distribution.
pub const CROSS_CHECK_TOL: f64 = 1e-9;
/// Slack allowed in the exact-value sandwich check.
pub const SANDWICH_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "raptor-bounds", version, about = "Raptor code decoding-probability bounds and simulations")]
pub struct Cli {
    /// key = value file supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate lower/upper bounds over an overhead range
    Bounds(CommonArgs),
    /// Monte Carlo sweep over an overhead range
    Simulate(SimulateArgs),
    /// Exact success probability on tiny codes, checked against the bounds
    Exact(CommonArgs),
    /// Success probability after T transmissions over an erasure channel
    Bec(BecArgs),
    /// One sweep per degree distribution on a shared grid
    Compare(SimulateArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// number of source packets
    #[arg(long)]
    pub k: Option<usize>,
    /// number of intermediate packets (default k + 1)
    #[arg(long)]
    pub n: Option<usize>,
    /// parity-block density of the pre-code
    #[arg(long)]
    pub eta: Option<f64>,
    /// degree distribution: ideal, robust(c,delta), 3gpp, binomial, point(d), file(path)
    #[arg(long)]
    pub omega: Vec<String>,
    /// received-packet range a:b[:step], inclusive
    #[arg(long, conflicts_with = "gamma")]
    pub m: Option<String>,
    /// overhead range a:b[:step]; m = round_half_up(gamma * k)
    #[arg(long)]
    pub gamma: Option<String>,
    /// output file (default: stdout, or $RAPTOR_BOUNDS_OUT_DIR/<command>.<format>)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or jsonl
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// worker threads (0 = all cores); output does not depend on it
    #[arg(long)]
    pub workers: Option<usize>,
    /// skip attaching the analytical bounds
    #[arg(long)]
    pub no_bounds: bool,
    /// also fill the `exact` column (tiny codes only)
    #[arg(long)]
    pub with_exact: bool,
}

#[derive(Debug, Args, Default, Clone)]
pub struct BecArgs {
    #[command(flatten)]
    pub sim: SimulateArgs,
    /// erasure probability
    #[arg(long)]
    pub p: Option<f64>,
    /// transmission-count range a:b[:step] (default k:4k)
    #[arg(long)]
    pub t: Option<String>,
    /// success level for the minimal-T report
    #[arg(long)]
    pub target: Option<f64>,
    /// source of Pr(decode | m received): mc, lower, upper or ideal
    #[arg(long)]
    pub curve: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{field}: {message}")]
    InvalidSpec { field: String, message: String },
    #[error("exact enumeration needs {required:.3e} weighted terms, budget is {budget:.3e}")]
    BudgetExceeded { required: f64, budget: f64 },
    #[error("{}", if path.is_empty() { message.clone() } else { format!("{path}: {message}") })]
    Io { path: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Stable machine-readable code printed with every error.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::InvalidSpec { .. } => "invalid-spec",
            Self::BudgetExceeded { .. } => "budget-exceeded",
            Self::Io { .. } => "io",
            Self::Runtime(_) => "runtime",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::InvalidSpec { .. } => 2,
            Self::BudgetExceeded { .. } => 3,
            Self::Io { .. } => 4,
            Self::Runtime(_) => 1,
        }
    }

    fn spec(field: &str, message: impl Display) -> Self {
        Self::InvalidSpec { field: field.to_string(), message: message.to_string() }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BudgetExceeded { required, budget } => Self::BudgetExceeded { required, budget },
            SimError::InvalidInput(msg) => Self::spec("input", msg),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<persist::PersistError> for CliError {
    fn from(e: persist::PersistError) -> Self {
        match e {
            persist::PersistError::UnknownFormat(f) => Self::spec("format", format!("unknown format `{f}`")),
            other => Self::Io { path: String::new(), message: other.to_string() },
        }
    }
}

/// Parses `args` (including the program name), runs the command, and returns
/// the process exit status. Errors go to `stderr` as
/// `error[<code>]: <message>`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            Ok(e.to_string())
        } else {
            let msg = e.to_string();
            Err(CliError::Usage(msg.lines().next().unwrap_or("").trim_start_matches("error: ").to_string()))
        }
    });
    let result = match parsed {
        Ok(cli) => execute(&cli, stdout, stderr),
        Err(Ok(help)) => {
            let _ = write!(stdout, "{help}");
            return 0;
        }
        Err(Err(e)) => Err(e),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(&Resolver::new(&config, a), stdout, stderr),
        Command::Exact(a) => cmd_exact(&Resolver::new(&config, a), stdout, stderr),
        Command::Simulate(a) => cmd_simulate(&Resolver::new(&config, &a.common), a, stdout, stderr),
        Command::Compare(a) => cmd_compare(&Resolver::new(&config, &a.common), a, stdout, stderr),
        Command::Bec(a) => cmd_bec(&Resolver::new(&config, &a.sim.common), a, stdout, stderr),
    }
}

/// `key = value` pairs; repeated keys accumulate (used for `omega`).
#[derive(Debug, Default, Clone)]
pub struct Config {
    values: HashMap<String, Vec<String>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|(line, msg)| {
            CliError::spec("config", format!("{} line {line}: {msg}", path.display()))
        })
    }

    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut values: HashMap<String, Vec<String>> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| (i + 1, format!("expected key = value, got `{line}`")))?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            values.entry(key).or_default().push(value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn last(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    fn all(&self, key: &str) -> &[String] {
        self.values.get(key).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Merges flags over config values and validates them field by field.
pub struct Resolver<'a> {
    config: &'a Config,
    args: &'a CommonArgs,
}

impl<'a> Resolver<'a> {
    pub fn new(config: &'a Config, args: &'a CommonArgs) -> Self {
        Self { config, args }
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.config
            .last(key)
            .map(|s| s.parse::<T>().map_err(|e| CliError::spec(key, format!("`{s}`: {e}"))))
            .transpose()
    }

    pub fn k(&self) -> Result<usize, CliError> {
        let k = self
            .pick(self.args.k, "k")?
            .ok_or_else(|| CliError::spec("k", "missing (use --k)"))?;
        if k == 0 {
            return Err(CliError::spec("k", "must be at least 1"));
        }
        Ok(k)
    }

    pub fn n(&self) -> Result<usize, CliError> {
        let k = self.k()?;
        let n = self.pick(self.args.n, "n")?.unwrap_or(k + 1);
        if n < k {
            return Err(CliError::spec("n", format!("must be at least k = {k}, got {n}")));
        }
        if n > 64 {
            return Err(CliError::spec("n", "at most 64 intermediate packets are supported"));
        }
        Ok(n)
    }

    pub fn eta(&self) -> Result<f64, CliError> {
        let eta = self.pick(self.args.eta, "eta")?.unwrap_or(DEFAULT_ETA);
        if !(0.0..=1.0).contains(&eta) {
            return Err(CliError::spec("eta", format!("must lie in [0, 1], got {eta}")));
        }
        Ok(eta)
    }

    pub fn omegas(&self) -> Result<Vec<OmegaSpec>, CliError> {
        let raw: Vec<String> = if self.args.omega.is_empty() {
            self.config.all("omega").to_vec()
        } else {
            self.args.omega.clone()
        };
        if raw.is_empty() {
            return Ok(vec![OmegaSpec::Ideal]);
        }
        raw.iter()
            .map(|s| s.parse::<OmegaSpec>().map_err(|e| CliError::spec("omega", e)))
            .collect()
    }

    pub fn config_for(&self, omega: &OmegaSpec) -> Result<RaptorConfig, CliError> {
        let (k, n, eta) = (self.k()?, self.n()?, self.eta()?);
        let dist = omega.build(n).map_err(|e| CliError::spec("omega", format!("{omega}: {e}")))?;
        RaptorConfig::new(k, n, eta, dist).map_err(|e| CliError::spec("config", e))
    }

    /// The single configured code; rejects more than one `--omega`.
    pub fn single_config(&self) -> Result<RaptorConfig, CliError> {
        let omegas = self.omegas()?;
        if omegas.len() != 1 {
            return Err(CliError::spec("omega", "this command takes exactly one distribution"));
        }
        self.config_for(&omegas[0])
    }

    /// `m` values from `--m`, or `--gamma` converted with round-half-up;
    /// defaults to `k:ceil(2.5k)`.
    pub fn ms(&self) -> Result<Vec<usize>, CliError> {
        let k = self.k()?;
        let (m, gamma) = if self.args.m.is_some() || self.args.gamma.is_some() {
            (self.args.m.clone(), self.args.gamma.clone())
        } else {
            (self.config.last("m").map(String::from), self.config.last("gamma").map(String::from))
        };
        let ms = match (m, gamma) {
            (Some(_), Some(_)) => return Err(CliError::spec("m", "give either m or gamma, not both")),
            (Some(s), None) => parse_int_range(&s).map_err(|e| CliError::spec("m", e))?,
            (None, Some(s)) => gamma_to_m(&parse_float_range(&s).map_err(|e| CliError::spec("gamma", e))?, k),
            (None, None) => (k..=(5 * k).div_ceil(2)).collect(),
        };
        if ms.is_empty() {
            return Err(CliError::spec("m", "range is empty"));
        }
        Ok(ms)
    }

    pub fn format(&self) -> Result<Format, CliError> {
        let f: Option<String> = self.pick(self.args.format.clone(), "format")?;
        f.map(|s| s.parse().map_err(|_| CliError::spec("format", format!("expected csv or jsonl, got `{s}`"))))
            .transpose()
            .map(Option::unwrap_or_default)
    }

    /// Output destination: `--out`, else `$RAPTOR_BOUNDS_OUT_DIR/<stem>.<ext>`,
    /// else standard output (`None`).
    pub fn out(&self, stem: &str) -> Result<Option<PathBuf>, CliError> {
        if let Some(p) = self.pick(self.args.out.clone(), "out")? {
            return Ok(Some(p));
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => {
                let dir = PathBuf::from(dir);
                fs::create_dir_all(&dir).map_err(|e| CliError::Io {
                    path: dir.display().to_string(),
                    message: e.to_string(),
                })?;
                Ok(Some(dir.join(format!("{stem}.{}", self.format()?.extension()))))
            }
            _ => Ok(None),
        }
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}

/// Inclusive `a:b[:step]` (or a single value) over integers.
pub fn parse_int_range(s: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |p: &str| p.parse::<usize>().map_err(|_| format!("`{p}` is not a non-negative integer"));
    let (a, b, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1),
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(format!("`{s}` is not of the form a:b[:step]")),
    };
    if step == 0 {
        return Err("step must be positive".into());
    }
    if b < a {
        return Err(format!("range `{s}` is descending"));
    }
    Ok((a..=b).step_by(step).collect())
}

/// Inclusive `a:b[:step]` over reals (step defaults to 0.1).
pub fn parse_float_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |p: &str| match p.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{p}` is not a finite number")),
    };
    let (a, b, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1.0),
        [a, b] => (num(a)?, num(b)?, 0.1),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(format!("`{s}` is not of the form a:b[:step]")),
    };
    if step <= 0.0 {
        return Err("step must be positive".into());
    }
    if b < a {
        return Err(format!("range `{s}` is descending"));
    }
    // tolerate the rounding in a + i·step landing just past b
    let count = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| a + i as f64 * step).collect())
}

/// `m = floor(gamma·k + 1/2)`, dropping repeats and negatives.
pub fn gamma_to_m(gammas: &[f64], k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &g in gammas {
        // the product can land a hair below an exact .5; nudge before flooring
        let m = (g * k as f64 + 0.5 + 1e-9).floor();
        if m < 0.0 {
            continue;
        }
        let m = m as usize;
        if out.last().is_none_or(|&last| m > last) {
            out.push(m);
        }
    }
    out
}

/// Small typed table written as CSV or JSONL.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell_text))?;
                }
                w.flush()
            }
            Format::Jsonl => {
                for row in &self.rows {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .map(|h| h.to_string())
                        .zip(row.iter().cloned())
                        .collect();
                    writeln!(out, "{}", Value::Object(obj))?;
                }
                Ok(())
            }
        }
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => fmt_g17(n.as_f64().unwrap_or(f64::NAN)),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn emit(
    table: &Table,
    res: &Resolver,
    stem: &str,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let format = res.format()?;
    match res.out(stem)? {
        Some(path) => {
            let io = |e: std::io::Error| CliError::Io { path: path.display().to_string(), message: e.to_string() };
            let mut f = std::io::BufWriter::new(fs::File::create(&path).map_err(io)?);
            table.write(format, &mut f).map_err(io)?;
            f.flush().map_err(io)?;
            let _ = writeln!(stderr, "wrote {} rows to {}", table.rows.len(), path.display());
        }
        None => table
            .write(format, stdout)
            .map_err(|e| CliError::Io { path: "<stdout>".into(), message: e.to_string() })?,
    }
    Ok(())
}

fn emit_records(
    records: &[SweepRecord],
    res: &Resolver,
    stem: &str,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let format = res.format()?;
    match res.out(stem)? {
        Some(path) => {
            persist::persist(records, &path, format)?;
            let _ = writeln!(stderr, "wrote {} records to {}", records.len(), path.display());
        }
        None => persist::write_records(records, format, stdout)?,
    }
    Ok(())
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn cmd_bounds(res: &Resolver, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = res.single_config()?;
    let ms = res.ms()?;
    let tables = BoundTables::<f64>::new(&cfg);
    let binomial = matches!(res.omegas()?[0], OmegaSpec::Binomial);
    let mut header = vec!["m", "gamma", "lower", "upper", "lower_raw", "upper_raw"];
    if binomial {
        header.extend(["closed_lower", "closed_upper", "lower_agrees", "upper_agrees"]);
    }
    let mut table = Table::new(header);
    let mut disagreements = 0;
    for &m in &ms {
        let pt = tables.point(m);
        let mut row = vec![
            Value::from(m),
            num(pt.gamma),
            num(pt.lower),
            num(pt.upper),
            num(pt.lower_raw),
            num(pt.upper_raw),
        ];
        if binomial {
            let c = bounds::binomial_closed_point::<f64>(m, cfg.k(), cfg.n());
            let lo_ok = rel_diff(pt.lower_raw, c.lower_raw) <= CROSS_CHECK_TOL;
            let up_ok = rel_diff(pt.upper_raw, c.upper_raw) <= CROSS_CHECK_TOL;
            disagreements += usize::from(!lo_ok) + usize::from(!up_ok);
            row.extend([num(c.lower), num(c.upper), Value::from(lo_ok), Value::from(up_ok)]);
        }
        table.push(row);
    }
    if binomial && disagreements > 0 {
        let _ = writeln!(
            stderr,
            "note: {disagreements} bound value(s) differ from the binomial closed forms by more than {CROSS_CHECK_TOL:e} (relative)"
        );
    }
    emit(&table, res, "bounds", stdout, stderr)
}

pub fn cmd_exact(res: &Resolver, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = res.single_config()?;
    let ms = res.ms()?;
    let worst = *ms.iter().max().expect("non-empty");
    let required = sim::exact_budget_required(cfg.k(), cfg.n(), worst);
    if required > sim::EXACT_BUDGET {
        return Err(CliError::BudgetExceeded { required, budget: sim::EXACT_BUDGET });
    }
    let tables = BoundTables::<f64>::new(&cfg);
    let mut table = Table::new(vec!["m", "gamma", "exact", "lower", "upper", "sandwich"]);
    let mut violations = 0;
    for &m in &ms {
        let exact = sim::exact_small(&cfg, m, sim::EXACT_BUDGET)?;
        let pt = tables.point(m);
        let ok = pt.lower <= exact + SANDWICH_TOL && exact <= pt.upper + SANDWICH_TOL;
        violations += usize::from(!ok);
        table.push(vec![
            Value::from(m),
            num(pt.gamma),
            num(exact),
            num(pt.lower),
            num(pt.upper),
            Value::from(if ok { "ok" } else { "violated" }),
        ]);
    }
    if violations > 0 {
        let _ = writeln!(stderr, "warning: {violations} row(s) fall outside [lower, upper]");
    }
    emit(&table, res, "exact", stdout, stderr)
}

struct RunParams {
    trials: u64,
    seed: u64,
    workers: usize,
}

fn run_params(res: &Resolver, a: &SimulateArgs) -> Result<RunParams, CliError> {
    let trials = res.get(a.trials, "trials", DEFAULT_TRIALS)?;
    if trials == 0 {
        return Err(CliError::spec("trials", "must be at least 1"));
    }
    Ok(RunParams {
        trials,
        seed: res.get(a.seed, "seed", DEFAULT_SEED)?,
        workers: res.get(a.workers, "workers", 0)?,
    })
}

fn sweep_one(
    sim: &Simulator,
    cfg: &RaptorConfig,
    ms: &[usize],
    rp: &RunParams,
    a: &SimulateArgs,
) -> Result<Vec<SweepRecord>, CliError> {
    let mut records = sim.sweep(cfg, ms, rp.trials, rp.seed, !a.no_bounds)?;
    if a.with_exact {
        for r in &mut records {
            r.exact = Some(sim::exact_small(cfg, r.m, sim::EXACT_BUDGET)?);
        }
    }
    Ok(records)
}

fn summarize(records: &[SweepRecord], stderr: &mut dyn Write) {
    let outside = records
        .iter()
        .filter(|r| match (r.lower, r.upper) {
            (Some(lo), Some(hi)) => {
                let sigma = (r.ci_high - r.ci_low) / 2.0 / sim::Z_95;
                r.mc_estimate < lo - 3.0 * sigma || r.mc_estimate > hi + 3.0 * sigma
            }
            _ => false,
        })
        .count();
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        let _ = writeln!(
            stderr,
            "{} [{}]: m {}..{}, estimate {:.6} -> {:.6}, {outside} point(s) outside the 3-sigma bound band",
            first.omega,
            records.len(),
            first.m,
            last.m,
            first.mc_estimate,
            last.mc_estimate
        );
    }
}

pub fn cmd_simulate(
    res: &Resolver,
    a: &SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = res.single_config()?;
    let ms = res.ms()?;
    let rp = run_params(res, a)?;
    let sim = Simulator::new(rp.workers)?;
    let records = sweep_one(&sim, &cfg, &ms, &rp, a)?;
    summarize(&records, stderr);
    emit_records(&records, res, "simulate", stdout, stderr)
}

pub fn cmd_compare(
    res: &Resolver,
    a: &SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let omegas = res.omegas()?;
    if omegas.len() < 2 {
        return Err(CliError::spec("omega", "compare needs at least two distributions"));
    }
    let ms = res.ms()?;
    let rp = run_params(res, a)?;
    let sim = Simulator::new(rp.workers)?;
    let mut records = Vec::with_capacity(omegas.len() * ms.len());
    for omega in &omegas {
        let cfg = res.config_for(omega)?;
        let part = sweep_one(&sim, &cfg, &ms, &rp, a)?;
        summarize(&part, stderr);
        records.extend(part);
    }
    emit_records(&records, res, "compare", stdout, stderr)
}

pub fn cmd_bec(
    res: &Resolver,
    a: &BecArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = res.single_config()?;
    let k = cfg.k();
    let p = res
        .pick(a.p, "p")?
        .ok_or_else(|| CliError::spec("p", "missing erasure probability (use --p)"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::spec("p", format!("must lie in [0, 1], got {p}")));
    }
    let ts = match res.pick(a.t.clone(), "t")? {
        Some(s) => parse_int_range(&s).map_err(|e| CliError::spec("t", e))?,
        None => (k..=4 * k).collect(),
    };
    let target = res.get(a.target, "target", DEFAULT_TARGET)?;
    if !(0.0..=1.0).contains(&target) {
        return Err(CliError::spec("target", format!("must lie in [0, 1], got {target}")));
    }
    let source: CurveSource = res
        .get(a.curve.clone(), "curve", "mc".to_string())?
        .parse()
        .map_err(|e: SimError| CliError::spec("curve", e))?;
    let rp = run_params(res, &a.sim)?;
    let sim = Simulator::new(rp.workers)?;

    let t_max = *ts.last().expect("non-empty range");
    let raptor = sim.success_curve(&cfg, t_max, rp.trials, rp.seed, source)?;
    let ideal = sim.success_curve(&cfg, t_max, 1, rp.seed, CurveSource::Ideal)?;
    let bec = |curve: &[f64], t: usize| {
        bounds::bec_success(t, p, |m| curve[m], k).map_err(|e| CliError::spec("p", e))
    };

    let mut table = Table::new(vec!["t", "p", "raptor", "ideal"]);
    for &t in &ts {
        table.push(vec![Value::from(t), num(p), num(bec(&raptor, t)?), num(bec(&ideal, t)?)]);
    }
    let min_t = |curve: &[f64]| {
        bounds::min_transmissions(p, |m| curve[m], k, target, t_max).map_err(|e| CliError::spec("p", e))
    };
    let (t_raptor, t_ideal) = (min_t(&raptor)?, min_t(&ideal)?);
    let show = |t: Option<usize>| t.map_or(format!("not reached by T = {t_max}"), |t| t.to_string());
    let _ = writeln!(stderr, "minimal T for P_suc >= {target}: raptor {}, ideal {}", show(t_raptor), show(t_ideal));
    if let (Some(r), Some(i)) = (t_raptor, t_ideal) {
        let _ = writeln!(stderr, "raptor/ideal transmission ratio: {:.4}", r as f64 / i as f64);
    }
    emit(&table, res, "bec", stdout, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut argv = vec!["raptor-bounds"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn int_ranges() {
        assert_eq!(parse_int_range("20:50").unwrap().len(), 31);
        assert_eq!(parse_int_range("30").unwrap(), vec![30]);
        assert_eq!(parse_int_range("2:9:3").unwrap(), vec![2, 5, 8]);
        assert!(parse_int_range("5:2").is_err());
        assert!(parse_int_range("1:2:0").is_err());
        assert!(parse_int_range("a:b").is_err());
    }

    #[test]
    fn gamma_rounds_half_up() {
        // 1.025 * 20 = 20.5 -> 21; 1.075 * 20 = 21.5 -> 22
        assert_eq!(gamma_to_m(&[1.0, 1.025, 1.075], 20), vec![20, 21, 22]);
        let g = parse_float_range("1:2.5:0.05").unwrap();
        assert_eq!(g.len(), 31);
        assert_eq!(gamma_to_m(&g, 20), (20..=50).collect::<Vec<_>>());
        // duplicates collapse
        assert_eq!(gamma_to_m(&[1.0, 1.01, 1.02], 10), vec![10]);
    }

    #[test]
    fn config_parsing_and_precedence() {
        let cfg = Config::parse("# comment\nk = 4\nn=6\neta = 0.25 # inline\nomega = ideal\nomega = binomial\n").unwrap();
        let args = CommonArgs { k: Some(3), ..Default::default() };
        let res = Resolver::new(&cfg, &args);
        assert_eq!(res.k().unwrap(), 3);
        assert_eq!(res.n().unwrap(), 6);
        assert_eq!(res.eta().unwrap(), 0.25);
        assert_eq!(res.omegas().unwrap().len(), 2);
        assert!(Config::parse("k 4").is_err());
    }

    #[test]
    fn defaults() {
        let cfg = Config::default();
        let args = CommonArgs { k: Some(20), ..Default::default() };
        let res = Resolver::new(&cfg, &args);
        assert_eq!(res.n().unwrap(), 21);
        assert_eq!(res.ms().unwrap(), (20..=50).collect::<Vec<_>>());
        assert_eq!(res.format().unwrap(), Format::Csv);
    }

    #[test]
    fn bounds_row_count() {
        let (code, out, _) = run_capture(&["bounds", "--k", "20", "--n", "21", "--eta", "0.7", "--omega", "ideal", "--m", "20:50"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 32);
        assert!(out.starts_with("m,gamma,lower,upper,lower_raw,upper_raw\n"));
    }

    #[test]
    fn three_gpp_needs_eleven() {
        let (code, _, err) = run_capture(&["bounds", "--k", "5", "--n", "10", "--omega", "3gpp", "--m", "5"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error[invalid-spec]: omega"), "{err}");
    }

    #[test]
    fn exact_hand_value_and_budget() {
        let (code, out, _) = run_capture(&["exact", "--k", "1", "--n", "2", "--eta", "0", "--omega", "binomial", "--m", "1"]);
        assert_eq!(code, 0);
        let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[2].parse::<f64>().unwrap(), 2.0 / 3.0);
        let (code, _, err) = run_capture(&["exact", "--k", "20"]);
        assert_eq!(code, 3);
        assert!(err.starts_with("error[budget-exceeded]"), "{err}");
    }

    #[test]
    fn compare_needs_two() {
        let (code, _, err) = run_capture(&["compare", "--k", "4", "--omega", "ideal", "--m", "4:6", "--trials", "10"]);
        assert_eq!(code, 2);
        assert!(err.contains("at least two"));
        let (code, out, _) = run_capture(&[
            "compare", "--k", "4", "--omega", "ideal", "--omega", "robust(0.04,0.01)", "--m", "4:6", "--trials", "10",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 1 + 2 * 3);
    }

    #[test]
    fn usage_errors_are_coded() {
        let (code, _, err) = run_capture(&["bounds", "--k", "x"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error[usage]"), "{err}");
        let (code, _, err) = run_capture(&["bounds", "--k", "4", "--m", "4", "--gamma", "1"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error[usage]"), "{err}");
    }

    #[test]
    fn bec_edges() {
        let (code, out, err) = run_capture(&["bec", "--k", "1", "--n", "1", "--p", "1", "--t", "1:3", "--curve", "ideal"]);
        assert_eq!(code, 0, "{err}");
        for line in out.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[2], "0");
            assert_eq!(cols[3], "0");
        }
        let (code, _, _) = run_capture(&["bec", "--k", "2", "--t", "2:4"]);
        assert_eq!(code, 2);
    }
}
