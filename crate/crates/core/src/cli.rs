//! `movsum` command-line driver.
//!
//! Each subcommand resolves its parameters (flags over `--config` file over
//! defaults), runs one operation, and writes `<subcommand>.csv` plus
//! `<subcommand>.json` into `--out`. The JSON report embeds the resolved
//! configuration and seed and carries no timestamps, so equal inputs give
//! byte-identical reports.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conditions::{condition_report, fmt_real, scaling_ratio, ConditionParams, MomentMode};
use crate::error::{Error, Result};
use crate::model::NamedModel;
use crate::ruin::{ruin_probability, simulate_surplus, RuinMethod, Scenario};
use crate::scalar::Real;
use crate::sums::{window_variance, BlockRule, OffsetRule, VarianceMode};
use crate::weakconv::{
    cvm_to_normal, ecf_scalar, fdd_covariance_check, fdd_ensemble, gof::ks_statistic, ks_cutoff, ks_to_normal,
    mc_normalized_sums, newman_verify, CheckRecord, ReplicateEnsemble, CF_SLACK_FACTOR, DEFAULT_CF_GRID,
};
use crate::PathSampler;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_IO: i32 = 4;

const SUBCOMMANDS: &str = "generate, variance, conditions, clt, fdd, newman, ruin";
const DEFAULT_FDD_GRID: [f64; 3] = [0.25, 0.5, 1.0];
/// Cutoff on the largest fdd covariance deviation.
const FDD_COVARIANCE_CUTOFF: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "movsum", version, about = "Central limit theorems for moving partial sums: simulation and checks")]
struct Cli {
    /// Worker threads for replicate generation (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write sample paths of X_{p+1}, ..., X_{p+n}.
    Generate(RunArgs),
    /// Exact (and optionally Monte-Carlo) variance of the moving sum.
    Variance(RunArgs),
    /// Lyapounov, Lindeberg, UAN and block statistics with verdicts.
    Conditions(RunArgs),
    /// Goodness of fit of S'_n / s'_n to N(0, 1).
    Clt(RunArgs),
    /// Finite-dimensional distributions of Y_n(t) against a(t_j) ∧ a(t_h).
    Fdd(RunArgs),
    /// Newman's inequality for (X_1, ..., X_k).
    Newman(RunArgs),
    /// Ruin probability of a surplus scenario.
    Ruin(RunArgs),
}

impl Command {
    fn split(self) -> (&'static str, RunArgs) {
        match self {
            Command::Generate(a) => ("generate", a),
            Command::Variance(a) => ("variance", a),
            Command::Conditions(a) => ("conditions", a),
            Command::Clt(a) => ("clt", a),
            Command::Fdd(a) => ("fdd", a),
            Command::Newman(a) => ("newman", a),
            Command::Ruin(a) => ("ruin", a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Precision {
    F64,
    F32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RuinMethods {
    ExactSim,
    BrownianApprox,
    Both,
}

#[derive(Debug, Clone, Default, Args)]
struct RunArgs {
    /// JSON config with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model description (JSON).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Ruin scenario (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Offset p(n): an integer, or a multiple of n such as `n` or `2n`.
    #[arg(long)]
    p: Option<String>,
    /// Block length: `cbrt` or an integer.
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated time grid (fdd) or cf evaluation points (clt, newman).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    #[arg(long = "R")]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of coordinates for `newman`.
    #[arg(long)]
    k: Option<usize>,
    /// Ruin estimator.
    #[arg(long, value_enum)]
    method: Option<RuinMethods>,
    /// Also evaluate conditions at 4n and report decay ratios.
    #[arg(long)]
    trend: bool,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
}

/// A JSON scalar that may be written as a number or a string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Token {
    Int(u64),
    Text(String),
}

impl Token {
    fn into_string(self) -> String {
        match self {
            Token::Int(v) => v.to_string(),
            Token::Text(s) => s,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: Option<PathBuf>,
    scenario: Option<PathBuf>,
    n: Option<usize>,
    p: Option<Token>,
    ell: Option<Token>,
    delta: Option<f64>,
    eps: Option<f64>,
    grid: Option<Vec<f64>>,
    #[serde(rename = "R")]
    replicates: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    k: Option<usize>,
    method: Option<RuinMethods>,
    trend: Option<bool>,
    precision: Option<Precision>,
}

/// Fully resolved parameters, as embedded in every report.
#[derive(Debug, Clone, Serialize)]
struct Resolved {
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    p: String,
    ell: String,
    delta: f64,
    eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<f64>>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    replicates: Option<usize>,
    seed: u64,
    out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<RuinMethods>,
    trend: bool,
    precision: Precision,
    #[serde(skip)]
    offset: OffsetRule,
    #[serde(skip)]
    block_rule: BlockRule,
}

/// Failure of a run, with its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Schema { .. } => EXIT_USAGE,
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            _ => EXIT_PRECONDITION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn resolve(subcommand: &'static str, args: RunArgs) -> std::result::Result<Resolved, Failure> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| {
                Failure::usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
            })?
        }
        None => ConfigFile::default(),
    };
    let p = args.p.or(file.p.map(Token::into_string)).unwrap_or_else(|| "0".into());
    let offset: OffsetRule = p.parse().map_err(|e| Failure::usage(format!("--p: {e}")))?;
    let ell = args.ell.or(file.ell.map(Token::into_string)).unwrap_or_else(|| "cbrt".into());
    let block_rule: BlockRule = ell.parse().map_err(|e| Failure::usage(format!("--ell: {e}")))?;
    let display = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
    Ok(Resolved {
        subcommand,
        model: display(args.model.or(file.model)),
        scenario: display(args.scenario.or(file.scenario)),
        n: args.n.or(file.n),
        p: offset.to_string(),
        ell: block_rule.to_string(),
        delta: args.delta.or(file.delta).unwrap_or(1.0),
        eps: args.eps.or(file.eps).unwrap_or(0.1),
        grid: args.grid.or(file.grid),
        replicates: args.replicates.or(file.replicates),
        seed: args.seed.or(file.seed).unwrap_or(0),
        out: display(args.out.or(file.out)).unwrap_or_else(|| ".".into()),
        k: args.k.or(file.k),
        method: args.method.or(file.method),
        trend: args.trend || file.trend.unwrap_or(false),
        precision: args.precision.or(file.precision).unwrap_or(Precision::F64),
        offset,
        block_rule,
    })
}

impl Resolved {
    fn need_n(&self) -> std::result::Result<usize, Failure> {
        self.n
            .ok_or_else(|| Failure::usage(format!("`{}` requires --n", self.subcommand)))
    }

    fn load_model(&self) -> std::result::Result<NamedModel, Failure> {
        let path = self
            .model
            .as_ref()
            .ok_or_else(|| Failure::usage(format!("`{}` requires --model", self.subcommand)))?;
        let text = fs::read_to_string(path).map_err(|e| io_failure(Path::new(path), e))?;
        NamedModel::from_json(&text).map_err(|e| match e {
            Error::Schema { .. } => Failure::usage(format!("{path}: {e}")),
            other => other.into(),
        })
    }

    fn replicates_or(&mut self, default: usize) -> usize {
        *self.replicates.get_or_insert(default)
    }
}

/// Output of one subcommand before it is written.
struct Output {
    csv: Vec<u8>,
    results: Value,
    model: Option<Value>,
    extra_csv: Vec<(&'static str, Vec<u8>)>,
}

/// Run the CLI on `args` (including the program name); returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let name = e
                        .get(clap::error::ContextKind::InvalidSubcommand)
                        .map(|v| format!("unknown subcommand `{v}`; "))
                        .unwrap_or_default();
                    eprintln!("movsum: error: {name}valid subcommands: {SUBCOMMANDS}");
                    EXIT_USAGE
                }
                _ => {
                    let text = e.to_string();
                    let line = text.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
                    eprintln!("movsum: error: {line}");
                    EXIT_USAGE
                }
            };
        }
    };
    let (name, args) = cli.command.split();
    let outcome = match cli.threads {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| dispatch(name, args)),
            Err(e) => Err(Failure::usage(format!("--threads: {e}"))),
        },
        None => dispatch(name, args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("movsum: error: {}", f.message.replace('\n', " "));
            f.code
        }
    }
}

fn dispatch(name: &'static str, args: RunArgs) -> std::result::Result<(), Failure> {
    let mut cfg = resolve(name, args)?;
    let output = match name {
        "generate" => generate(&mut cfg)?,
        "variance" => variance(&mut cfg)?,
        "conditions" => conditions(&mut cfg)?,
        "clt" => clt(&mut cfg)?,
        "fdd" => fdd(&mut cfg)?,
        "newman" => newman(&mut cfg)?,
        "ruin" => ruin(&mut cfg)?,
        other => return Err(Failure::usage(format!("unknown subcommand `{other}`; valid subcommands: {SUBCOMMANDS}"))),
    };
    write_outputs(&cfg, output)
}

fn write_outputs(cfg: &Resolved, output: Output) -> std::result::Result<(), Failure> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let mut report = json!({ "subcommand": cfg.subcommand, "config": cfg });
    if let Some(model) = output.model {
        report["model"] = model;
    }
    report["results"] = output.results;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| io_failure(&dir, e))?;
    text.push('\n');
    let write = |file: String, bytes: &[u8]| {
        let path = dir.join(file);
        fs::write(&path, bytes).map_err(|e| io_failure(&path, e))
    };
    write(format!("{}.json", cfg.subcommand), text.as_bytes())?;
    write(format!("{}.csv", cfg.subcommand), &output.csv)?;
    for (suffix, bytes) in &output.extra_csv {
        write(format!("{}_{suffix}.csv", cfg.subcommand), bytes)?;
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn records_csv(records: &[CheckRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &["statistic", "value", "cutoff", "verdict", "R", "seed"],
        records.iter().map(|r| {
            vec![
                r.statistic.clone(),
                fmt_real(r.value),
                fmt_real(r.cutoff),
                if r.verdict { "pass" } else { "fail" }.into(),
                r.replicates.to_string(),
                r.seed.to_string(),
            ]
        }),
    )
}

fn to_value<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn generate(cfg: &mut Resolved) -> std::result::Result<Output, Failure> {
    let named = cfg.load_model()?;
    let n = cfg.need_n()?;
    let replicates = cfg.replicates_or(1);
    let p = cfg.offset.offset(n);
    let sampler = PathSampler::new(&named.model, p, n)?;
    let mut rows = Vec::with_capacity(replicates * n);
    for rep in 0..replicates as u64 {
        match cfg.precision {
            Precision::F64 => push_path::<f64>(&sampler, cfg.seed, rep, &mut rows),
            Precision::F32 => push_path::<f32>(&sampler, cfg.seed, rep, &mut rows),
        }
    }
    Ok(Output {
        csv: csv_bytes(&["replicate", "index", "value"], rows)?,
        results: json!({ "first_index": p + 1, "length": n, "paths": replicates }),
        model: Some(named.to_json()),
        extra_csv: vec![],
    })
}

fn push_path<T: Real>(sampler: &PathSampler, seed: u64, rep: u64, rows: &mut Vec<Vec<String>>) {
    let path = sampler.sample::<T>(seed, rep);
    for (i, x) in path.values.iter().enumerate() {
        rows.push(vec![rep.to_string(), (path.first + i).to_string(), fmt_real(x.as_f64())]);
    }
}

fn variance(cfg: &mut Resolved) -> std::result::Result<Output, Failure> {
    let named = cfg.load_model()?;
    let n = cfg.need_n()?;
    let window = cfg.offset.window(n);
    let exact = window_variance(&named.model, window, VarianceMode::Exact)?;
    let mut rows = vec![vec!["exact".to_string(), fmt_real(exact.value), fmt_real(0.0)]];
    let mut results = json!({ "p": window.p, "n": n, "exact": exact.value });
    if let Some(replicates) = cfg.replicates {
        let mc = window_variance(&named.model, window, VarianceMode::MonteCarlo { replicates, seed: cfg.seed })?;
        rows.push(vec!["monte-carlo".into(), fmt_real(mc.value), fmt_real(mc.std_err)]);
        results["monte_carlo"] = to_value(&mc);
    }
    Ok(Output {
        csv: csv_bytes(&["method", "variance", "std_err"], rows)?,
        results,
        model: Some(named.to_json()),
        extra_csv: vec![],
    })
}

fn conditions(cfg: &mut Resolved) -> std::result::Result<Output, Failure> {
    let named = cfg.load_model()?;
    let n = cfg.need_n()?;
    let moments = match cfg.replicates {
        Some(replicates) => MomentMode::MonteCarlo { replicates, seed: cfg.seed },
        None => MomentMode::Auto,
    };
    let report = condition_report(
        &named.model,
        ConditionParams {
            n,
            offset: cfg.offset,
            block_rule: cfg.block_rule,
            delta: cfg.delta,
            eps: cfg.eps,
            trend: cfg.trend,
            moments,
        },
    )?;
    Ok(Output {
        csv: report.to_csv_string().into_bytes(),
        results: to_value(&report),
        model: Some(named.to_json()),
        extra_csv: vec![],
    })
}

fn ensemble_csv<T: Real>(e: &ReplicateEnsemble<T>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    e.write_csv(&mut buf)?;
    Ok(buf)
}

fn clt_with<T: Real>(cfg: &Resolved, named: &NamedModel, n: usize, replicates: usize) -> Result<Output> {
    let window = cfg.offset.window(n);
    let ens: ReplicateEnsemble<T> =
        mc_normalized_sums::<T>(&named.model, window, replicates, cfg.seed)?.labeled(named.name.clone());
    let ks = ks_to_normal(&ens)?;
    let cvm = cvm_to_normal(&ens)?;
    let grid = cfg.grid.clone().unwrap_or_else(|| DEFAULT_CF_GRID.to_vec());
    let cf = ecf_scalar(&ens, &grid)?;
    let slack = CF_SLACK_FACTOR / (replicates as f64).sqrt();
    let mut records = vec![
        CheckRecord::new("ks", ks, ks_cutoff(replicates), replicates, cfg.seed),
        // Reported for reference; no fixed cutoff.
        CheckRecord::new("cvm", cvm, f64::INFINITY, replicates, cfg.seed),
    ];
    for (t, z) in grid.iter().zip(&cf.values) {
        let gap = (z - num_complex::Complex64::new((-0.5 * t * t).exp(), 0.0)).norm();
        records.push(CheckRecord::new(format!("cf_gap(t={t})"), gap, slack, replicates, cfg.seed));
    }
    Ok(Output {
        csv: records_csv(&records)?,
        results: json!({ "window": { "p": window.p, "n": n }, "checks": records, "cf": cf }),
        model: Some(named.to_json()),
        extra_csv: vec![("ensemble", ensemble_csv(&ens)?)],
    })
}

fn clt(cfg: &mut Resolved) -> std::result::Result<Output, Failure> {
    let named = cfg.load_model()?;
    let n = cfg.need_n()?;
    let replicates = cfg.replicates_or(2000);
    Ok(match cfg.precision {
        Precision::F64 => clt_with::<f64>(cfg, &named, n, replicates)?,
        Precision::F32 => clt_with::<f32>(cfg, &named, n, replicates)?,
    })
}

fn fdd_with<T: Real>(cfg: &Resolved, named: &NamedModel, n: usize, grid: &[f64], replicates: usize) -> Result<Output> {
    let ens: ReplicateEnsemble<T> = fdd_ensemble::<T>(&named.model, n, grid, replicates, cfg.seed)?.labeled(named.name.clone());
    let a = scaling_ratio(&named.model, n, grid)?;
    let cov = fdd_covariance_check(&ens, &a)?;
    let mut records = vec![CheckRecord::new(
        "max_covariance_deviation",
        cov.max_deviation,
        FDD_COVARIANCE_CUTOFF,
        replicates,
        cfg.seed,
    )];
    for (j, (t, at)) in grid.iter().zip(&a.values).enumerate() {
        let ks = ks_statistic(&ens.column(j)?, at.sqrt())?;
        records.push(CheckRecord::new(format!("ks(t={t})"), ks, ks_cutoff(replicates), replicates, cfg.seed));
    }
    Ok(Output {
        csv: records_csv(&records)?,
        results: json!({ "n": n, "scaling": a, "covariance": cov, "checks": records }),
        model: Some(named.to_json()),
        extra_csv: vec![("ensemble", ensemble_csv(&ens)?)],
    })
}

fn fdd(cfg: &mut Resolved) -> std::result::Result<Output, Failure> {
    let named = cfg.load_model()?;
    let n = cfg.need_n()?;
    let replicates = cfg.replicates_or(4000);
    let grid = cfg.grid.get_or_insert_with(|| DEFAULT_FDD_GRID.to_vec()).clone();
    Ok(match cfg.precision {
        Precision::F64 => fdd_with::<f64>(cfg, &named, n, &grid, replicates)?,
        Precision::F32 => fdd_with::<f32>(cfg, &named, n, &grid, replicates)?,
    })
}

/// Diagonal points t(1, ..., 1) and alternating points t(1, -1, ...) for t on the grid.
pub fn newman_points(k: usize, grid: &[f64]) -> Vec<Vec<f64>> {
    let diagonal = grid.iter().map(|&t| vec![t; k]);
    let alternating = grid
        .iter()
        .map(|&t| (0..k).map(|j| if j % 2 == 0 { t } else { -t }).collect());
    diagonal.chain(alternating).collect()
}

fn newman(cfg: &mut Resolved) -> std::result::Result<Output, Failure> {
    let named = cfg.load_model()?;
    let k = *cfg.k.get_or_insert(2);
    let replicates = cfg.replicates_or(10_000);
    let grid = cfg.grid.get_or_insert_with(|| DEFAULT_CF_GRID.to_vec()).clone();
    let points = newman_points(k, &grid);
    let report = newman_verify(&named.model, k, &points, replicates, cfg.seed)?;
    let join = |t: &[f64]| t.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(";");
    let rows = report.points.iter().map(|p| {
        vec![
            join(&p.t),
            fmt_real(p.gap),
            p.exact_gap.map(fmt_real).unwrap_or_default(),
            fmt_real(p.bound),
            fmt_real(p.slack),
            if p.verdict { "pass" } else { "fail" }.into(),
            replicates.to_string(),
            cfg.seed.to_string(),
        ]
    });
    Ok(Output {
        csv: csv_bytes(&["t", "gap", "exact_gap", "bound", "slack", "verdict", "R", "seed"], rows)?,
        results: to_value(&report),
        model: Some(named.to_json()),
        extra_csv: vec![],
    })
}

fn ruin(cfg: &mut Resolved) -> std::result::Result<Output, Failure> {
    let path = cfg
        .scenario
        .clone()
        .ok_or_else(|| Failure::usage("`ruin` requires --scenario"))?;
    let text = fs::read_to_string(&path).map_err(|e| io_failure(Path::new(&path), e))?;
    let scenario = Scenario::from_json(&text).map_err(|e| match e {
        Error::Schema { .. } => Failure::usage(format!("{path}: {e}")),
        other => other.into(),
    })?;
    let replicates = match cfg.replicates {
        Some(r) => r,
        None => cfg.replicates_or(scenario.replicates.unwrap_or(10_000)),
    };
    if cfg.seed == 0 {
        if let Some(seed) = scenario.seed {
            cfg.seed = seed;
        }
    }
    let methods = match *cfg.method.get_or_insert(RuinMethods::Both) {
        RuinMethods::ExactSim => vec![RuinMethod::ExactSim],
        RuinMethods::BrownianApprox => vec![RuinMethod::BrownianApprox],
        RuinMethods::Both => vec![RuinMethod::ExactSim, RuinMethod::BrownianApprox],
    };
    let estimates = methods
        .into_iter()
        .map(|m| ruin_probability(&scenario.surplus, scenario.horizon, replicates, cfg.seed, m))
        .collect::<Result<Vec<_>>>()?;
    let rows = estimates.iter().map(|e| {
        vec![
            to_value(&e.method).as_str().unwrap_or_default().to_string(),
            fmt_real(e.probability),
            fmt_real(e.std_err),
            e.replicates.to_string(),
            e.seed.to_string(),
            e.horizon.to_string(),
        ]
    });
    let csv = csv_bytes(&["method", "probability", "std_err", "R", "seed", "horizon"], rows)?;
    let mut dump = Vec::new();
    simulate_surplus(&scenario.surplus, scenario.horizon, cfg.seed, 0)?.write_csv(&mut dump)?;
    Ok(Output {
        csv,
        results: json!({
            "estimates": estimates,
            "note": "claims may be non-centered; the brownian approximation centers them and carries the mean as a deterministic drift",
        }),
        model: Some(scenario.to_json()),
        extra_csv: vec![("path", dump)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newman_points_shape() {
        let pts = newman_points(3, &[1.0, 2.0]);
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0], vec![1.0, 1.0, 1.0]);
        assert_eq!(pts[3], vec![2.0, -2.0, 2.0]);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["movsum", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["movsum"]), EXIT_USAGE);
        assert_eq!(run(["movsum", "conditions", "--n", "x"]), EXIT_USAGE);
        assert_eq!(run(["movsum", "conditions", "--n", "10"]), EXIT_USAGE);
    }
}
