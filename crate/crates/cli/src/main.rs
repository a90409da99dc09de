//! `dmkit` command-line front end.
//!
//! Exit codes: 0 success, 1 domain or validation error, 2 usage error.

mod input;
mod manifest;
mod selftest;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dmkit::adf::{adf_test, verify_critical_values};
use dmkit::dm::{CriticalValueTable, CvRegimeKind, LEVELS};
use dmkit::empirical::report::write_report;
use dmkit::empirical::{load_price_index, run_pipeline, to_quarterly_yoy, Aggregation, Ar1Mode, EmpiricalConfig, Growth, Quarter};
use dmkit::limit::{
    cv_fixed_b, default_b_grid, default_fixed_b_table, limit_quantiles, write_limit_quantiles_csv, LimitRegime, DEFAULT_GRID,
    DEFAULT_TABLE_PATHS, DEFAULT_TABLE_SEED, DIAGNOSTIC_PROBS,
};
use dmkit::mc::{run_rejection_table_with, DeltaSpec, DgpSpec, ExperimentSpec, DEFAULT_REPLICATIONS, PAPER_PHI};
use dmkit::{dm_a, dm_p, BandwidthRule, CvRegime, Estimator, LossDifferential, Series};

use manifest::{manifest_path, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "dmkit", version, about = "Diebold–Mariano tests under strong dependence")]
struct Cli {
    /// Maximum worker threads for simulations (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// DM test on a loss-differential series.
    DmTest(DmTestArgs),
    /// Monte Carlo rejection-frequency tables.
    Mc(McArgs),
    /// Simulated fixed-b critical values and limit-law diagnostics.
    LimitCv(LimitCvArgs),
    /// Augmented Dickey–Fuller test with BIC lag selection.
    Adf(AdfArgs),
    /// Rolling-window inflation forecast evaluation.
    Empirical(EmpiricalArgs),
    /// Hand-computable checks; exits 1 on any mismatch.
    Selftest,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum EstimatorArg {
    #[value(alias = "autocov", alias = "a")]
    Bartlett,
    #[value(alias = "periodogram", alias = "p")]
    Daniell,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Bartlett => Estimator::BartlettAutocov,
            EstimatorArg::Daniell => Estimator::DaniellPeriodogram,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CvArg {
    /// Standard normal.
    Normal,
    /// Fixed-smoothing: t_{2m} for Daniell, fixed-b for Bartlett.
    Fixed,
}

#[derive(Debug, Args, Serialize)]
struct DmTestArgs {
    /// CSV with the loss differential (one numeric column, header optional).
    #[arg(long = "in")]
    input: PathBuf,
    /// Column name or 0-based index (default: last column).
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_enum)]
    estimator: EstimatorArg,
    /// Bandwidth: M for Bartlett, m for Daniell.
    #[arg(long = "m", alias = "M", conflicts_with = "rule")]
    bandwidth: Option<usize>,
    /// Bandwidth rule such as `T^{1/3}`, `1` or `T`.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long, value_enum, default_value = "fixed")]
    cv: CvArg,
    /// Fixed-b table CSV (default: the built-in simulated table).
    #[arg(long)]
    cv_table: Option<PathBuf>,
    /// Write the result as CSV (plus a run manifest).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DgpArg {
    Regression,
    NearUnit,
}

#[derive(Debug, Args, Serialize)]
struct McArgs {
    /// 1: Bartlett with fixed-b critical values; 2: Daniell with t_{2m}.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    table: u8,
    #[arg(long = "T", value_delimiter = ',', default_values_t = vec![50usize, 100])]
    lens: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    phi: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Intercept giving E(d_t) = −1 instead of 0.
    #[arg(long)]
    power: bool,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, value_enum, default_value = "regression")]
    dgp: DgpArg,
    /// Near-unit design: values of c.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    c: Option<Vec<f64>>,
    /// Near-unit design: exponent α (1 = local to unity).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Replace the preset bandwidth rules (comma-separated).
    #[arg(long, value_delimiter = ',')]
    rules: Option<Vec<String>>,
    #[arg(long)]
    cv_table: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct LimitCvArgs {
    #[arg(long, default_value_t = DEFAULT_TABLE_PATHS)]
    paths: usize,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_TABLE_SEED)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    b_grid: Option<Vec<f64>>,
    /// Fixed-b table output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write quantiles of the sampled limit statistics here.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// c values for the diagnostics.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![0.0, -5.0, -20.0])]
    c: Vec<f64>,
    /// b for the fixed-b regimes in the diagnostics.
    #[arg(long, default_value_t = 0.1)]
    b: f64,
    /// m for the fixed-m regimes in the diagnostics.
    #[arg(long, default_value_t = 1)]
    m: usize,
}

#[derive(Debug, Args, Serialize)]
struct AdfArgs {
    #[arg(long = "in", required_unless_present = "verify")]
    input: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
    /// Largest candidate lag (default ⌊12 (T/100)^{1/4}⌋).
    #[arg(long)]
    max_lags: Option<usize>,
    /// Re-derive the embedded critical values by simulation.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 50_000)]
    reps: usize,
    #[arg(long, default_value_t = 1000)]
    len: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum AggregationArg {
    Mean,
    End,
}

#[derive(Debug, Args, Serialize)]
struct EmpiricalArgs {
    /// Monthly price index CSV (date,value) or, with the `fetch` feature, a URL.
    #[arg(long = "in")]
    input: String,
    #[arg(long, default_value = "2010Q1")]
    eval_start: String,
    #[arg(long, default_value = "2020Q4")]
    eval_end: String,
    #[arg(long, default_value_t = 40)]
    window: usize,
    #[arg(long, default_value_t = 8)]
    max_horizon: usize,
    /// Direct instead of iterated multi-step AR(1) forecasts.
    #[arg(long)]
    direct: bool,
    #[arg(long, value_enum, default_value = "mean")]
    aggregation: AggregationArg,
    /// Log instead of simple year-on-year growth.
    #[arg(long)]
    log: bool,
    #[arg(long)]
    cv_table: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be ≥ 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    let start = Instant::now();
    match cmd {
        Command::DmTest(a) => dm_test(a, start),
        Command::Mc(a) => mc(a, start),
        Command::LimitCv(a) => limit_cv(a, start),
        Command::Adf(a) => adf(a),
        Command::Empirical(a) => empirical(a, start),
        Command::Selftest => selftest(),
    }
}

fn load_table(path: Option<&Path>) -> Result<CriticalValueTable> {
    match path {
        Some(p) => {
            let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let t = CriticalValueTable::read_csv(f, DEFAULT_GRID)?;
            if t.regime != CvRegimeKind::FixedB {
                bail!("{} is not a fixed-b table", p.display());
            }
            Ok(t)
        }
        None => Ok(default_fixed_b_table()?.clone()),
    }
}

fn write_manifest(cmd: &str, params: &impl Serialize, seed: Option<u64>, start: Instant, out: &Path, files: &[PathBuf]) -> Result<()> {
    let m = RunManifest::new(cmd, serde_json::to_value(params)?, seed, start.elapsed(), files)?;
    m.write(&manifest_path(out))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).map_err(Into::into),
    }
}

fn dm_test(a: DmTestArgs, start: Instant) -> Result<ExitCode> {
    let values = input::read_column(&a.input, a.column.as_deref())?;
    let d = LossDifferential::from_series(Series::new(values)?);
    let bandwidth = match (a.bandwidth, &a.rule) {
        (Some(b), _) => b,
        (None, Some(r)) => r.parse::<BandwidthRule>()?.evaluate(d.len()),
        (None, None) => bail!("one of --m or --rule is required"),
    };
    let table;
    let r = match (a.estimator, a.cv) {
        (EstimatorArg::Bartlett, CvArg::Normal) => dm_a(&d, bandwidth, CvRegime::StandardNormal)?,
        (EstimatorArg::Bartlett, CvArg::Fixed) => {
            table = load_table(a.cv_table.as_deref())?;
            dm_a(&d, bandwidth, CvRegime::FixedB(&table))?
        }
        (EstimatorArg::Daniell, CvArg::Normal) => dm_p(&d, bandwidth, CvRegime::StandardNormal)?,
        (EstimatorArg::Daniell, CvArg::Fixed) => dm_p(&d, bandwidth, CvRegime::FixedM)?,
    };
    println!("estimator  {}", r.estimator.name());
    println!("T          {}", d.len());
    println!("bandwidth  {}", r.bandwidth);
    println!("mean       {:.6}", r.mean_loss_diff);
    println!("lrv        {:.6}", r.lrv);
    println!("statistic  {:.5}", r.statistic);
    println!("cv         {} (10%: {:.5}, 5%: {:.5})", r.cv_regime.name(), r.cv_10, r.cv_5);
    println!("reject     10%: {}, 5%: {} {}", r.reject_10, r.reject_5, r.stars());
    if let Some(out) = &a.out {
        let mut wr = csv::Writer::from_path(out)?;
        wr.write_record(["estimator", "T", "bandwidth", "mean", "lrv", "statistic", "cv_regime", "cv_10", "cv_5", "reject_10", "reject_5"])?;
        wr.write_record([
            r.estimator.name().to_string(),
            d.len().to_string(),
            r.bandwidth.to_string(),
            format!("{:.10}", r.mean_loss_diff),
            format!("{:.10}", r.lrv),
            format!("{:.10}", r.statistic),
            r.cv_regime.name().to_string(),
            format!("{:.6}", r.cv_10),
            format!("{:.6}", r.cv_5),
            r.reject_10.to_string(),
            r.reject_5.to_string(),
        ])?;
        wr.flush()?;
        write_manifest("dm-test", &a, None, start, out, std::slice::from_ref(out))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn mc(a: McArgs, start: Instant) -> Result<ExitCode> {
    let mut spec = ExperimentSpec::paper_table(a.table, a.lens.clone(), a.reps, a.seed)?;
    match a.dgp {
        DgpArg::Regression => {
            spec.params = a.phi.clone().unwrap_or_else(|| PAPER_PHI.to_vec());
            if a.power {
                spec = spec.with_delta(DeltaSpec::Power);
            }
        }
        DgpArg::NearUnit => {
            spec.dgp = DgpSpec::near_unit(a.alpha);
            spec.params = a.c.clone().unwrap_or_else(|| vec![0.0, -1.0, -5.0, -20.0]);
        }
    }
    if let Some(rules) = &a.rules {
        spec.bandwidths = rules.iter().map(|r| r.parse()).collect::<dmkit::Result<_>>()?;
    }
    spec.level = a.level;
    spec.validate()?;
    let table = match spec.cv_regime {
        CvRegimeKind::FixedB => Some(load_table(a.cv_table.as_deref())?),
        _ => None,
    };
    let t = run_rejection_table_with(&spec, table.as_ref())?;
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    write_output(a.out.as_deref(), &buf)?;
    if let Some(out) = &a.out {
        write_manifest("mc", &a, Some(a.seed), start, out, std::slice::from_ref(out))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn limit_cv(a: LimitCvArgs, start: Instant) -> Result<ExitCode> {
    let b_grid = a.b_grid.clone().unwrap_or_else(default_b_grid);
    let table = cv_fixed_b(&b_grid, &LEVELS, a.paths, a.grid, a.seed)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_output(a.out.as_deref(), &buf)?;
    let mut files: Vec<PathBuf> = a.out.iter().cloned().collect();
    if let Some(diag) = &a.diagnostics {
        let regimes = [
            LimitRegime::Thm1A,
            LimitRegime::Thm1P,
            LimitRegime::Thm2A { b: a.b },
            LimitRegime::Thm2P { m: a.m },
            LimitRegime::NullFixedB { b: a.b },
        ];
        let rows = limit_quantiles(&a.c, &regimes, &DIAGNOSTIC_PROBS, a.paths, a.grid, a.seed)?;
        write_limit_quantiles_csv(&rows, fs::File::create(diag)?)?;
        files.push(diag.clone());
    }
    if let Some(first) = files.first() {
        write_manifest("limit-cv", &a, Some(a.seed), start, first, &files)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn adf(a: AdfArgs) -> Result<ExitCode> {
    if let Some(path) = &a.input {
        let y = Series::new(input::read_column(path, a.column.as_deref())?)?;
        let r = adf_test(&y, a.max_lags)?;
        println!("statistic  {:.4}{}", r.statistic, r.stars());
        println!("lags       {} (max {}, BIC)", r.selected_lags, r.max_lags);
        println!("nobs       {}", r.nobs);
        println!("cv         10%: {:.2}, 5%: {:.2}", r.cv_10, r.cv_5);
        println!("reject     10%: {}, 5%: {}", r.reject_10, r.reject_5);
    }
    if a.verify {
        let v = verify_critical_values(a.reps, a.len, a.seed)?;
        println!("verify     {} random walks, T = {}, seed {}", v.replications, v.len, v.seed);
        println!("simulated  10%: {:.4}, 5%: {:.4}", v.simulated_10, v.simulated_5);
        println!("max |diff| {:.4}", v.max_abs_diff);
        if v.max_abs_diff > 0.03 {
            eprintln!("error: simulated critical values differ from the embedded ones by more than 0.03");
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn empirical(a: EmpiricalArgs, start: Instant) -> Result<ExitCode> {
    let monthly = load_price_index(&a.input)?;
    let agg = match a.aggregation {
        AggregationArg::Mean => Aggregation::Mean,
        AggregationArg::End => Aggregation::EndOfQuarter,
    };
    let growth = if a.log { Growth::Log } else { Growth::Simple };
    let inflation = to_quarterly_yoy(&monthly, agg, growth)?;
    if a.max_horizon == 0 {
        bail!("--max-horizon must be ≥ 1");
    }
    let config = EmpiricalConfig {
        window: a.window,
        horizons: (1..=a.max_horizon).collect(),
        eval_start: a.eval_start.parse::<Quarter>()?,
        eval_end: a.eval_end.parse::<Quarter>()?,
        ar1_mode: if a.direct { Ar1Mode::Direct } else { Ar1Mode::Iterated },
        ..EmpiricalConfig::default()
    };
    let table = load_table(a.cv_table.as_deref())?;
    let report = run_pipeline(&inflation, &config, &table)?;
    let files = write_report(&report, &a.out)?;
    write_manifest("empirical", &a, None, start, &a.out, &files)?;
    for c in report.comparisons.iter().filter(|c| c.horizon == 1) {
        let a2 = &c.dm_a[0];
        let p1 = &c.dm_p[0];
        println!(
            "h=1 vs {:<4} mean d {:>8.3}  DM_A(M={}) {:>8.3}{:<2}  DM_P(m={}) {:>8.3}{}",
            c.benchmark.to_string(),
            c.summary.mean,
            a2.bandwidth,
            a2.statistic.unwrap_or(f64::NAN),
            a2.stars,
            p1.bandwidth,
            p1.statistic.unwrap_or(f64::NAN),
            p1.stars
        );
    }
    println!("wrote {} files to {}", files.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn selftest() -> Result<ExitCode> {
    let checks = selftest::run()?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.ok() { "PASS" } else { "FAIL" };
        println!("{tag}  {:<36} got {:.12}  want {:.12}", c.name, c.got, c.want);
        failed += usize::from(!c.ok());
    }
    println!("{} checks, {} failed", checks.len(), failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
