use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use coxncv::ncv::write_trace_jsonl;
use coxncv::simulation::{sparse_beta, write_summary_csv, SummaryRow, DEFAULT_SIGNAL};
use coxncv::{
    cv_c_index, figure2_data, fit_path, load_csv, ncv_estimate, run_coverage, run_real_data, variance_filter,
    CoverageConfig, CoxLearner, ErrorCategory, FitControl, LambdaRule, LambdaScope, LambdaStrategy, MseFloorPolicy,
    NcvConfig, PenaltySpec, Pooling, SimSpec, SurvivalDataset,
};

#[derive(Parser, Debug)]
#[command(name = "coxncv", version, about = "Penalized Cox fits, CV and nested-CV intervals for the C-index")]
struct Cli {
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the penalized Cox path and write one row per lambda.
    Fit(FitArgs),
    /// K-fold CV C-index with the naive interval.
    Cv(CvArgs),
    /// Nested-CV C-index interval.
    Ncv(NcvArgs),
    /// Coverage experiment on simulated data, or on a CSV with --data.
    Simulate(SimulateArgs),
    /// Test-error measures against sample size.
    Fig2(Fig2Args),
}

/// Options shared by commands that read a dataset and fit the model.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModelArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    time_col: Option<String>,
    #[arg(long)]
    status_col: Option<String>,
    /// Keep only the highest-variance covariates.
    #[arg(long)]
    top_features: Option<usize>,
    /// Elastic-net mixing weight (1 = lasso).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n_lambda: Option<usize>,
    #[arg(long)]
    lambda_min_ratio: Option<f64>,
    /// Use this lambda instead of CV partial-likelihood selection.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    /// Folds used for CV partial-likelihood selection.
    #[arg(long)]
    select_folds: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Rule {
    Max,
    OneSe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PoolingArg {
    PerFold,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum FloorArg {
    Zero,
    AFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ScopeArg {
    PerFit,
    PerTrial,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long)]
    k: Option<usize>,
    /// Interval miscoverage level.
    #[arg(long)]
    level: Option<f64>,
    #[arg(long, value_enum)]
    pooling: Option<PoolingArg>,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NcvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long, value_enum)]
    mse_floor: Option<FloorArg>,
    #[arg(long)]
    max_failure_rate: Option<f64>,
    /// Write the per-split trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Number of leading non-zero true coefficients.
    #[arg(long)]
    n_signal: Option<usize>,
    /// Value of each non-zero true coefficient.
    #[arg(long)]
    signal: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    censoring: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long, value_enum)]
    pooling: Option<PoolingArg>,
    #[arg(long, value_enum)]
    mse_floor: Option<FloorArg>,
    #[arg(long, value_enum)]
    lambda_scope: Option<ScopeArg>,
    #[arg(long)]
    max_failure_rate: Option<f64>,
    /// Also write the one-row summary table as CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Setting label for the summary row.
    #[arg(long)]
    setting: Option<String>,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Fig2Args {
    /// Comma-separated increasing sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n_signal: Option<usize>,
    #[arg(long)]
    signal: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    censoring: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    fit: FitArgs,
    cv: CvArgs,
    ncv: NcvArgs,
    simulate: SimulateArgs,
    fig2: Fig2Args,
}

/// Field-wise `flag.or(file)` for structs whose fields are all `Option`.
macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),* $(,)?) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field.clone(); } )*
    };
}

impl ModelArgs {
    fn overlay(&mut self, file: &ModelArgs) {
        overlay!(self, file; data, time_col, status_col, top_features, alpha, n_lambda, lambda_min_ratio, lambda, rule, select_folds, tol, max_iter);
    }
}

struct Failure {
    category: ErrorCategory,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            category: ErrorCategory::Config,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            category: ErrorCategory::Data,
            message: message.into(),
        }
    }
}

impl From<coxncv::Error> for Failure {
    fn from(e: coxncv::Error) -> Self {
        Failure {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Config => 1,
        ErrorCategory::Data => 2,
        ErrorCategory::Numerical => 3,
    }
}

fn category_name(category: ErrorCategory) -> &'static str {
    match category {
        ErrorCategory::Config => "config",
        ErrorCategory::Data => "data",
        ErrorCategory::Numerical => "numerical",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            report(&Failure::config(first));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(exit_code(f.category))
        }
    }
}

/// One JSON object on one line, so callers can parse failures.
fn report(f: &Failure) {
    let line = serde_json::json!({
        "error": category_name(f.category),
        "code": exit_code(f.category),
        "message": f.message,
    });
    eprintln!("{line}");
}

struct Common {
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

fn run(cli: Cli) -> CliResult<()> {
    let file: ConfigFile = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Failure::config(format!("config {}: {}", path.display(), e.message())))?
        }
        None => ConfigFile::default(),
    };
    if let Some(threads) = cli.threads.or(file.threads) {
        if threads == 0 {
            return Err(Failure::config("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let common = Common {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        out: cli.out.or(file.out),
        format: cli.format.or(file.format).unwrap_or(Format::Json),
    };
    match cli.command {
        Command::Fit(mut a) => {
            a.model.overlay(&file.fit.model);
            cmd_fit(&a, &common)
        }
        Command::Cv(mut a) => {
            a.model.overlay(&file.cv.model);
            overlay!(a, file.cv; k, level, pooling);
            cmd_cv(&a, &common)
        }
        Command::Ncv(mut a) => {
            a.model.overlay(&file.ncv.model);
            overlay!(a, file.ncv; k, repetitions, level, mse_floor, max_failure_rate, trace);
            cmd_ncv(&a, &common)
        }
        Command::Simulate(mut a) => {
            a.model.overlay(&file.simulate.model);
            overlay!(a, file.simulate; n_train, n_test, p, n_signal, signal, noise, censoring, trials, k,
                repetitions, level, pooling, mse_floor, lambda_scope, max_failure_rate, summary, setting);
            cmd_simulate(&a, &common)
        }
        Command::Fig2(mut a) => {
            overlay!(a, file.fig2; n_grid, replicates, p, n_signal, signal, noise, censoring);
            cmd_fig2(&a, &common)
        }
    }
}

fn load(model: &ModelArgs) -> CliResult<SurvivalDataset> {
    let path = model.data.as_ref().ok_or_else(|| Failure::config("--data is required"))?;
    if !path.exists() {
        return Err(Failure::data(format!("data file {} not found", path.display())));
    }
    let ds = load_csv(
        path,
        model.time_col.as_deref().unwrap_or("time"),
        model.status_col.as_deref().unwrap_or("status"),
    )?;
    match model.top_features {
        Some(k) => Ok(variance_filter(&ds, k)?),
        None => Ok(ds),
    }
}

fn penalty(model: &ModelArgs) -> CliResult<PenaltySpec> {
    let mut spec = PenaltySpec::default();
    if let Some(a) = model.alpha {
        spec.alpha = a;
    }
    if let Some(n) = model.n_lambda {
        spec.n_lambda = n;
    }
    spec.lambda_min_ratio = model.lambda_min_ratio;
    spec.validate()?;
    Ok(spec)
}

fn control(model: &ModelArgs) -> FitControl {
    let d = FitControl::default();
    FitControl {
        tol: model.tol.unwrap_or(d.tol),
        max_iter: model.max_iter.unwrap_or(d.max_iter),
    }
}

fn learner(model: &ModelArgs) -> CliResult<CoxLearner> {
    let strategy = match model.lambda {
        Some(lambda) => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Failure::config(format!("--lambda {lambda} must be finite and >= 0")));
            }
            LambdaStrategy::Fixed { lambda }
        }
        None => LambdaStrategy::CvPl {
            rule: match model.rule.unwrap_or(Rule::Max) {
                Rule::Max => LambdaRule::Max,
                Rule::OneSe => LambdaRule::OneSe,
            },
            folds: model.select_folds.unwrap_or(10),
        },
    };
    let control = control(model);
    if !(control.tol > 0.0) || control.max_iter == 0 {
        return Err(Failure::config("--tol and --max-iter must be positive"));
    }
    Ok(CoxLearner {
        control,
        ..CoxLearner::new(penalty(model)?, strategy)
    })
}

fn pooling(p: Option<PoolingArg>) -> Pooling {
    match p.unwrap_or(PoolingArg::PerFold) {
        PoolingArg::PerFold => Pooling::PerFold,
        PoolingArg::Pooled => Pooling::Pooled,
    }
}

fn floor(f: Option<FloorArg>) -> MseFloorPolicy {
    match f.unwrap_or(FloorArg::Zero) {
        FloorArg::Zero => MseFloorPolicy::ZeroFloor,
        FloorArg::AFallback => MseFloorPolicy::AFallback,
    }
}

fn check_level(level: f64) -> CliResult<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(Failure::config(format!("--level {level} must be in (0, 1)")))
    }
}

/// Opens the output target. Called only once results are ready, so failed
/// runs leave no partial output behind.
fn open_out(common: &Common) -> CliResult<Box<dyn Write>> {
    match &common.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn io_fail(e: impl std::fmt::Display) -> Failure {
    Failure::data(format!("write failed: {e}"))
}

fn write_json<T: Serialize>(common: &Common, value: &T) -> CliResult<()> {
    let mut out = open_out(common)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(io_fail)?;
    writeln!(out).map_err(io_fail)?;
    out.flush().map_err(io_fail)
}

fn write_rows(common: &Common, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut out = open_out(common)?;
    writeln!(out, "{}", header.join(",")).map_err(io_fail)?;
    for r in rows {
        writeln!(out, "{}", r.join(",")).map_err(io_fail)?;
    }
    out.flush().map_err(io_fail)
}

#[derive(Serialize)]
struct PathRow {
    lambda: f64,
    nonzero: usize,
    log_pl: f64,
    converged: bool,
    coefficients: Vec<f64>,
}

#[derive(Serialize)]
struct PathOutput {
    features: Vec<String>,
    rows: Vec<PathRow>,
}

fn cmd_fit(a: &FitArgs, common: &Common) -> CliResult<()> {
    let ds = load(&a.model)?;
    let fit = fit_path(&ds, &penalty(&a.model)?, control(&a.model))?;
    let features = ds.feature_labels();
    match common.format {
        Format::Csv => {
            let mut header: Vec<String> = ["lambda", "nonzero", "log_pl", "converged"].map(String::from).to_vec();
            header.extend(features);
            let rows: Vec<Vec<String>> = (0..fit.n_lambda())
                .map(|l| {
                    let mut row = vec![
                        fit.lambda_path[l].to_string(),
                        fit.nonzero_counts[l].to_string(),
                        fit.log_pl_path[l].to_string(),
                        fit.converged[l].to_string(),
                    ];
                    row.extend(fit.beta(l).iter().map(|b| b.to_string()));
                    row
                })
                .collect();
            write_rows(common, &header, &rows)
        }
        Format::Json => {
            let rows = (0..fit.n_lambda())
                .map(|l| PathRow {
                    lambda: fit.lambda_path[l],
                    nonzero: fit.nonzero_counts[l],
                    log_pl: fit.log_pl_path[l],
                    converged: fit.converged[l],
                    coefficients: fit.beta(l),
                })
                .collect();
            write_json(common, &PathOutput { features, rows })
        }
    }
}

fn cmd_cv(a: &CvArgs, common: &Common) -> CliResult<()> {
    let level = check_level(a.level.unwrap_or(0.10))?;
    let learner = learner(&a.model)?;
    let ds = load(&a.model)?;
    let est = cv_c_index(&ds, &learner, a.k.unwrap_or(10), level, common.seed, pooling(a.pooling))?;
    match common.format {
        Format::Json => write_json(common, &est),
        Format::Csv => {
            let header = ["point", "naive_se", "lower", "upper", "alpha", "k"].map(String::from);
            let row = vec![
                est.point.to_string(),
                est.naive_se.to_string(),
                est.interval.0.to_string(),
                est.interval.1.to_string(),
                est.alpha.to_string(),
                est.k.to_string(),
            ];
            write_rows(common, &header, &[row])
        }
    }
}

fn cmd_ncv(a: &NcvArgs, common: &Common) -> CliResult<()> {
    let defaults = NcvConfig::default();
    let config = NcvConfig {
        k: a.k.unwrap_or(defaults.k),
        repetitions: a.repetitions.unwrap_or(defaults.repetitions),
        alpha: check_level(a.level.unwrap_or(defaults.alpha))?,
        seed: common.seed,
        mse_floor: floor(a.mse_floor),
        max_failure_rate: a.max_failure_rate.unwrap_or(defaults.max_failure_rate),
    };
    config.validate()?;
    let learner = learner(&a.model)?;
    let ds = load(&a.model)?;
    let est = ncv_estimate(&ds, &config, &learner)?;
    for w in &est.warnings {
        log::warn!("{w}");
    }
    if let Some(path) = &a.trace {
        write_trace(path, &est)?;
    }
    match common.format {
        Format::Json => write_json(common, &est),
        Format::Csv => {
            let header = ["point", "bias", "err_cv", "mse", "se", "lower", "upper", "alpha", "k", "repetitions"]
                .map(String::from);
            let row = vec![
                est.point.to_string(),
                est.bias.to_string(),
                est.err_cv.to_string(),
                est.mse.to_string(),
                est.se.to_string(),
                est.interval.0.to_string(),
                est.interval.1.to_string(),
                est.alpha.to_string(),
                est.k.to_string(),
                est.repetitions.to_string(),
            ];
            write_rows(common, &header, &[row])
        }
    }
}

fn write_trace(path: &Path, est: &coxncv::NcvEstimate) -> CliResult<()> {
    let f = File::create(path).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    write_trace_jsonl(est, &mut w)?;
    w.flush().map_err(io_fail)
}

fn cmd_simulate(a: &SimulateArgs, common: &Common) -> CliResult<()> {
    let defaults = CoverageConfig::default();
    let config = CoverageConfig {
        k: a.k.unwrap_or(defaults.k),
        repetitions: a.repetitions.unwrap_or(defaults.repetitions),
        alpha: check_level(a.level.unwrap_or(defaults.alpha))?,
        learner: learner(&a.model)?,
        lambda_scope: match a.lambda_scope.unwrap_or(ScopeArg::PerFit) {
            ScopeArg::PerFit => LambdaScope::PerFit,
            ScopeArg::PerTrial => LambdaScope::PerTrial,
        },
        cv_pooling: pooling(a.pooling),
        mse_floor: floor(a.mse_floor),
        max_failure_rate: a.max_failure_rate.unwrap_or(defaults.max_failure_rate),
    };
    let trials = a.trials.unwrap_or(100);
    let (report, setting) = if a.model.data.is_some() {
        let ds = load(&a.model)?;
        let n_train = a.n_train.ok_or_else(|| Failure::config("--n-train is required with --data"))?;
        let label = a.setting.clone().unwrap_or_else(|| format!("data: n_train={n_train}, p={}", ds.n_features()));
        (run_real_data(&ds, n_train, trials, common.seed, &config)?, label)
    } else {
        let p = a.p.unwrap_or(10);
        let mut spec = SimSpec::new(a.n_train.unwrap_or(100), a.n_test.unwrap_or(1000), p);
        if a.n_signal.is_some() || a.signal.is_some() {
            let count = a.n_signal.unwrap_or(p.div_ceil(10));
            if count > p {
                return Err(Failure::config(format!("--n-signal {count} exceeds p = {p}")));
            }
            spec.beta_true = sparse_beta(p, count, a.signal.unwrap_or(DEFAULT_SIGNAL));
        }
        spec.noise_c = a.noise.unwrap_or(spec.noise_c);
        spec.censoring_rate = a.censoring.unwrap_or(spec.censoring_rate);
        spec.trials = trials;
        spec.seed = common.seed;
        let label = a
            .setting
            .clone()
            .unwrap_or_else(|| format!("simulated: n={}, p={p}", spec.n_train));
        (run_coverage(&spec, &config)?, label)
    };
    let row = SummaryRow::from_report(&setting, &report);
    if let Some(path) = &a.summary {
        write_summary_csv(std::slice::from_ref(&row), path)?;
    }
    match common.format {
        Format::Json => write_json(common, &report),
        Format::Csv => {
            let header = coxncv::simulation::SUMMARY_COLUMNS.map(String::from);
            let values = vec![
                row.setting.clone(),
                row.point_cv.to_string(),
                row.point_ncv.to_string(),
                row.mean_se_cv.to_string(),
                row.mean_se_ncv.to_string(),
                row.cv_upper.to_string(),
                row.cv_lower.to_string(),
                row.ncv_upper.to_string(),
                row.ncv_lower.to_string(),
            ];
            let quoted: Vec<String> = values
                .into_iter()
                .map(|v| if v.contains(',') { format!("\"{v}\"") } else { v })
                .collect();
            write_rows(common, &header, &[quoted])
        }
    }
}

fn cmd_fig2(a: &Fig2Args, common: &Common) -> CliResult<()> {
    let p = a.p.unwrap_or(10);
    let mut base = SimSpec::new(2, 2, p);
    if a.n_signal.is_some() || a.signal.is_some() {
        base.beta_true = sparse_beta(p, a.n_signal.unwrap_or(p.div_ceil(10)).min(p), a.signal.unwrap_or(DEFAULT_SIGNAL));
    }
    base.noise_c = a.noise.unwrap_or(base.noise_c);
    base.censoring_rate = a.censoring.unwrap_or(base.censoring_rate);
    base.seed = common.seed;
    let grid = a.n_grid.clone().unwrap_or_else(|| vec![100, 200, 400, 800]);
    let rows = figure2_data(&base, &grid, a.replicates.unwrap_or(20))?;
    match common.format {
        Format::Json => write_json(common, &rows),
        Format::Csv => {
            let header = ["n", "replicate", "measure", "value"].map(String::from);
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.n.to_string(), r.replicate.to_string(), r.measure.clone(), r.value.to_string()])
                .collect();
            write_rows(common, &header, &body)
        }
    }
}
