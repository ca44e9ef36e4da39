//! The `ldp-ab` command line: `randomize`, `estimate`, `test`, `power` and
//! `simulate`.
//!
//! Exit codes: 0 success, 2 usage error, 3 domain error (a value violates a
//! precondition or a statistic is undefined), 4 I/O or input-format error.
//! Data goes to stdout, diagnostics to stderr. Output is rendered in full
//! before anything is written, and `--out` files are replaced atomically.

use std::ffi::OsString;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::data::{parse_counters, read_counters, read_flags};
use crate::error::{Error, Result};
use crate::estimators::{collect_two_bit_all, estimate_mean, estimate_variance, BudgetSplit};
use crate::hypothesis::{
    bin_test_with, est_test, est_test_with_floor, mcdiarmid_on_samples, mix_test, welch_t,
    Hypothesis, NullDistribution, RawSample, Tail, TestResult,
};
use crate::mechanism::{DomainBound, OneBitMechanism, PrivacyBudget, StreamRng};
use crate::power::{power_report, sample_size, sample_size_exact, EffectSpec};
use crate::sim::{
    figure_preset, result_rows, run_experiment, with_threads, write_results_csv, ExperimentPlan,
    TrialSummary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable capping simulation threads; 0 means automatic.
pub const THREADS_ENV: &str = "LDP_AB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ldp-ab",
    version,
    about = "Two-sample mean tests under local differential privacy"
)]
pub struct Cli {
    /// Seed for every random draw; identical arguments give identical output
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output format (defaults: csv for randomize and simulate, json otherwise)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Privatize counters to one bit each
    Randomize(RandomizeArgs),
    /// Estimate mean and variance from two privatized bits per user
    Estimate(EstimateArgs),
    /// Run a two-sample test on counter files
    Test(TestArgs),
    /// Power bounds and per-group sample size for the transformation-based test
    Power(PowerArgs),
    /// Run a Monte Carlo experiment plan
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct RandomizeArgs {
    #[arg(long)]
    pub epsilon: f64,
    /// Domain bound m; counters lie in [0, m]
    #[arg(long)]
    pub m: f64,
    /// Counter file, one value per line (stdin when omitted)
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Budget for the bit encoding x
    #[arg(long)]
    pub epsilon1: f64,
    /// Budget for the bit encoding x^2
    #[arg(long)]
    pub epsilon2: f64,
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Welch,
    Est,
    Bin,
    Mcdiarmid,
    Mix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    #[value(name = "two_sided", alias = "two-sided")]
    TwoSided,
    Greater,
    Less,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Tail {
        match t {
            TailArg::TwoSided => Tail::TwoSided,
            TailArg::Greater => Tail::Greater,
            TailArg::Less => Tail::Less,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Privacy budget; for est the first-bit budget, or the total when
    /// --epsilon2 is omitted
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Second-bit budget for est
    #[arg(long)]
    pub epsilon2: Option<f64>,
    #[arg(long)]
    pub m: f64,
    /// Null difference mu_A - mu_B
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub d0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "two_sided")]
    pub tail: TailArg,
    #[arg(long)]
    pub group_a: PathBuf,
    #[arg(long)]
    pub group_b: PathBuf,
    /// Per-user privacy flags for group A (mix only)
    #[arg(long)]
    pub ldp_flags_a: Option<PathBuf>,
    /// Per-user privacy flags for group B (mix only)
    #[arg(long)]
    pub ldp_flags_b: Option<PathBuf>,
    /// Replacement for non-positive variance estimates (est only)
    #[arg(long)]
    pub variance_floor: Option<f64>,
    /// Reference distribution for the p-value (bin only)
    #[arg(long, value_enum, default_value = "student_t")]
    pub reference: ReferenceArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    #[value(name = "student_t")]
    StudentT,
    Normal,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// True gap mu_A - mu_B - d0, in (0, m]
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Target type-II error
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    /// Size of group A for the power bounds (defaults to the planned size)
    #[arg(long, visible_alias = "nA")]
    pub n_a: Option<u64>,
    /// Size of group B for the power bounds (defaults to the planned size)
    #[arg(long, visible_alias = "nB")]
    pub n_b: Option<u64>,
    /// Observed standard error of the bit-frequency difference
    #[arg(long)]
    pub sigma_hat: Option<f64>,
    /// The bounds are one-sided; two_sided spends alpha/2 per tail
    #[arg(long, value_enum, default_value = "greater")]
    pub tail: TailArg,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["plan", "figure"])))]
pub struct SimulateArgs {
    /// Plan file: one experiment plan or an array of plans
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Print the reproduction plans for a figure instead of running
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub figure: Option<u8>,
    /// Results file (written atomically); stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Degenerate(_) | Error::Unsupported(_) => EXIT_DOMAIN,
        Error::Json(e) if e.is_data() => EXIT_DOMAIN,
        Error::Io(_) | Error::Parse { .. } | Error::Json(_) => EXIT_IO,
    }
}

/// Parse `argv` (program name first), run the command against the process's
/// standard streams and return the exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    let stdin = io::stdin();
    run(
        argv,
        &mut stdin.lock(),
        &mut stdout.lock(),
        &mut stderr.lock(),
    )
}

/// Like [`parse_and_dispatch`] with explicit streams.
pub fn run<I, T>(
    argv: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(e.render().to_string().as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    init_logging(cli.verbose);
    let mut warnings = Vec::new();
    let outcome = execute(&cli, stdin, &mut warnings).and_then(|out| emit(out, stdout));
    for w in warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Lib(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .try_init();
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Fully rendered output and where it goes.
struct Output {
    body: Vec<u8>,
    file: Option<PathBuf>,
}

impl Output {
    fn stdout(body: impl Into<Vec<u8>>) -> Self {
        Output {
            body: body.into(),
            file: None,
        }
    }
}

fn emit(out: Output, stdout: &mut dyn Write) -> CliResult<()> {
    match out.file {
        Some(path) => write_atomic(&path, &out.body)?,
        None => {
            stdout.write_all(&out.body)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Write through a temporary file in the target directory, then rename.
fn write_atomic(path: &Path, body: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(body)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    Ok(body)
}

fn execute(cli: &Cli, stdin: &mut dyn Read, warnings: &mut Vec<String>) -> CliResult<Output> {
    match &cli.command {
        Command::Randomize(a) => randomize(a, cli, stdin),
        Command::Estimate(a) => estimate(a, cli),
        Command::Test(a) => test(a, cli),
        Command::Power(a) => power(a, cli, warnings),
        Command::Simulate(a) => simulate(a, cli),
    }
}

fn randomize(args: &RandomizeArgs, cli: &Cli, stdin: &mut dyn Read) -> CliResult<Output> {
    let eps = PrivacyBudget::new(args.epsilon)?;
    let bound = DomainBound::new(args.m)?;
    let values = match &args.input {
        Some(p) => read_counters(p)?,
        None => parse_counters(stdin, "<stdin>")?,
    };
    let mut rng = StreamRng::new(cli.seed);
    let bits = OneBitMechanism::new(eps, bound).randomize_all(&values, &mut rng)?;
    let body = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::with_capacity(bits.len() * 2);
            for b in &bits {
                s.push(if b.is_one() { '1' } else { '0' });
                s.push('\n');
            }
            s.into_bytes()
        }
        Format::Json => to_json(&json!({
            "epsilon": eps.get(),
            "m": bound.get(),
            "bits": bits.iter().map(|b| b.as_u8()).collect::<Vec<_>>(),
        }))?,
    };
    Ok(Output::stdout(body))
}

#[derive(Debug, Serialize)]
struct EstimateOutput {
    n: usize,
    epsilon1: f64,
    epsilon2: f64,
    m: f64,
    mean: f64,
    variance: f64,
}

fn estimate(args: &EstimateArgs, cli: &Cli) -> CliResult<Output> {
    let split = BudgetSplit::new(
        PrivacyBudget::new(args.epsilon1)?,
        PrivacyBudget::new(args.epsilon2)?,
    );
    let bound = DomainBound::new(args.m)?;
    let values = read_counters(&args.input)?;
    let mut rng = StreamRng::new(cli.seed);
    let (first, second) = collect_two_bit_all(&values, bound, split, &mut rng)?;
    let out = EstimateOutput {
        n: values.len(),
        epsilon1: split.eps1.get(),
        epsilon2: split.eps2.get(),
        m: bound.get(),
        mean: estimate_mean(&first)?,
        variance: estimate_variance(&first, &second)?,
    };
    render_record(&out, cli.format.unwrap_or(Format::Json))
}

fn render_record<T: Serialize>(value: &T, format: Format) -> CliResult<Output> {
    let body = match format {
        Format::Json => to_json(value)?,
        Format::Csv => flat_csv(&json_flat(value)?)?,
    };
    Ok(Output::stdout(body))
}

/// One header line and one data line, columns in key order.
fn flat_csv(fields: &std::collections::BTreeMap<String, String>) -> Result<Vec<u8>> {
    let io_err = |e: csv::Error| Error::Io(io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields.keys()).map_err(io_err)?;
    w.write_record(fields.values()).map_err(io_err)?;
    w.into_inner()
        .map_err(|e| Error::Io(io::Error::other(e.to_string())))
}

fn require_epsilon(args: &TestArgs) -> CliResult<PrivacyBudget> {
    match args.epsilon {
        Some(e) => Ok(PrivacyBudget::new(e)?),
        None => Err(CliError::Usage(format!(
            "--epsilon is required for method {:?}",
            args.method
        ))),
    }
}

#[derive(Debug, Serialize)]
struct TestOutput {
    #[serde(flatten)]
    result: TestResult,
    n_a: usize,
    n_b: usize,
    d0: f64,
    alpha: f64,
    tail: Tail,
}

fn test(args: &TestArgs, cli: &Cli) -> CliResult<Output> {
    let bound = DomainBound::new(args.m)?;
    let h = Hypothesis::new(args.d0, args.tail.into(), args.alpha)?;
    if args.method != MethodArg::Mix && (args.ldp_flags_a.is_some() || args.ldp_flags_b.is_some()) {
        return Err(CliError::Usage(
            "--ldp-flags-a/--ldp-flags-b apply to method mix only".into(),
        ));
    }
    if args.method != MethodArg::Bin && args.reference != ReferenceArg::StudentT {
        return Err(CliError::Usage(
            "--reference applies to method bin only".into(),
        ));
    }
    if args.method != MethodArg::Est && args.variance_floor.is_some() {
        return Err(CliError::Usage(
            "--variance-floor applies to method est only".into(),
        ));
    }
    let a = RawSample::new(read_counters(&args.group_a)?, bound)?;
    let b = RawSample::new(read_counters(&args.group_b)?, bound)?;
    let mut rng = StreamRng::new(cli.seed);
    let result = match args.method {
        MethodArg::Welch => welch_t(&a, &b, &h)?,
        MethodArg::Est => {
            let eps = require_epsilon(args)?;
            let split = match args.epsilon2 {
                Some(e2) => BudgetSplit::new(eps, PrivacyBudget::new(e2)?),
                None => BudgetSplit::even(eps),
            };
            match args.variance_floor {
                Some(f) if !(f >= 0.0 && f.is_finite()) => {
                    return Err(
                        Error::domain(format!("variance floor must be >= 0, got {f}")).into(),
                    )
                }
                Some(f) => est_test_with_floor(&a, &b, split, &h, f, &mut rng)?,
                None => est_test(&a, &b, split, &h, &mut rng)?,
            }
        }
        MethodArg::Bin => {
            let reference = match args.reference {
                ReferenceArg::StudentT => NullDistribution::StudentT,
                ReferenceArg::Normal => NullDistribution::Normal,
            };
            bin_test_with(&a, &b, require_epsilon(args)?, &h, reference, &mut rng)?
        }
        MethodArg::Mcdiarmid => mcdiarmid_on_samples(&a, &b, require_epsilon(args)?, &h, &mut rng)?,
        MethodArg::Mix => {
            let eps = require_epsilon(args)?;
            let (Some(fa), Some(fb)) = (&args.ldp_flags_a, &args.ldp_flags_b) else {
                return Err(CliError::Usage(
                    "method mix needs --ldp-flags-a and --ldp-flags-b".into(),
                ));
            };
            mix_test(
                &a,
                &read_flags(fa)?,
                &b,
                &read_flags(fb)?,
                eps,
                &h,
                &mut rng,
            )?
        }
    };
    if args.method != MethodArg::Est && args.epsilon2.is_some() {
        log::warn!("--epsilon2 is ignored for method {:?}", args.method);
    }
    let out = TestOutput {
        result,
        n_a: a.len(),
        n_b: b.len(),
        d0: h.d0,
        alpha: h.alpha.get(),
        tail: h.tail,
    };
    render_record(&out, cli.format.unwrap_or(Format::Json))
}

/// Flatten a JSON object into string fields for a one-row CSV.
fn json_flat<T: Serialize>(value: &T) -> Result<std::collections::BTreeMap<String, String>> {
    let v = serde_json::to_value(value)?;
    let mut out = std::collections::BTreeMap::new();
    if let serde_json::Value::Object(map) = v {
        for (k, v) in map {
            let s = match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.insert(k, s);
        }
    }
    Ok(out)
}

fn power(args: &PowerArgs, cli: &Cli, warnings: &mut Vec<String>) -> CliResult<Output> {
    let effect = EffectSpec::new(
        args.theta,
        PrivacyBudget::new(args.epsilon)?,
        DomainBound::new(args.m)?,
    )?;
    let tail: Tail = args.tail.into();
    let alpha = match tail {
        Tail::TwoSided => {
            warnings.push(
                "power bounds are one-sided; a two-sided request spends alpha/2 per tail".into(),
            );
            args.alpha / 2.0
        }
        _ => args.alpha,
    };
    let n_exact = sample_size_exact(&effect, alpha, args.beta)?;
    let n = sample_size(&effect, alpha, args.beta)?;
    let planned = n.max(2);
    let n_a = args.n_a.unwrap_or(planned);
    let n_b = args.n_b.unwrap_or(planned);
    let report = power_report(&effect, n_a, n_b, alpha, args.sigma_hat)?;
    let out = json!({
        "theta": effect.theta,
        "epsilon": effect.eps.get(),
        "m": effect.bound.get(),
        "alpha": args.alpha,
        "alpha_per_tail": alpha,
        "beta": args.beta,
        "tail": tail,
        "p_theta": effect.p_theta(),
        "n": n,
        "n_exact": n_exact,
        "n_a": n_a,
        "n_b": n_b,
        "bounds": report,
    });
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => Ok(Output::stdout(to_json(&out)?)),
        Format::Csv => {
            let mut flat = json_flat(&out)?;
            flat.remove("bounds");
            for (k, v) in json_flat(&report)? {
                flat.insert(k, v);
            }
            Ok(Output::stdout(flat_csv(&flat)?))
        }
    }
}

#[derive(Debug, Serialize)]
struct PlanResult<'a> {
    plan: &'a ExperimentPlan,
    summaries: &'a [TrialSummary],
}

fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse::<usize>().map_err(|_| {
            CliError::Lib(Error::domain(format!(
                "{THREADS_ENV} must be a non-negative integer, got {v:?}"
            )))
        }),
        _ => Ok(0),
    }
}

fn load_plans(path: &Path) -> Result<Vec<ExperimentPlan>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let plans = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value)?,
        other => vec![serde_json::from_value(other)?],
    };
    Ok(plans)
}

fn simulate(args: &SimulateArgs, cli: &Cli) -> CliResult<Output> {
    if let Some(figure) = args.figure {
        let plans = figure_preset(figure)?;
        let body = to_json(&plans)?;
        return Ok(Output {
            body,
            file: args.out.clone(),
        });
    }
    let path = args
        .plan
        .as_ref()
        .expect("clap enforces --plan or --figure");
    let mut plans = load_plans(path)?;
    if plans.is_empty() {
        return Err(Error::domain("the plan file holds no plans").into());
    }
    for p in &mut plans {
        if cli.seed != 0 {
            p.seed = cli.seed;
        }
        p.validate()?;
    }
    let threads = threads_from_env()?;
    let results = with_threads(threads, || {
        plans.iter().map(run_experiment).collect::<Result<Vec<_>>>()
    })??;
    let body = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<_> = plans
                .iter()
                .zip(&results)
                .flat_map(|(p, s)| result_rows(p, s))
                .collect();
            let mut buf = Vec::new();
            write_results_csv(&rows, &mut buf)?;
            buf
        }
        Format::Json => {
            let out: Vec<_> = plans
                .iter()
                .zip(&results)
                .map(|(plan, s)| PlanResult { plan, summaries: s })
                .collect();
            to_json(&out)?
        }
    };
    Ok(Output {
        body,
        file: args.out.clone(),
    })
}
