//! The `qtrace` command-line front end.
//!
//! Exit codes: `0` on success, `1` when a verification fails (or a numerical
//! routine errors out), `2` on usage errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use crate::divergences;
use crate::error::Error;
use crate::linalg::{self, OperatorPair};
use crate::quadrature::QuadratureConfig;
use crate::scalar::{self, RenyiOrder};
use crate::verify::{self, Constraint, InequalityInput, InequalityKind, Objective, SupSearchConfig};
use crate::witnesses::{self, WitnessSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Smallest order accepted by `sweep` unless `--s-floor` lowers it.
pub const DEFAULT_S_FLOOR: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "qtrace", version, about = "Optimal logarithmic trace-inequality constants and layer-cake divergences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print G_s, c_s, r* and related constants as JSON.
    Constants {
        #[arg(long)]
        s: f64,
    },
    /// Tabulate the constants over a uniform grid of orders.
    Sweep(SweepArgs),
    /// Run a randomized verification campaign and write its report.
    Verify(VerifyArgs),
    /// Evaluate the commuting witness (Π_k/k, (λ/d) I_d).
    Witness(WitnessArgs),
    /// Search for the supremum of a divergence ratio.
    Supsearch(SupsearchArgs),
    /// Search the classical ratio Q/Q_{1+s} over probability vectors.
    Classical(ClassicalArgs),
    /// Load a pair from JSON and print every divergence and margin.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub s_min: f64,
    #[arg(long)]
    pub s_max: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Orders below this are rejected.
    #[arg(long, default_value_t = DEFAULT_S_FLOOR)]
    pub s_floor: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub ineq: String,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4])]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Orders to test; defaults to 0.1, 0.25, 0.5, s0, 0.9.
    #[arg(long, value_delimiter = ',')]
    pub s_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Override the kind's default tolerance; the report passes iff min_margin >= -tolerance.
    #[arg(long, allow_hyphen_values = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, conflicts_with = "r")]
    pub lambda: Option<f64>,
    /// Target ratio parameter r = d/(λk); sets λ.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub s: f64,
}

#[derive(Debug, Args)]
pub struct SupsearchArgs {
    #[arg(long)]
    pub objective: String,
    #[arg(long, default_value = "positive")]
    pub constraint: String,
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub max_dim: usize,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassicalArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 8)]
    pub d_max: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub pair: PathBuf,
    #[arg(long)]
    pub s: f64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InvalidInput(_)
            | Error::DimensionTooLarge(_)
            | Error::MismatchedInput { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::NotSquare { .. }
            | Error::DimensionMismatch(..)
            | Error::NonFinite
            | Error::NotHermitian(_)
            | Error::NotStrictlyPositive { .. }
            | Error::NotPositive(_)
            | Error::NotNormalized(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn order(s: f64) -> CliResult<RenyiOrder> {
    RenyiOrder::new(s).map_err(|e| usage(e.to_string()))
}

/// Parses `argv` (program name first), runs the subcommand, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILED
        }
    }
}

/// Returns whether every verification performed passed.
fn execute(cmd: &Command) -> CliResult<bool> {
    match cmd {
        Command::Constants { s } => {
            let c = scalar::g_constant(order(*s)?);
            emit(&to_json(&c)?, None)?;
            Ok(true)
        }
        Command::Sweep(args) => sweep(args),
        Command::Verify(args) => verify_cmd(args),
        Command::Witness(args) => witness_cmd(args),
        Command::Supsearch(args) => supsearch_cmd(args),
        Command::Classical(args) => {
            order(args.s)?;
            if args.d_max < 1 || args.samples < 1 {
                return Err(usage("--d-max and --samples must be >= 1"));
            }
            let report = verify::classical_sup_search(args.d_max, args.s, args.samples, args.seed)?;
            emit(&to_json(&report)?, None)?;
            Ok(report.passed)
        }
        Command::Check(args) => check_cmd(args),
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Failed(e.to_string()))
        }
    }
}

/// Header of the sweep CSV.
pub const SWEEP_HEADER: &str = "s,G_s,c_s_over_s,ratio,r_star";

fn sweep(args: &SweepArgs) -> CliResult<bool> {
    let (lo, hi) = (args.s_min, args.s_max);
    if !(args.s_floor > 0.0) {
        return Err(usage("--s-floor must be positive"));
    }
    if !(lo >= args.s_floor) {
        return Err(usage(format!("--s-min {lo} is below the floor {}", args.s_floor)));
    }
    if !(hi <= 1.0 && lo <= hi) {
        return Err(usage(format!("need s-min <= s-max <= 1, got {lo}, {hi}")));
    }
    if args.steps == 0 {
        return Err(usage("--steps must be >= 1"));
    }
    let rows: Vec<_> = scalar::linspace(lo, hi, args.steps)
        .into_iter()
        .map(|s| order(s).map(scalar::g_constant))
        .collect::<CliResult<_>>()?;
    let text = match args.format {
        Format::Csv => {
            let mut t = String::from(SWEEP_HEADER);
            t.push('\n');
            for c in &rows {
                let _ = writeln!(t, "{},{},{},{},{}", c.s, c.g_s, c.c_s_over_s, c.ratio, c.r_star);
            }
            t
        }
        Format::Json => to_json(&rows)?,
    };
    emit(&text, args.out.as_ref())?;
    Ok(true)
}

fn verify_cmd(args: &VerifyArgs) -> CliResult<bool> {
    let kind: InequalityKind = args.ineq.parse().map_err(|e: Error| usage(e.to_string()))?;
    let grid = args.s_grid.clone().unwrap_or_else(verify::default_s_grid);
    for &s in &grid {
        order(s)?;
    }
    if args.trials == 0 {
        return Err(usage("--trials must be >= 1"));
    }
    if args.dims.is_empty() || args.dims.iter().any(|&d| d == 0 || d > linalg::MAX_DIM) {
        return Err(usage(format!("--dims must lie in 1..={}", linalg::MAX_DIM)));
    }
    verify::thread_count()?;
    let report = if args.timing {
        verify::timed_campaign(kind, &args.dims, args.trials, &grid, args.seed)?
    } else if kind == InequalityKind::DpiQ {
        verify::dpi_fuzz(args.trials, &args.dims, args.seed)?
    } else {
        verify::fuzz_suite(kind, &args.dims, args.trials, &grid, args.seed)?
    };
    let report = match args.tolerance {
        Some(t) if t.is_finite() => report.with_tolerance(t),
        Some(t) => return Err(usage(format!("--tolerance {t} must be finite"))),
        None => report,
    };
    if let Some(t) = report.wall_time_s {
        eprintln!("wall time: {t:.3} s");
    }
    emit(&to_json(&report)?, args.out.as_ref())?;
    if !report.passed {
        eprintln!("{} failed: min margin {:e} < {:e}", kind, report.min_margin, -report.tolerance);
    }
    Ok(report.passed)
}

fn witness_cmd(args: &WitnessArgs) -> CliResult<bool> {
    let s = order(args.s)?;
    let lambda = match (args.lambda, args.r) {
        (_, Some(r)) => witnesses::lambda_for_target_r(args.d, args.k, r)?,
        (Some(l), None) => l,
        (None, None) => 1.0,
    };
    let spec = WitnessSpec::new(args.d, args.k, lambda)?;
    let eval = witnesses::evaluate_witness(&spec, s)?;
    let pair = witnesses::make_witness(&spec)?;
    let cfg = QuadratureConfig::default();
    let c_s = scalar::c_constant(args.s)?;
    let q2 = divergences::q2_collision(&pair, &cfg)?;
    let qa = divergences::q_alpha_layercake(&pair, s, &cfg)?;
    let r = eval.r;
    let out = json!({
        "witness": eval,
        "q2_collision": q2,
        "q2_collision_closed_form": r / (1.0 + r),
        "q_alpha_layercake": qa,
        "collision_ratio": q2 / qa,
        "c_s": c_s,
    });
    emit(&to_json(&out)?, None)?;
    Ok(true)
}

fn supsearch_cmd(args: &SupsearchArgs) -> CliResult<bool> {
    let objective: Objective = args.objective.parse().map_err(|e: Error| usage(e.to_string()))?;
    let constraint: Constraint = args.constraint.parse().map_err(|e: Error| usage(e.to_string()))?;
    order(args.s)?;
    if args.budget == 0 || args.restarts == 0 {
        return Err(usage("--budget and --restarts must be >= 1"));
    }
    if args.max_dim == 0 || args.max_dim > linalg::MAX_DIM {
        return Err(usage(format!("--max-dim must lie in 1..={}", linalg::MAX_DIM)));
    }
    let mut cfg = SupSearchConfig::new(objective, constraint, args.s, args.budget, args.seed);
    cfg.max_dim = args.max_dim;
    cfg.restarts = args.restarts;
    let report = verify::sup_search(&cfg)?;
    emit(&to_json(&report)?, args.out.as_ref())?;
    if let Some(f) = &report.finding {
        eprintln!("finding: {f}");
    }
    if report.exceeded_bound {
        eprintln!("FAILED: best ratio {} exceeds the proven bound {}", report.best_ratio, report.proven_bound);
    }
    Ok(report.passed)
}

fn check_cmd(args: &CheckArgs) -> CliResult<bool> {
    let s = order(args.s)?;
    let pair = linalg::load_pair(&args.pair)?;
    let cfg = verify::verification_quadrature();
    let mut divs = serde_json::Map::new();
    let mut put = |name: &str, v: crate::Result<f64>| -> CliResult<()> {
        divs.insert(name.to_string(), json!(v?));
        Ok(())
    };
    put("q_direct", divergences::q_direct(&pair))?;
    put("q_layercake", divergences::q_layercake(&pair, &cfg))?;
    put("q_bkm_route", divergences::q_bkm_route(&pair))?;
    put("q2_bkm", divergences::q2_bkm(&pair))?;
    put("q2_layercake", divergences::q2_layercake(&pair, &cfg))?;
    put("q2_collision", divergences::q2_collision(&pair, &cfg))?;
    put("q_alpha_layercake", divergences::q_alpha_layercake(&pair, s, &cfg))?;
    put("q_alpha_sandwiched", divergences::q_alpha_sandwiched(&pair, s))?;
    put("relative_sup", linalg::relative_sup(&pair))?;
    if pair.rho_strictly_positive() {
        put("umegaki", divergences::umegaki(&pair))?;
    }

    let mut margins = serde_json::Map::new();
    let mut passed = true;
    let mut record = |kind: InequalityKind, input: InequalityInput<'_>| -> CliResult<()> {
        let m = verify::check_inequality_with(kind, input, s, &cfg)?;
        let ok = m.normalized >= -kind.default_tolerance();
        passed &= ok;
        margins.insert(
            kind.name().to_string(),
            json!({ "lhs": m.lhs, "rhs": m.rhs, "margin": m.margin, "normalized": m.normalized, "passed": ok }),
        );
        Ok(())
    };
    for kind in [
        InequalityKind::MainGs,
        InequalityKind::ChengCsOverS,
        InequalityKind::CollisionCs,
        InequalityKind::AltOrdering,
    ] {
        record(kind, InequalityInput::Pair(&pair))?;
    }
    if let Some(cp) = classical_view(&pair) {
        record(InequalityKind::ClassicalThreshold, InequalityInput::Classical(&cp))?;
    }
    let out = json!({
        "dim": pair.dim(),
        "s": args.s,
        "normalized": pair.is_normalized(),
        "commuting": pair.commutes(1e-12),
        "divergences": Value::Object(divs),
        "margins": Value::Object(margins),
        "passed": passed,
    });
    emit(&to_json(&out)?, None)?;
    Ok(passed)
}

/// Diagonal normalized pairs, read as probability vectors.
fn classical_view(pair: &OperatorPair) -> Option<divergences::ClassicalPair> {
    let diagonal = pair.rho().is_diagonal(0.0) && pair.sigma().is_diagonal(0.0);
    if !(diagonal && pair.is_normalized()) {
        return None;
    }
    let p = pair.rho().diagonal().into_iter().map(|x| x.max(0.0)).collect();
    divergences::ClassicalPair::new(p, pair.sigma().diagonal()).ok()
}
