//! Randomized certification of the trace inequalities, supremum searches and
//! report aggregation.
//!
//! Every check reports a margin `RHS - LHS` (nonnegative when the inequality
//! holds). Campaigns aggregate the normalized margin `(RHS - LHS)/(1 + |RHS|)`,
//! so a report passes exactly when its `min_margin >= -tolerance`.
//!
//! Trials are independent: trial `t` of a campaign with seed `k` draws from the
//! ChaCha8 stream `t` of the generator seeded with `k`. Reductions run in
//! trial order after the parallel map, so reports are bit-identical for any
//! thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::divergences::{self, ClassicalPair, TailFunction};
use crate::error::{Error, Result};
use crate::linalg::{
    self, CMatrix, Channel, HermitianOperator, OperatorPair, PairJson, MAX_DIM,
};
use crate::quadrature::QuadratureConfig;
use crate::scalar::{self, RenyiOrder, THRESHOLD_S0};
use crate::witnesses;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "QTRACE_THREADS";

/// `{0.1, 0.25, 0.5, s0, 0.9}`.
pub fn default_s_grid() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, THRESHOLD_S0, 0.9]
}

/// Quadrature settings used by every campaign.
pub fn verification_quadrature() -> QuadratureConfig {
    QuadratureConfig { abs_tol: 1e-13, rel_tol: 1e-12, max_subdivisions: 4000 }
}

fn search_quadrature() -> QuadratureConfig {
    QuadratureConfig { abs_tol: 1e-11, rel_tol: 1e-10, max_subdivisions: 2000 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InequalityKind {
    /// `Q <= G_s Q̃_{1+s}`.
    #[serde(rename = "main_Gs")]
    MainGs,
    /// `Q <= (c_s/s) Q̃_{1+s}`.
    #[serde(rename = "cheng_cs_over_s")]
    ChengCsOverS,
    /// `Q_2(rho||rho+sigma) <= c_s Q_{1+s}`.
    #[serde(rename = "collision_cs")]
    CollisionCs,
    /// `Q_{1+s} <= Q̃_{1+s}`.
    #[serde(rename = "alt_ordering")]
    AltOrdering,
    /// `Q(Φrho||Φsigma) <= Q(rho||sigma)`.
    #[serde(rename = "dpi_Q")]
    DpiQ,
    /// `Q(p||q) <= K_s Q_{1+s}(p||q)` for probability vectors, with `K_s = G_s`
    /// for `s <= s0` and `ln 2` above.
    #[serde(rename = "classical_threshold")]
    ClassicalThreshold,
    /// `ln(1+r) <= G_s r^s`.
    #[serde(rename = "scalar_log")]
    ScalarLog,
    /// `r ln(1+r) <= ln2 r^{s+1} + (1/2 - s ln2)(r - 1)` for `s >= s0`.
    #[serde(rename = "scalar_aux")]
    ScalarAux,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 8] = [
        Self::MainGs,
        Self::ChengCsOverS,
        Self::CollisionCs,
        Self::AltOrdering,
        Self::DpiQ,
        Self::ClassicalThreshold,
        Self::ScalarLog,
        Self::ScalarAux,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::MainGs => "main_Gs",
            Self::ChengCsOverS => "cheng_cs_over_s",
            Self::CollisionCs => "collision_cs",
            Self::AltOrdering => "alt_ordering",
            Self::DpiQ => "dpi_Q",
            Self::ClassicalThreshold => "classical_threshold",
            Self::ScalarLog => "scalar_log",
            Self::ScalarAux => "scalar_aux",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Self::AltOrdering | Self::ClassicalThreshold => 1e-9,
            Self::ScalarLog | Self::ScalarAux => 1e-12,
            _ => 1e-8,
        }
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown inequality kind '{s}'")))
    }
}

/// Inputs of one inequality check.
#[derive(Debug, Clone, Copy)]
pub enum InequalityInput<'a> {
    Pair(&'a OperatorPair),
    PairWithChannel(&'a OperatorPair, &'a Channel),
    Classical(&'a ClassicalPair),
    Scalar(f64),
}

impl InequalityInput<'_> {
    fn name(&self) -> &'static str {
        match self {
            Self::Pair(_) => "pair",
            Self::PairWithChannel(..) => "pair_with_channel",
            Self::Classical(_) => "classical",
            Self::Scalar(_) => "scalar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// `(rhs - lhs)/(1 + |rhs|)`.
    pub normalized: f64,
}

impl Margin {
    fn new(lhs: f64, rhs: f64) -> Result<Self> {
        let margin = rhs - lhs;
        let normalized = margin / (1.0 + rhs.abs());
        if !normalized.is_finite() {
            return Err(Error::Domain(format!("non-finite margin: lhs {lhs}, rhs {rhs}")));
        }
        Ok(Self { lhs, rhs, margin, normalized })
    }
}

/// `K_s`: `G_s` up to the threshold, `ln 2` above it.
pub fn classical_constant(s: RenyiOrder) -> f64 {
    if s.s() <= THRESHOLD_S0 {
        scalar::g_constant(s).g_s
    } else {
        LN_2
    }
}

/// Margin of `kind` on `input` with the campaign quadrature settings.
pub fn check_inequality(kind: InequalityKind, input: InequalityInput<'_>, s: RenyiOrder) -> Result<Margin> {
    check_inequality_with(kind, input, s, &verification_quadrature())
}

pub fn check_inequality_with(
    kind: InequalityKind,
    input: InequalityInput<'_>,
    s: RenyiOrder,
    cfg: &QuadratureConfig,
) -> Result<Margin> {
    let mismatch = || Error::MismatchedInput { kind: kind.name().to_string(), input: input.name() };
    match (kind, input) {
        (InequalityKind::MainGs, InequalityInput::Pair(pair)) => {
            let g = scalar::g_constant(s).g_s;
            Margin::new(divergences::q_direct(pair)?, g * divergences::q_alpha_sandwiched(pair, s)?)
        }
        (InequalityKind::ChengCsOverS, InequalityInput::Pair(pair)) => {
            let c = scalar::c_constant(s.s())? / s.s();
            Margin::new(divergences::q_direct(pair)?, c * divergences::q_alpha_sandwiched(pair, s)?)
        }
        (InequalityKind::CollisionCs, InequalityInput::Pair(pair)) => {
            let c = scalar::c_constant(s.s())?;
            let lhs = divergences::q2_collision_vs_sum(pair, cfg)?;
            Margin::new(lhs, c * divergences::q_alpha_layercake(pair, s, cfg)?)
        }
        (InequalityKind::AltOrdering, InequalityInput::Pair(pair)) => Margin::new(
            divergences::q_alpha_layercake(pair, s, cfg)?,
            divergences::q_alpha_sandwiched(pair, s)?,
        ),
        (InequalityKind::DpiQ, InequalityInput::PairWithChannel(pair, channel)) => {
            let out = OperatorPair::with_psd_rho(channel.apply(pair.rho())?, channel.apply(pair.sigma())?)?;
            Margin::new(divergences::q_direct(&out)?, divergences::q_direct(pair)?)
        }
        (InequalityKind::ClassicalThreshold, InequalityInput::Classical(cp)) => {
            if !cp.is_normalized(1e-9) {
                return Err(Error::NotNormalized(cp.p().iter().sum()));
            }
            let rhs = classical_constant(s) * divergences::classical_q_alpha(cp, s);
            Margin::new(divergences::classical_q(cp), rhs)
        }
        (InequalityKind::ScalarLog, InequalityInput::Scalar(r)) => {
            check_scalar_point(r)?;
            let g = scalar::g_constant(s).g_s;
            Margin::new(r.ln_1p(), g * r.powf(s.s()))
        }
        (InequalityKind::ScalarAux, InequalityInput::Scalar(r)) => {
            check_scalar_point(r)?;
            let grid = scalar::check_aux_inequality(s.s(), &[r])?;
            let lhs = r * r.ln_1p();
            Margin::new(lhs, lhs + grid.min_margin)
        }
        _ => Err(mismatch()),
    }
}

fn check_scalar_point(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("scalar input r = {r} must be finite and >= 0")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sampling

/// Sources of random operator pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFamily {
    /// Ginibre densities; `rho` has random rank, `sigma` is full rank.
    Density,
    /// Full-rank densities rescaled by independent log-uniform factors in `[1e-2, 1e2]`.
    Scaled,
    /// `U diag(p) U†`, `U diag(q) U†` with a Haar `U`.
    Commuting,
    /// A commuting density pair mixed with weight `eps ∈ {1e-3, 1e-1}` into random densities.
    NearCommuting,
}

impl PairFamily {
    pub const ALL: [PairFamily; 4] = [Self::Density, Self::Scaled, Self::Commuting, Self::NearCommuting];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Scaled => "scaled",
            Self::Commuting => "commuting",
            Self::NearCommuting => "near_commuting",
        }
    }
}

/// Generator for stream `stream` of the campaign seeded with `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

fn conjugate_diagonal(u: &CMatrix, diag: &[f64]) -> Result<HermitianOperator> {
    let d = HermitianOperator::from_diagonal(diag)?;
    HermitianOperator::new(u * d.matrix() * u.adjoint())
}

fn random_simplex_exp<R: Rng + ?Sized>(rng: &mut R, dim: usize, floor: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1) + floor).collect();
    let t: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= t);
    v
}

fn commuting_pair<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<(HermitianOperator, HermitianOperator)> {
    let u = linalg::haar_unitary(rng, dim);
    let p = random_simplex_exp(rng, dim, 0.0);
    let q = random_simplex_exp(rng, dim, 1e-3);
    Ok((conjugate_diagonal(&u, &p)?, conjugate_diagonal(&u, &q)?))
}

/// Draws one pair of `family` in dimension `dim`, with a small JSON note on
/// the parameters used.
pub fn sample_pair<R: Rng + ?Sized>(family: PairFamily, dim: usize, rng: &mut R) -> Result<(OperatorPair, Value)> {
    match family {
        PairFamily::Density => {
            let rank = rng.random_range(1..=dim);
            let rho = linalg::sample_density_with(rng, dim, rank)?;
            let sigma = linalg::sample_density_with(rng, dim, dim)?;
            Ok((OperatorPair::with_psd_rho(rho, sigma)?, json!({ "rank": rank })))
        }
        PairFamily::Scaled => {
            let rho = linalg::sample_density_with(rng, dim, dim)?;
            let sigma = linalg::sample_density_with(rng, dim, dim)?;
            let a = log_uniform(rng, 1e-2, 1e2);
            let b = log_uniform(rng, 1e-2, 1e2);
            let pair = OperatorPair::with_psd_rho(rho.scale(a), sigma.scale(b))?;
            Ok((pair, json!({ "rho_scale": a, "sigma_scale": b })))
        }
        PairFamily::Commuting => {
            let (rho, sigma) = commuting_pair(rng, dim)?;
            let scale = if rng.random_bool(0.5) { log_uniform(rng, 1e-2, 1e2) } else { 1.0 };
            Ok((OperatorPair::with_psd_rho(rho, sigma.scale(scale))?, json!({ "sigma_scale": scale })))
        }
        PairFamily::NearCommuting => {
            let (rho, sigma) = commuting_pair(rng, dim)?;
            let eps = if rng.random_bool(0.5) { 1e-3 } else { 1e-1 };
            let tau_rho = linalg::sample_density_with(rng, dim, dim)?;
            let tau_sigma = linalg::sample_density_with(rng, dim, dim)?;
            let rho = rho.scale(1.0 - eps).add_scaled(eps, &tau_rho)?;
            let sigma = sigma.scale(1.0 - eps).add_scaled(eps, &tau_sigma)?;
            Ok((OperatorPair::with_psd_rho(rho, sigma)?, json!({ "eps": eps })))
        }
    }
}

fn dirichlet<R: Rng + ?Sized>(rng: &mut R, dim: usize, concentration: f64, floor: f64) -> Result<Vec<f64>> {
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(gamma).max(floor)).collect();
    let t: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= t);
    Ok(v)
}

fn sample_classical<R: Rng + ?Sized>(variant: usize, dim: usize, rng: &mut R) -> Result<(ClassicalPair, &'static str)> {
    let uniform = vec![1.0 / dim as f64; dim];
    let (p, q, name) = match variant % 4 {
        0 => {
            let a = log_uniform(rng, 0.1, 10.0);
            let b = log_uniform(rng, 0.1, 10.0);
            (dirichlet(rng, dim, a, 0.0)?, dirichlet(rng, dim, b, 1e-12)?, "dirichlet")
        }
        1 => {
            let a = log_uniform(rng, 0.1, 10.0);
            (dirichlet(rng, dim, a, 0.0)?, uniform, "uniform_q")
        }
        2 => {
            let k = rng.random_range(1..=dim);
            let p = (0..dim).map(|i| if i < k { 1.0 / k as f64 } else { 0.0 }).collect();
            (p, uniform, "witness")
        }
        _ if dim >= 2 => {
            // most of p on one point, at ratio r against q
            let eps = log_uniform(rng, 1e-8, 0.5);
            let r = log_uniform(rng, 1e-2, 1e3);
            let rest = dim as f64 - 1.0;
            let mut p = vec![eps / rest; dim];
            p[0] = 1.0 - eps;
            let q0 = ((1.0 - eps) / r).min(0.999);
            let mut q = vec![(1.0 - q0) / rest; dim];
            q[0] = q0;
            (p, q, "concentrated")
        }
        _ => (vec![1.0], vec![1.0], "uniform"),
    };
    Ok((ClassicalPair::new(p, q)?, name))
}

// ---------------------------------------------------------------------------
// Campaigns

/// Aggregated outcome of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: InequalityKind,
    pub trials: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub s_grid: Vec<f64>,
    /// Number of `(trial, s)` evaluations.
    pub evaluations: usize,
    pub min_margin: f64,
    pub argmin_case: Value,
    pub passed: bool,
    pub tolerance: f64,
    /// Only filled in on request; reports are otherwise reproducible byte for byte.
    pub wall_time_s: Option<f64>,
}

impl VerificationReport {
    /// Re-judges the report against another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.min_margin >= -tolerance;
        self
    }
}

/// Number of worker threads: `QTRACE_THREADS` if set, otherwise all cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::InvalidInput(format!("{THREADS_ENV} must be an integer >= 1, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn in_pool<T: Send>(job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(job))
}

enum TrialInput {
    Pair(OperatorPair),
    PairWithChannel(OperatorPair, Channel),
    Classical(ClassicalPair),
    Scalar(f64),
}

impl TrialInput {
    fn as_input(&self) -> InequalityInput<'_> {
        match self {
            Self::Pair(p) => InequalityInput::Pair(p),
            Self::PairWithChannel(p, c) => InequalityInput::PairWithChannel(p, c),
            Self::Classical(cp) => InequalityInput::Classical(cp),
            Self::Scalar(r) => InequalityInput::Scalar(*r),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Self::Pair(p) => json!({ "pair": p.to_json() }),
            Self::PairWithChannel(p, c) => json!({ "pair": p.to_json(), "channel": channel_json(c) }),
            Self::Classical(cp) => json!({ "p": cp.p(), "q": cp.q() }),
            Self::Scalar(r) => json!({ "r": r }),
        }
    }
}

fn channel_json(c: &Channel) -> Value {
    let v = c.isometry();
    let rows = |f: fn(&num_complex::Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..v.nrows()).map(|i| (0..v.ncols()).map(|j| f(&v[(i, j)])).collect()).collect()
    };
    json!({
        "dim_in": c.dim_in(),
        "dim_out": c.dim_out(),
        "dim_env": c.dim_env(),
        "isometry_re": rows(|z| z.re),
        "isometry_im": rows(|z| z.im),
    })
}

struct Case {
    input: TrialInput,
    family: &'static str,
    dim: usize,
    note: Value,
}

/// Rebuilds the input of trial `t`; pure function of `(kind, dims, seed, t)`.
fn trial_case(kind: InequalityKind, dims: &[usize], seed: u64, trial: usize, s_grid: &[f64]) -> Result<Case> {
    let mut rng = trial_rng(seed, trial as u64);
    let dim = dims[rng.random_range(0..dims.len())];
    match kind {
        InequalityKind::ScalarLog | InequalityKind::ScalarAux => {
            // every 16th trial sits on the equality point of the first order in the grid
            let special = if kind == InequalityKind::ScalarLog {
                scalar::critical_r(RenyiOrder::new(s_grid[0])?)
            } else {
                1.0
            };
            let r = if trial.is_multiple_of(16) && special.is_finite() { special } else { log_uniform(&mut rng, 1e-8, 1e8) };
            Ok(Case { input: TrialInput::Scalar(r), family: "log_uniform", dim: 1, note: Value::Null })
        }
        InequalityKind::ClassicalThreshold => {
            let (cp, family) = sample_classical(trial, dim, &mut rng)?;
            Ok(Case { input: TrialInput::Classical(cp), family, dim, note: Value::Null })
        }
        InequalityKind::DpiQ => {
            let family = [PairFamily::Density, PairFamily::Scaled, PairFamily::NearCommuting][trial % 3];
            let (pair, note) = sample_pair(family, dim, &mut rng)?;
            let channel = if trial % 8 == 7 {
                Channel::from_isometry(linalg::haar_unitary(&mut rng, dim), dim, 1)?
            } else {
                let dim_out = dims[rng.random_range(0..dims.len())];
                let lo = dim.div_ceil(dim_out).max(dim_out.div_ceil(dim));
                let dim_env = rng.random_range(lo..=lo + 2);
                linalg::sample_channel_with(&mut rng, dim, dim_out, dim_env)?
            };
            Ok(Case { input: TrialInput::PairWithChannel(pair, channel), family: family.name(), dim, note })
        }
        _ => {
            let family = PairFamily::ALL[trial % PairFamily::ALL.len()];
            let (pair, note) = sample_pair(family, dim, &mut rng)?;
            Ok(Case { input: TrialInput::Pair(pair), family: family.name(), dim, note })
        }
    }
}

struct TrialOutcome {
    margin: Margin,
    s: f64,
}

fn run_trial(
    kind: InequalityKind,
    dims: &[usize],
    s_grid: &[f64],
    seed: u64,
    trial: usize,
    cfg: &QuadratureConfig,
) -> Result<TrialOutcome> {
    let case = trial_case(kind, dims, seed, trial, s_grid)?;
    let mut worst: Option<TrialOutcome> = None;
    for &s in s_grid {
        let margin = check_inequality_with(kind, case.input.as_input(), RenyiOrder::new(s)?, cfg)?;
        if worst.as_ref().is_none_or(|w| margin.normalized < w.margin.normalized) {
            worst = Some(TrialOutcome { margin, s });
        }
    }
    worst.ok_or_else(|| Error::InvalidInput("empty s grid".into()))
}

fn validate_campaign(dims: &[usize], trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    if dims.is_empty() {
        return Err(Error::InvalidInput("dims must be nonempty".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > MAX_DIM) {
        return Err(Error::InvalidInput(format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

fn effective_s_grid(kind: InequalityKind, s_grid: &[f64]) -> Result<Vec<f64>> {
    if s_grid.is_empty() {
        return Err(Error::InvalidInput("s grid must be nonempty".into()));
    }
    for &s in s_grid {
        RenyiOrder::new(s)?;
    }
    match kind {
        InequalityKind::DpiQ => Ok(vec![s_grid[0]]),
        InequalityKind::ScalarAux => {
            let grid: Vec<f64> = s_grid.iter().copied().filter(|&s| s >= THRESHOLD_S0 - 1e-12).collect();
            if grid.is_empty() {
                return Err(Error::Domain(format!("scalar_aux needs some s >= s0 = {THRESHOLD_S0}")));
            }
            Ok(grid)
        }
        _ => Ok(s_grid.to_vec()),
    }
}

/// Fuzzes `kind` over `trials` random inputs of the given dimensions, each
/// evaluated at every order of `s_grid`.
///
/// Operator kinds cycle through the [`PairFamily`] samplers; `classical_threshold`
/// draws Dirichlet, uniform-`q`, witness and concentrated probability pairs;
/// the scalar kinds draw `r` log-uniformly in `[1e-8, 1e8]` (`scalar_aux` only
/// uses the orders `s >= s0`). `dpi_Q` is forwarded to [`dpi_fuzz`].
pub fn fuzz_suite(
    kind: InequalityKind,
    dims: &[usize],
    trials: usize,
    s_grid: &[f64],
    seed: u64,
) -> Result<VerificationReport> {
    run_campaign(kind, dims, trials, s_grid, seed, kind.default_tolerance())
}

/// Data-processing campaign: random pairs pushed through random Stinespring
/// channels (every eighth one unitary); the margin is `Q(rho||sigma) - Q(Φrho||Φsigma)`.
pub fn dpi_fuzz(trials: usize, dims: &[usize], seed: u64) -> Result<VerificationReport> {
    let kind = InequalityKind::DpiQ;
    run_campaign(kind, dims, trials, &[1.0], seed, kind.default_tolerance())
}

fn run_campaign(
    kind: InequalityKind,
    dims: &[usize],
    trials: usize,
    s_grid: &[f64],
    seed: u64,
    tolerance: f64,
) -> Result<VerificationReport> {
    validate_campaign(dims, trials)?;
    let grid = effective_s_grid(kind, s_grid)?;
    let cfg = verification_quadrature();
    let outcomes: Vec<Result<TrialOutcome>> = in_pool(|| {
        (0..trials).into_par_iter().map(|t| run_trial(kind, dims, &grid, seed, t, &cfg)).collect()
    })?;
    let mut best: Option<(usize, TrialOutcome)> = None;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        if best.as_ref().is_none_or(|(_, b)| outcome.margin.normalized < b.margin.normalized) {
            best = Some((t, outcome));
        }
    }
    let (trial, worst) = best.expect("trials >= 1");
    let case = trial_case(kind, dims, seed, trial, &grid)?;
    let argmin_case = json!({
        "trial": trial,
        "family": case.family,
        "dim": case.dim,
        "s": worst.s,
        "lhs": worst.margin.lhs,
        "rhs": worst.margin.rhs,
        "margin": worst.margin.margin,
        "sample": case.note,
        "input": case.input.to_json(),
    });
    Ok(VerificationReport {
        kind,
        trials,
        seed,
        dims: dims.to_vec(),
        s_grid: if kind == InequalityKind::DpiQ { Vec::new() } else { grid.clone() },
        evaluations: trials * grid.len(),
        min_margin: worst.margin.normalized,
        argmin_case,
        passed: worst.margin.normalized >= -tolerance,
        tolerance,
        wall_time_s: None,
    })
}

/// One evaluated `(trial, s)` case of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseMargin {
    pub trial: usize,
    pub s: f64,
    pub family: &'static str,
    pub dim: usize,
    pub margin: Margin,
}

/// Every margin of the campaign [`fuzz_suite`] (or [`dpi_fuzz`]) would run,
/// in trial order, without aggregation.
pub fn campaign_margins(
    kind: InequalityKind,
    dims: &[usize],
    trials: usize,
    s_grid: &[f64],
    seed: u64,
) -> Result<Vec<CaseMargin>> {
    validate_campaign(dims, trials)?;
    let grid = effective_s_grid(kind, s_grid)?;
    let cfg = verification_quadrature();
    let per_trial: Vec<Result<Vec<CaseMargin>>> = in_pool(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let case = trial_case(kind, dims, seed, t, &grid)?;
                grid.iter()
                    .map(|&s| {
                        let margin = check_inequality_with(kind, case.input.as_input(), RenyiOrder::new(s)?, &cfg)?;
                        Ok(CaseMargin { trial: t, s, family: case.family, dim: case.dim, margin })
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut out = Vec::with_capacity(trials * grid.len());
    for cases in per_trial {
        out.extend(cases?);
    }
    Ok(out)
}

/// Runs [`fuzz_suite`] (or [`dpi_fuzz`] for `dpi_Q`) and records the wall time.
pub fn timed_campaign(
    kind: InequalityKind,
    dims: &[usize],
    trials: usize,
    s_grid: &[f64],
    seed: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut report = match kind {
        InequalityKind::DpiQ => dpi_fuzz(trials, dims, seed)?,
        _ => fuzz_suite(kind, dims, trials, s_grid, seed)?,
    };
    report.wall_time_s = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

// ---------------------------------------------------------------------------
// Supremum searches

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// `Q / Q̃_{1+s}`.
    #[serde(rename = "Q_over_sandwiched")]
    QOverSandwiched,
    /// `Q / Q_{1+s}`.
    #[serde(rename = "Q_over_layercake")]
    QOverLayercake,
    /// `Q_2(rho||rho+sigma) / Q_{1+s}`.
    #[serde(rename = "Q2coll_over_layercake")]
    Q2CollOverLayercake,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Self::QOverSandwiched, Self::QOverLayercake, Self::Q2CollOverLayercake];

    pub fn name(&self) -> &'static str {
        match self {
            Self::QOverSandwiched => "Q_over_sandwiched",
            Self::QOverLayercake => "Q_over_layercake",
            Self::Q2CollOverLayercake => "Q2coll_over_layercake",
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown objective '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Arbitrary strictly positive `sigma`, positive `rho`.
    Positive,
    /// Density matrices.
    Normalized,
    /// Commuting density matrices (diagonal in a common basis).
    CommutingNormalized,
}

impl Constraint {
    pub const ALL: [Constraint; 3] = [Self::Positive, Self::Normalized, Self::CommutingNormalized];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Normalized => "normalized",
            Self::CommutingNormalized => "commuting_normalized",
        }
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown constraint '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSearchConfig {
    pub objective: Objective,
    pub constraint: Constraint,
    pub s: f64,
    /// Total number of objective evaluations across all restarts.
    pub budget: usize,
    pub seed: u64,
    /// Restart `j` works in dimension `1 + j % max_dim`.
    pub max_dim: usize,
    pub restarts: usize,
}

impl SupSearchConfig {
    pub fn new(objective: Objective, constraint: Constraint, s: f64, budget: usize, seed: u64) -> Self {
        Self { objective, constraint, s, budget, seed, max_dim: 4, restarts: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSearchReport {
    pub objective: Objective,
    pub constraint: Constraint,
    pub s: f64,
    pub budget: usize,
    pub seed: u64,
    pub evaluations: usize,
    pub best_ratio: f64,
    pub best_dim: usize,
    pub best_restart: usize,
    pub best_pair: PairJson,
    /// Proven supremum for this objective and constraint.
    pub proven_bound: f64,
    pub bound_name: String,
    /// `best_ratio > proven_bound (1 + 1e-6)`: a numerical bug, never a disproof.
    pub exceeded_bound: bool,
    /// Set when a normalized noncommuting search beats `ln 2` above the threshold.
    pub finding: Option<String>,
    pub passed: bool,
}

/// Proven supremum of `objective` under `constraint`, with its name.
pub fn proven_bound(objective: Objective, constraint: Constraint, s: RenyiOrder) -> (f64, &'static str) {
    match objective {
        Objective::Q2CollOverLayercake => (scalar::c_constant(s.s()).unwrap_or(f64::NAN), "c_s"),
        _ if constraint == Constraint::CommutingNormalized && s.s() > THRESHOLD_S0 => (LN_2, "ln2"),
        _ => (scalar::g_constant(s).g_s, "G_s"),
    }
}

fn parameter_count(constraint: Constraint, dim: usize) -> usize {
    match constraint {
        Constraint::CommutingNormalized => 2 * dim,
        _ => 2 * dim * dim,
    }
}

const LOG_DIAGONAL_RANGE: f64 = 20.0;

/// Largest condition number of `sigma` admitted by [`sup_search`]. Evaluating
/// the divergences loses about `eps * cond(sigma)` in relative accuracy, and a
/// maximizer left alone finds and exploits that error; the extremal witnesses
/// have `sigma` proportional to the identity.
pub const SEARCH_CONDITION_LIMIT: f64 = 1e6;

fn cholesky_factor(theta: &[f64], dim: usize) -> CMatrix {
    let mut l = CMatrix::zeros(dim, dim);
    let mut k = dim;
    for i in 0..dim {
        l[(i, i)] = theta[i].clamp(-LOG_DIAGONAL_RANGE, LOG_DIAGONAL_RANGE).exp().into();
        for j in 0..i {
            l[(i, j)] = num_complex::Complex64::new(theta[k], theta[k + 1]);
            k += 2;
        }
    }
    l
}

fn softmax(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = theta.iter().map(|&t| (t - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Pair encoded by `theta`: Cholesky-like factors `L` with an exponentiated
/// diagonal (`pair = L L†`), or softmax weights for the commuting constraint.
/// Factor-encoded pairs with `cond(sigma) > SEARCH_CONDITION_LIMIT` are rejected.
fn decode_pair(theta: &[f64], dim: usize, constraint: Constraint) -> Result<OperatorPair> {
    match constraint {
        Constraint::CommutingNormalized => OperatorPair::with_psd_rho(
            HermitianOperator::from_diagonal(&softmax(&theta[..dim]))?,
            HermitianOperator::from_diagonal(&softmax(&theta[dim..]))?,
        ),
        _ => {
            let half = dim * dim;
            let build = |t: &[f64]| {
                let l = cholesky_factor(t, dim);
                HermitianOperator::new(&l * l.adjoint())
            };
            let (mut rho, mut sigma) = (build(&theta[..half])?, build(&theta[half..])?);
            if constraint == Constraint::Normalized {
                rho = rho.scale(1.0 / rho.trace());
                sigma = sigma.scale(1.0 / sigma.trace());
            }
            let ev = sigma.eigenvalues()?;
            let (min, max) = (ev[0], ev[ev.len() - 1]);
            if !(max <= SEARCH_CONDITION_LIMIT * min) {
                return Err(Error::NotStrictlyPositive { min, max });
            }
            OperatorPair::with_psd_rho(rho, sigma)
        }
    }
}

/// Value of `objective` on `pair`.
pub fn objective_value(objective: Objective, pair: &OperatorPair, s: RenyiOrder, cfg: &QuadratureConfig) -> Result<f64> {
    let value = match objective {
        Objective::QOverSandwiched => divergences::q_direct(pair)? / divergences::q_alpha_sandwiched(pair, s)?,
        Objective::QOverLayercake => {
            let tail = TailFunction::new(pair)?;
            divergences::q_direct(pair)? / divergences::q_alpha_layercake_from_tail(&tail, s, cfg)?
        }
        Objective::Q2CollOverLayercake => {
            let tail = TailFunction::new(pair)?;
            divergences::q2_collision_from_tail(&tail, cfg)? / divergences::q_alpha_layercake_from_tail(&tail, s, cfg)?
        }
    };
    if !value.is_finite() {
        return Err(Error::Domain(format!("objective is not finite ({value})")));
    }
    Ok(value)
}

struct LocalResult {
    theta: Vec<f64>,
    value: f64,
    evaluations: usize,
}

/// Coordinate-wise Gaussian hill climbing: each coordinate keeps its own step,
/// doubled on improvement and halved on failure; stops when the budget is
/// spent or every step is below `1e-10`.
fn local_search<R: Rng + ?Sized>(
    rng: &mut R,
    mut theta: Vec<f64>,
    budget: usize,
    mut f: impl FnMut(&[f64]) -> f64,
) -> LocalResult {
    let n = theta.len();
    let mut best = f(&theta);
    let mut evaluations = 1;
    let mut step = vec![0.5; n];
    let mut i = 0;
    while evaluations < budget && step.iter().any(|&h| h >= 1e-10) {
        let old = theta[i];
        let z: f64 = rng.sample(StandardNormal);
        theta[i] = old + step[i] * z;
        let v = f(&theta);
        evaluations += 1;
        if v > best {
            best = v;
            step[i] = (2.0 * step[i]).min(8.0);
        } else {
            theta[i] = old;
            step[i] *= 0.5;
        }
        i = (i + 1) % n;
    }
    LocalResult { theta, value: best, evaluations }
}

fn split_budget(budget: usize, parts: usize, j: usize) -> usize {
    budget / parts + usize::from(j < budget % parts)
}

/// Multi-start derivative-free search for the supremum of `objective`.
pub fn sup_search(cfg: &SupSearchConfig) -> Result<SupSearchReport> {
    let s = RenyiOrder::new(cfg.s)?;
    if cfg.budget == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidInput("budget and restarts must be >= 1".into()));
    }
    if cfg.max_dim == 0 || cfg.max_dim > MAX_DIM {
        return Err(Error::InvalidInput(format!("max_dim must lie in 1..={MAX_DIM}")));
    }
    let restarts = cfg.restarts.min(cfg.budget);
    let qcfg = search_quadrature();
    let objective = |theta: &[f64], dim: usize| -> f64 {
        decode_pair(theta, dim, cfg.constraint)
            .and_then(|pair| objective_value(cfg.objective, &pair, s, &qcfg))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let runs: Vec<(usize, LocalResult)> = in_pool(|| {
        (0..restarts)
            .into_par_iter()
            .map(|j| {
                let dim = 1 + j % cfg.max_dim;
                let mut rng = trial_rng(cfg.seed, j as u64);
                let theta0: Vec<f64> = (0..parameter_count(cfg.constraint, dim))
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let budget = split_budget(cfg.budget, restarts, j);
                (dim, local_search(&mut rng, theta0, budget, |t| objective(t, dim)))
            })
            .collect()
    })?;
    let evaluations = runs.iter().map(|(_, r)| r.evaluations).sum();
    let (best_restart, (best_dim, best)) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1 .1.value > a.1 .1.value { b } else { a })
        .expect("restarts >= 1");
    let pair = decode_pair(&best.theta, best_dim, cfg.constraint)?;
    let best_ratio = objective_value(cfg.objective, &pair, s, &verification_quadrature()).unwrap_or(best.value);
    let (bound, bound_name) = proven_bound(cfg.objective, cfg.constraint, s);
    let exceeded_bound = best_ratio > bound * (1.0 + 1e-6);
    let finding = (cfg.constraint == Constraint::Normalized
        && cfg.objective != Objective::Q2CollOverLayercake
        && cfg.s > THRESHOLD_S0
        && best_ratio > LN_2 + 1e-6)
        .then(|| format!("normalized ratio {best_ratio} exceeds ln 2 at s = {}", cfg.s));
    Ok(SupSearchReport {
        objective: cfg.objective,
        constraint: cfg.constraint,
        s: cfg.s,
        budget: cfg.budget,
        seed: cfg.seed,
        evaluations,
        best_ratio,
        best_dim,
        best_restart,
        best_pair: pair.to_json(),
        proven_bound: bound,
        bound_name: bound_name.to_string(),
        exceeded_bound,
        finding,
        passed: !exceeded_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSupReport {
    pub s: f64,
    pub d_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub best_ratio: f64,
    pub best_p: Vec<f64>,
    pub best_q: Vec<f64>,
    /// `classical_uniform_objective` of the uniform distribution on `d_max` points.
    pub uniform_value: f64,
    /// `G_s` for `s <= s0`, `ln 2` above.
    pub bound: f64,
    pub g_s: f64,
    pub exceeded_bound: bool,
    pub passed: bool,
}

const CLASSICAL_LOCAL_STARTS: usize = 16;
const CLASSICAL_LOCAL_BUDGET: usize = 4000;

fn classical_ratio(p: &[f64], q: &[f64], s: RenyiOrder) -> Result<f64> {
    let cp = ClassicalPair::new(p.to_vec(), q.to_vec())?;
    Ok(divergences::classical_q(&cp) / divergences::classical_q_alpha(&cp, s))
}

/// Best ratio `Q(p||q)/Q_{1+s}(p||q)` over probability vectors of length at
/// most `d_max`.
///
/// Draws `samples` random pairs (Dirichlet and witness-shaped `p` against a
/// uniform `q`, Dirichlet and concentrated general pairs), then refines the
/// best few by hill climbing on softmax logits.
pub fn classical_sup_search(d_max: usize, s: f64, samples: usize, seed: u64) -> Result<ClassicalSupReport> {
    let order = RenyiOrder::new(s)?;
    if d_max == 0 || d_max > MAX_DIM {
        return Err(Error::InvalidInput(format!("d_max must lie in 1..={MAX_DIM}")));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    let draws: Vec<Result<(f64, ClassicalPair)>> = in_pool(|| {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, i as u64);
                let d = rng.random_range(1..=d_max);
                let (cp, _) = sample_classical(i, d, &mut rng)?;
                Ok((classical_ratio(cp.p(), cp.q(), order)?, cp))
            })
            .collect()
    })?;
    let mut draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
    draws.sort_by(|a, b| b.0.total_cmp(&a.0));
    draws.truncate(CLASSICAL_LOCAL_STARTS);

    let logits = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| x.max(1e-300).ln()).collect() };
    let refined: Vec<(f64, Vec<f64>, Vec<f64>)> = in_pool(|| {
        draws
            .par_iter()
            .enumerate()
            .map(|(j, (value, cp))| {
                let d = cp.len();
                let mut theta = logits(cp.p());
                theta.extend(logits(cp.q()));
                let mut rng = trial_rng(seed ^ 0x5eed, j as u64);
                let res = local_search(&mut rng, theta, CLASSICAL_LOCAL_BUDGET, |t| {
                    classical_ratio(&softmax(&t[..d]), &softmax(&t[d..]), order).unwrap_or(f64::NEG_INFINITY)
                });
                if res.value > *value {
                    (res.value, softmax(&res.theta[..d]), softmax(&res.theta[d..]))
                } else {
                    (*value, cp.p().to_vec(), cp.q().to_vec())
                }
            })
            .collect()
    })?;
    let uniform = vec![1.0 / d_max as f64; d_max];
    let uniform_value = witnesses::classical_uniform_objective(&uniform, order)?;
    let (best_ratio, best_p, best_q) = refined
        .into_iter()
        .fold((uniform_value, uniform.clone(), uniform), |a, b| if b.0 > a.0 { b } else { a });
    let g_s = scalar::g_constant(order).g_s;
    let bound = classical_constant(order);
    let exceeded_bound = if s > THRESHOLD_S0 { best_ratio > LN_2 + 1e-9 } else { best_ratio > g_s * (1.0 + 1e-6) };
    Ok(ClassicalSupReport {
        s,
        d_max,
        samples,
        seed,
        best_ratio,
        best_p,
        best_q,
        uniform_value,
        bound,
        g_s,
        exceeded_bound,
        passed: !exceeded_bound,
    })
}
