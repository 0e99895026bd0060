//! The divergence `Q(rho||sigma) = Tr[rho(log(rho+sigma) - log sigma)]` and
//! its relatives, each computed along every route available:
//!
//! - directly from matrix logarithms,
//! - as a layer-cake integral of the tail function `f(r) = Tr[rho {rho > r sigma}]`,
//! - by integrating the Bogoliubov–Kubo–Mori form `Q_2(rho||sigma + t rho)` over `t in [0, 1]`.
//!
//! Layer-cake integrals are split at the generalized eigenvalues of the pair,
//! which are exactly the points where `f` may jump; between them `f` is
//! analytic and Gauss–Kronrod converges quickly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianOperator, OperatorPair};
use crate::quadrature::{self, GaussLegendre, QuadratureConfig};
use crate::scalar::RenyiOrder;

/// Gauss–Legendre order per panel for the BKM route.
pub const BKM_ORDER: usize = 64;
const DIVIDED_DIFFERENCE_SERIES: f64 = 1e-8;

/// `f(r) = Tr[rho {rho > r sigma}]` for a fixed pair.
#[derive(Debug, Clone)]
pub struct TailFunction {
    rho: CMatrix,
    sigma: CMatrix,
    trace_rho: f64,
    r_max: f64,
    generalized: Vec<f64>,
    breakpoints: Vec<f64>,
}

impl TailFunction {
    pub fn new(pair: &OperatorPair) -> Result<Self> {
        let generalized = linalg::generalized_eigenvalues(pair)?;
        let r_max = generalized.last().copied().unwrap_or(0.0).max(0.0);
        let mut breakpoints: Vec<f64> = generalized.iter().copied().filter(|&x| x > 0.0).collect();
        breakpoints.dedup();
        Ok(Self {
            rho: pair.rho().matrix().clone(),
            sigma: pair.sigma().matrix().clone(),
            trace_rho: pair.rho().trace(),
            r_max,
            generalized,
            breakpoints,
        })
    }

    /// `R = ||sigma^{-1/2} rho sigma^{-1/2}||_inf`; `f` vanishes beyond it.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Generalized eigenvalues of the pair, the jump locations of `f`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn trace_rho(&self) -> f64 {
        self.trace_rho
    }

    /// `f(r)`. By Sylvester's law of inertia `rho - r sigma` has exactly as
    /// many positive eigenvalues as there are generalized eigenvalues above
    /// `r`, so the projector is spanned by that many top eigenvectors. This
    /// avoids a magnitude threshold, which misclassifies small positive
    /// eigenvalues when `sigma` is badly conditioned.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let m = self.generalized.iter().filter(|&&g| g > r).count();
        if m == 0 {
            return Ok(0.0);
        }
        let diff = HermitianOperator::from_product(&self.rho - self.sigma.scale(r));
        let dec = diff.eigh()?;
        let v = &dec.eigenvectors;
        let n = dec.eigenvalues.len();
        let mut acc = 0.0;
        for j in n - m..n {
            let col = v.column(j);
            acc += (col.adjoint() * &self.rho * col)[(0, 0)].re;
        }
        Ok(acc)
    }

    /// `∫ weight(r) f(r) dr` over `[0, R]`, split at the breakpoints.
    fn integrate_weighted(&self, weight: impl Fn(f64) -> f64, cfg: &QuadratureConfig) -> Result<f64> {
        if self.r_max <= 0.0 {
            return Ok(0.0);
        }
        let failure = RefCell::new(None);
        let res = quadrature::integrate(
            |r| match self.eval(r) {
                Ok(v) => weight(r) * v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            0.0,
            self.r_max,
            &self.breakpoints,
            cfg,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(res.value)
    }

    /// `s ∫_0^R r^{s-1} f(r) dr` evaluated as `∫_0^{R^s} f(u^{1/s}) du`.
    fn integrate_power(&self, s: f64, cfg: &QuadratureConfig) -> Result<f64> {
        if self.r_max <= 0.0 {
            return Ok(0.0);
        }
        let upper = self.r_max.powf(s);
        let cuts: Vec<f64> = self.breakpoints.iter().map(|b| b.powf(s)).collect();
        let inv = 1.0 / s;
        let failure = RefCell::new(None);
        let res = quadrature::integrate(
            |u| match self.eval(u.powf(inv)) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            0.0,
            upper,
            &cuts,
            cfg,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(res.value)
    }
}

/// Classical pair `(p, q)`: `p >= 0`, `q > 0`, equal lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPair {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl ClassicalPair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::DimensionMismatch(p.len(), q.len()));
        }
        if p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput("p must be finite and nonnegative".into()));
        }
        if q.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput("q must be finite and strictly positive".into()));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Both vectors sum to one within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.p.iter().sum::<f64>() - 1.0).abs() <= tol && (self.q.iter().sum::<f64>() - 1.0).abs() <= tol
    }

    /// Diagonal embedding as an operator pair.
    pub fn to_operator_pair(&self) -> Result<OperatorPair> {
        OperatorPair::with_psd_rho(
            HermitianOperator::from_diagonal(&self.p)?,
            HermitianOperator::from_diagonal(&self.q)?,
        )
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.p.iter().copied().zip(self.q.iter().copied()).filter(|&(p, _)| p > 0.0)
    }
}

/// `Σ p_x ln(1 + p_x/q_x)`.
pub fn classical_q(cp: &ClassicalPair) -> f64 {
    cp.terms().map(|(p, q)| p * (p / q).ln_1p()).sum()
}

/// `Σ p_x^{1+s} q_x^{-s}`.
pub fn classical_q_alpha(cp: &ClassicalPair, s: RenyiOrder) -> f64 {
    let s = s.s();
    cp.terms().map(|(p, q)| p * (p / q).powf(s)).sum()
}

/// `Σ p_x² / q_x`.
pub fn classical_q2(cp: &ClassicalPair) -> f64 {
    cp.terms().map(|(p, q)| p * p / q).sum()
}

/// `Q_2(p || p + q) = Σ p_x² / (p_x + q_x)`.
pub fn classical_collision(cp: &ClassicalPair) -> f64 {
    cp.terms().map(|(p, q)| p * p / (p + q)).sum()
}

fn trace_rho_log(rho: &HermitianOperator, a: &HermitianOperator) -> Result<f64> {
    Ok(rho.trace_product(&linalg::log_positive(a)?))
}

/// `Q(rho||sigma) = Tr[rho(log(rho+sigma) - log sigma)]`.
pub fn q_direct(pair: &OperatorPair) -> Result<f64> {
    let sum = pair.rho().add_scaled(1.0, pair.sigma())?;
    let rho = pair.rho();
    Ok(trace_rho_log(rho, &sum)? - trace_rho_log(rho, pair.sigma())?)
}

/// Umegaki relative entropy `Tr[rho(log rho - log sigma)]` with `0 log 0 = 0`.
pub fn umegaki(pair: &OperatorPair) -> Result<f64> {
    let ev = pair.rho().eigenvalues()?;
    let entropy_part: f64 = ev.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum();
    Ok(entropy_part - trace_rho_log(pair.rho(), pair.sigma())?)
}

/// Layer-cake route `∫_0^R f(r)/(1+r) dr`.
pub fn q_layercake(pair: &OperatorPair, cfg: &QuadratureConfig) -> Result<f64> {
    TailFunction::new(pair)?.integrate_weighted(|r| 1.0 / (1.0 + r), cfg)
}

/// First divided difference of `ln` at `(a, b)`, both positive.
pub fn log_divided_difference(a: f64, b: f64) -> f64 {
    let sum = a + b;
    let diff = a - b;
    if diff.abs() <= DIVIDED_DIFFERENCE_SERIES * sum {
        // 2 atanh(δ)/(a-b) = (2/(a+b)) (1 + δ²/3 + δ⁴/5 + ...), δ = (a-b)/(a+b)
        let d2 = (diff / sum).powi(2);
        2.0 / sum * (1.0 + d2 / 3.0 + d2 * d2 / 5.0)
    } else {
        2.0 * (diff / sum).atanh() / diff
    }
}

/// BKM quadratic form with `sigma` given by its decomposition.
fn q2_bkm_raw(rho: &CMatrix, sigma: &HermitianOperator) -> Result<f64> {
    let dec = sigma.eigh()?;
    if dec.min() <= 0.0 {
        return Err(Error::NotStrictlyPositive { min: dec.min(), max: dec.max() });
    }
    let v = &dec.eigenvectors;
    let rot: DMatrix<Complex64> = v.adjoint() * rho * v;
    let lam = &dec.eigenvalues;
    let n = lam.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += rot[(i, j)].norm_sqr() * log_divided_difference(lam[i], lam[j]);
        }
    }
    Ok(acc)
}

/// `Q_2(rho||sigma) = d/dt Tr[rho log(sigma + t rho)]` at `t = 0`, evaluated
/// exactly in the eigenbasis of `sigma`.
pub fn q2_bkm(pair: &OperatorPair) -> Result<f64> {
    q2_bkm_raw(pair.rho().matrix(), pair.sigma())
}

/// `∫_0^1 Q_2(rho||sigma + t rho) dt`.
///
/// The integrand's nearest singularity sits at `t = -1/R`, so `[0, 1]` is cut
/// into panels `[0, 1/R], [1/R, 4/R], ...` and each panel gets a
/// 64-point Gauss–Legendre rule.
pub fn q_bkm_route(pair: &OperatorPair) -> Result<f64> {
    let gl = GaussLegendre::new(BKM_ORDER)?;
    let r = linalg::relative_sup(pair)?;
    let mut edges = vec![0.0];
    if r > 1.0 {
        let mut t = 1.0 / r;
        while t < 1.0 {
            edges.push(t);
            t *= 4.0;
        }
    }
    edges.push(1.0);
    let rho = pair.rho();
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += gl.integrate_result(
            |t| q2_bkm_raw(rho.matrix(), &pair.sigma().add_scaled(t, rho)?),
            w[0],
            w[1],
        )?;
    }
    Ok(total)
}

/// Collision layer-cake divergence `∫_0^R f(r) dr`.
pub fn q2_layercake(pair: &OperatorPair, cfg: &QuadratureConfig) -> Result<f64> {
    TailFunction::new(pair)?.integrate_weighted(|_| 1.0, cfg)
}

/// `Q_2(rho||rho+sigma)` as `∫_0^R f(t)/(1+t)² dt` over the tail of `(rho, sigma)`.
pub fn q2_collision(pair: &OperatorPair, cfg: &QuadratureConfig) -> Result<f64> {
    q2_collision_from_tail(&TailFunction::new(pair)?, cfg)
}

pub fn q2_collision_from_tail(tail: &TailFunction, cfg: &QuadratureConfig) -> Result<f64> {
    tail.integrate_weighted(|t| 1.0 / ((1.0 + t) * (1.0 + t)), cfg)
}

/// `Q_2(rho||rho+sigma)` along both routes: the `(1+t)^{-2}` weighted tail of
/// `(rho, sigma)` and the plain layer cake of `(rho, rho + sigma)`. Fails with
/// [`Error::RouteMismatch`] when they disagree beyond ten times the tolerance.
pub fn q2_collision_vs_sum(pair: &OperatorPair, cfg: &QuadratureConfig) -> Result<f64> {
    let weighted = q2_collision(pair, cfg)?;
    let direct = q2_layercake(&pair.with_sigma_plus_rho()?, cfg)?;
    if (weighted - direct).abs() > 10.0 * cfg.target(weighted) {
        return Err(Error::RouteMismatch(weighted, direct));
    }
    Ok(weighted)
}

/// Layer-cake Rényi quantity `Q_{1+s} = s ∫_0^∞ r^{s-1} f(r) dr`.
pub fn q_alpha_layercake(pair: &OperatorPair, s: RenyiOrder, cfg: &QuadratureConfig) -> Result<f64> {
    TailFunction::new(pair)?.integrate_power(s.s(), cfg)
}

pub fn q_alpha_layercake_from_tail(tail: &TailFunction, s: RenyiOrder, cfg: &QuadratureConfig) -> Result<f64> {
    tail.integrate_power(s.s(), cfg)
}

/// Sandwiched quantity `Tr[(sigma^{-s/(2(1+s))} rho sigma^{-s/(2(1+s))})^{1+s}]`.
pub fn q_alpha_sandwiched(pair: &OperatorPair, s: RenyiOrder) -> Result<f64> {
    let s = s.s();
    let m = linalg::positive_power(pair.sigma(), -s / (2.0 * (1.0 + s)))?;
    let x = HermitianOperator::from_product(m.matrix() * pair.rho().matrix() * m.matrix());
    let ev = x.eigenvalues()?;
    Ok(ev.iter().map(|&l| l.max(0.0).powf(1.0 + s)).sum())
}
