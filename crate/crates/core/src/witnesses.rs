//! Commuting optimality witnesses `rho = Π_k / k`, `sigma = (λ/d) I_d`.
//!
//! On this family every divergence collapses to a function of the single
//! parameter `r = d/(λk)`: `Q = ln(1+r)`, `Q̃_{1+s} = Q_{1+s} = r^s` and
//! `Q_2(rho||rho+sigma) = r/(1+r)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::divergences;
use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, OperatorPair, MAX_DIM};
use crate::scalar::{self, RenyiOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessSpec {
    pub d: usize,
    pub k: usize,
    pub lambda: f64,
}

impl WitnessSpec {
    pub fn new(d: usize, k: usize, lambda: f64) -> Result<Self> {
        if d == 0 || k == 0 || k > d {
            return Err(Error::InvalidInput(format!("need 1 <= k ({k}) <= d ({d})")));
        }
        if d > MAX_DIM {
            return Err(Error::DimensionTooLarge(d));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda = {lambda} must be positive")));
        }
        Ok(Self { d, k, lambda })
    }

    /// Normalized witness (`λ = 1`), so `r = d/k >= 1`.
    pub fn normalized(d: usize, k: usize) -> Result<Self> {
        Self::new(d, k, 1.0)
    }

    /// `r = d/(λk)`.
    pub fn r_effective(&self) -> f64 {
        self.d as f64 / (self.lambda * self.k as f64)
    }

    pub fn is_normalized(&self) -> bool {
        self.lambda == 1.0
    }
}

/// The pair `(Π_k/k, (λ/d) I_d)`; `rho` is rank `k`, `sigma` strictly positive.
pub fn make_witness(spec: &WitnessSpec) -> Result<OperatorPair> {
    let (d, k) = (spec.d, spec.k);
    let diag: Vec<f64> = (0..d).map(|i| if i < k { 1.0 / k as f64 } else { 0.0 }).collect();
    let rho = HermitianOperator::from_diagonal(&diag)?;
    let sigma = HermitianOperator::identity(d)?.scale(spec.lambda / d as f64);
    OperatorPair::with_psd_rho(rho, sigma)
}

/// `λ = d/(k r)`, realizing `r_effective = r_target`.
pub fn lambda_for_target_r(d: usize, k: usize, r_target: f64) -> Result<f64> {
    if !(r_target > 0.0 && r_target.is_finite()) {
        return Err(Error::InvalidInput(format!("target r = {r_target} must be positive")));
    }
    if d == 0 || k == 0 || k > d {
        return Err(Error::InvalidInput(format!("need 1 <= k ({k}) <= d ({d})")));
    }
    Ok(d as f64 / (k as f64 * r_target))
}

/// Divergences of a witness, numerically and in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessEvaluation {
    pub spec: WitnessSpec,
    pub s: f64,
    pub r: f64,
    pub q_direct: f64,
    pub q_alpha_sandwiched: f64,
    pub ratio: f64,
    pub q_closed_form: f64,
    pub q_alpha_closed_form: f64,
    pub ratio_closed_form: f64,
    pub g_s: f64,
}

pub fn evaluate_witness(spec: &WitnessSpec, s: RenyiOrder) -> Result<WitnessEvaluation> {
    let pair = make_witness(spec)?;
    let q = divergences::q_direct(&pair)?;
    let qa = divergences::q_alpha_sandwiched(&pair, s)?;
    let r = spec.r_effective();
    Ok(WitnessEvaluation {
        spec: *spec,
        s: s.s(),
        r,
        q_direct: q,
        q_alpha_sandwiched: qa,
        ratio: q / qa,
        q_closed_form: r.ln_1p(),
        q_alpha_closed_form: r.powf(s.s()),
        ratio_closed_form: scalar::log_ratio(s.s(), r),
        g_s: scalar::g_constant(s).g_s,
    })
}

/// `Q / Q̃_{1+s}` on the witness, computed from the matrices.
pub fn witness_ratio(spec: &WitnessSpec, s: RenyiOrder) -> Result<f64> {
    Ok(evaluate_witness(spec, s)?.ratio)
}

/// `Σ p_x ln(1 + d p_x) / (d^{α-1} Σ p_x^α)` with `α = 1 + s`: the classical
/// ratio against the uniform distribution on `d = p.len()` points.
pub fn classical_uniform_objective(p: &[f64], s: RenyiOrder) -> Result<f64> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput("p must be a nonempty nonnegative vector".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(total));
    }
    let d = p.len() as f64;
    let alpha = s.alpha();
    let num: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * (d * x).ln_1p()).sum();
    let den: f64 = d.powf(alpha - 1.0) * p.iter().map(|&x| x.powf(alpha)).sum::<f64>();
    Ok(num / den)
}

/// Best normalized witness `d/k` with `d <= d_max` for the order `s`.
///
/// Walks the Stern–Brocot tree toward `r*` (clamped to `[1, d_max]`),
/// collects every fraction visited with numerator at most `d_max`, and keeps
/// the one maximizing `ln(1+r)/r^s`. Above the threshold `r* < 1`, so the
/// walk ends at `1/1`.
pub fn best_normalized_witness(s: RenyiOrder, d_max: usize) -> Result<(WitnessSpec, f64)> {
    if d_max == 0 {
        return Err(Error::InvalidInput("d_max must be >= 1".into()));
    }
    let d_max = d_max.min(MAX_DIM);
    let target = scalar::critical_r(s).clamp(1.0, d_max as f64);
    let mut candidates = vec![(1usize, 1usize), (d_max, 1)];
    // Mediants between lo = a/b and hi = c/e.
    let (mut lo, mut hi) = ((1usize, 1usize), (1usize, 0usize));
    loop {
        let m = (lo.0 + hi.0, lo.1 + hi.1);
        if m.0 > d_max {
            break;
        }
        candidates.push(m);
        let value = m.0 as f64 / m.1 as f64;
        if value == target {
            break;
        } else if value < target {
            lo = m;
        } else {
            hi = m;
        }
    }
    let (d, k) = candidates
        .into_iter()
        .filter(|&(d, k)| k >= 1 && d >= k && d <= d_max)
        .max_by(|a, b| {
            let ga = scalar::log_ratio(s.s(), a.0 as f64 / a.1 as f64);
            let gb = scalar::log_ratio(s.s(), b.0 as f64 / b.1 as f64);
            ga.total_cmp(&gb).then(b.0.cmp(&a.0))
        })
        .expect("1/1 is always a candidate");
    let spec = WitnessSpec::normalized(d, k)?;
    Ok((spec, scalar::log_ratio(s.s(), spec.r_effective())))
}

/// Value of the commuting normalized supremum: `G_s` up to the threshold, `ln 2` beyond.
pub fn commuting_normalized_supremum(s: RenyiOrder) -> f64 {
    if s.s() <= scalar::THRESHOLD_S0 {
        scalar::g_constant(s).g_s
    } else {
        LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{critical_r, g_constant, THRESHOLD_S0};

    fn order(s: f64) -> RenyiOrder {
        RenyiOrder::new(s).unwrap()
    }

    #[test]
    fn trivial_witness() {
        let pair = make_witness(&WitnessSpec::new(1, 1, 1.0).unwrap()).unwrap();
        assert_eq!(pair.rho().matrix()[(0, 0)].re, 1.0);
        assert_eq!(pair.sigma().matrix()[(0, 0)].re, 1.0);
    }

    #[test]
    fn normalized_witness_values() {
        let spec = WitnessSpec::new(4, 2, 1.0).unwrap();
        assert_eq!(spec.r_effective(), 2.0);
        let e = evaluate_witness(&spec, order(0.3)).unwrap();
        assert!((e.q_direct - 3.0f64.ln()).abs() < 1e-14);
        assert!((e.q_alpha_sandwiched - 2.0f64.powf(0.3)).abs() < 1e-14);
        assert_eq!(WitnessSpec::new(6, 2, 3.0).unwrap().r_effective(), 1.0);
    }

    #[test]
    fn spec_validation() {
        assert!(WitnessSpec::new(2, 3, 1.0).is_err());
        assert!(WitnessSpec::new(2, 0, 1.0).is_err());
        assert!(WitnessSpec::new(2, 1, 0.0).is_err());
        assert!(WitnessSpec::new(65, 1, 1.0).is_err());
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_for_target_r(4, 2, 2.0).unwrap(), 1.0);
        assert_eq!(lambda_for_target_r(2, 2, 1.0).unwrap(), 1.0);
        let r = critical_r(order(0.5));
        let lambda = lambda_for_target_r(3, 1, r).unwrap();
        assert!((lambda - 3.0 / r).abs() < 1e-15);
        let spec = WitnessSpec::new(3, 1, lambda).unwrap();
        assert!((spec.r_effective() - r).abs() < 1e-12 * r);
        assert!(lambda_for_target_r(3, 1, -1.0).is_err());
    }

    #[test]
    fn ratio_at_critical_point_equals_g() {
        for s in [0.2, 0.5, 0.9] {
            let o = order(s);
            let lambda = lambda_for_target_r(5, 2, critical_r(o)).unwrap();
            let ratio = witness_ratio(&WitnessSpec::new(5, 2, lambda).unwrap(), o).unwrap();
            assert!((ratio - g_constant(o).g_s).abs() < 1e-8, "s={s}");
        }
    }

    #[test]
    fn uniform_witness_gives_ln2() {
        let ratio = witness_ratio(&WitnessSpec::new(4, 4, 1.0).unwrap(), order(0.8)).unwrap();
        assert!((ratio - LN_2).abs() < 1e-14);
    }

    #[test]
    fn ratio_closed_form() {
        let lambda = lambda_for_target_r(4, 1, 10.0).unwrap();
        let e = evaluate_witness(&WitnessSpec::new(4, 1, lambda).unwrap(), order(0.5)).unwrap();
        assert!((e.ratio - 11.0f64.ln() / 10.0f64.sqrt()).abs() < 1e-12);
        assert!((e.ratio - e.ratio_closed_form).abs() < 1e-10);
    }

    #[test]
    fn classical_uniform_objective_examples() {
        for s in [0.1, 0.5, 1.0] {
            let v = classical_uniform_objective(&[0.25; 4], order(s)).unwrap();
            assert!((v - LN_2).abs() < 1e-15);
        }
        let o = order(0.8);
        let v = classical_uniform_objective(&[1.0, 0.0], o).unwrap();
        assert!((v - 3.0f64.ln() / 2.0f64.powf(0.8)).abs() < 1e-15);
        assert!(v < LN_2);
        assert!(classical_uniform_objective(&[0.5, 0.6], o).is_err());
    }

    #[test]
    fn stern_brocot_tracks_the_critical_point() {
        let (spec, v) = best_normalized_witness(order(0.9), 64).unwrap();
        assert_eq!((spec.d, spec.k), (1, 1));
        assert!((v - LN_2).abs() < 1e-15);

        let o = order(0.5);
        let (spec, v) = best_normalized_witness(o, 64).unwrap();
        // brute force over every d/k with d <= 64
        let brute = (1..=64usize)
            .flat_map(|d| (1..=d).map(move |k| (d, k)))
            .map(|(d, k)| scalar::log_ratio(0.5, d as f64 / k as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= brute - 1e-9, "{spec:?}: {v} vs {brute}");
        assert!(v <= g_constant(o).g_s);

        let (_, v) = best_normalized_witness(order(THRESHOLD_S0 - 0.05), 64).unwrap();
        assert!(v > LN_2);
    }
}
