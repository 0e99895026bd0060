//! Scalar constants of the logarithmic trace inequality.
//!
//! `G_s = sup_{r>0} ln(1+r)/r^s` is attained at the unique positive root `r*` of
//! `r = s(1+r)ln(1+r)`. Substituting `t = -1/(s(1+r))` turns the root equation
//! into `t e^t = -(1/s)e^{-1/s}`. That equation has two real solutions for
//! `s in (0,1)`: `t = -1/s < -1`, which lies on the lower branch `W_{-1}` and
//! gives the trivial root `r = 0`, and the solution on the principal branch
//! `W_0`, which gives `r*`. The principal branch is therefore used for the
//! critical point, followed by a Newton polish on `v = ln(1+r)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2};

use crate::error::{Error, Result};

/// Threshold order `1/(2 ln 2)` separating the two normalized regimes.
pub const THRESHOLD_S0: f64 = 0.5 / LN_2;

const REGIME_TOL: f64 = 1e-12;
const HALLEY_MAX_ITER: usize = 100;
const BRANCH_SERIES_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowThreshold,
    AtThreshold,
    AboveThreshold,
}

/// Rényi order parameter `s in (0, 1]`, with `alpha = 1 + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiOrder {
    s: f64,
}

impl RenyiOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Domain(format!("order s = {s} outside (0, 1]")));
        }
        Ok(Self { s })
    }

    /// The threshold order `s0`.
    pub fn threshold() -> Self {
        Self { s: THRESHOLD_S0 }
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        1.0 + self.s
    }

    pub fn regime(&self) -> Regime {
        if (self.s - THRESHOLD_S0).abs() <= REGIME_TOL {
            Regime::AtThreshold
        } else if self.s < THRESHOLD_S0 {
            Regime::BelowThreshold
        } else {
            Regime::AboveThreshold
        }
    }
}

/// Constants attached to one order `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarConstants {
    pub s: f64,
    /// Optimal constant `G_s` (nats).
    pub g_s: f64,
    pub c_s: f64,
    pub c_s_over_s: f64,
    /// Maximizer of `ln(1+r)/r^s`. Overflows to `+inf` once `1/s` exceeds
    /// roughly 709; `g_s` and `ratio` stay finite because they are
    /// evaluated from `ln(1+r*)`.
    pub r_star: f64,
    /// `ln(1 + r*)`, finite for every admissible `s`.
    pub log1p_r_star: f64,
    /// `c_s / (s G_s)`.
    pub ratio: f64,
    /// `|r* - s(1+r*)ln(1+r*)| / (1+r*)`, the root-solve certificate.
    pub residual: f64,
    /// `ln(1+r*)/r*^s`, the independent evaluation of `G_s`.
    pub g_s_crosscheck: f64,
}

/// Lower real branch `W_{-1}` of the Lambert function on `[-1/e, 0)`.
///
/// The exact branch point `-1/e` maps to `-1`; anything below it, and any
/// `x >= 0`, is a domain error.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if !x.is_finite() || x < branch || x >= 0.0 {
        return Err(Error::Domain(format!(
            "W_-1 is defined on [-1/e, 0), got {x}"
        )));
    }
    if x == branch {
        return Ok(-1.0);
    }
    let q = 1.0 + E * x;
    if q < BRANCH_SERIES_CUTOFF {
        return Ok(branch_point_series(-(2.0 * q.max(0.0)).sqrt()));
    }
    let w0 = if q < 0.3 {
        branch_point_series(-(2.0 * q).sqrt())
    } else {
        let l1 = (-x).ln();
        l1 - (-l1).ln()
    };
    Ok(halley(x, w0))
}

/// Principal real branch `W_0` on `[-1/e, 0]`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if !x.is_finite() || x < branch || x > 0.0 {
        return Err(Error::Domain(format!("W_0 is used on [-1/e, 0], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch {
        return Ok(-1.0);
    }
    let q = 1.0 + E * x;
    if q < BRANCH_SERIES_CUTOFF {
        return Ok(branch_point_series((2.0 * q).sqrt()));
    }
    let w0 = if q < 0.3 {
        branch_point_series((2.0 * q).sqrt())
    } else {
        // W_0(x) ~ x (1 - x) for small |x|
        x * (1.0 - x)
    };
    Ok(halley(x, w0))
}

/// Expansion of `W` about the branch point in `p = ±sqrt(2(1 + e x))`;
/// positive `p` selects `W_0`, negative `p` selects `W_{-1}`.
fn branch_point_series(p: f64) -> f64 {
    const C: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, c| acc * p + c)
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// `ln(1 + r*)` for the maximizer of `ln(1+r)/r^s`.
///
/// Solves `1 - e^{-v} = s v` for `v > 0`, which is the critical-point
/// equation written in `v = ln(1+r)`. Returns 0 at `s = 1`.
fn critical_log1p(order: RenyiOrder) -> f64 {
    let s = order.s();
    if s == 1.0 {
        return 0.0;
    }
    // ln u = 1/s + t with t = W_0(-(1/s) e^{-1/s}), u = 1 + r
    let x = -(1.0 / s) * (-1.0 / s).exp();
    let t = lambert_w0(x).expect("argument lies in [-1/e, 0]");
    let mut v = 1.0 / s + t;
    if v <= 0.0 {
        v = 2.0 * (1.0 - s);
    }
    for _ in 0..8 {
        let phi = -(-v).exp_m1() - s * v;
        let dphi = (-v).exp() - s;
        if dphi == 0.0 {
            break;
        }
        let dv = phi / dphi;
        let next = v - dv;
        if !(next > 0.0) {
            break;
        }
        v = next;
        if dv.abs() <= 4.0 * f64::EPSILON * v {
            break;
        }
    }
    v
}

/// Normalized residual `|r/(1+r) - s ln(1+r)|` written in `v = ln(1+r)`.
fn critical_residual(s: f64, v: f64) -> f64 {
    (-(-v).exp_m1() - s * v).abs()
}

/// `ln r` from `v = ln(1 + r)`, valid even when `r` overflows.
fn ln_r_from_log1p(v: f64) -> f64 {
    v + (-(-v).exp()).ln_1p()
}

/// Maximizer `r*` of `ln(1+r)/r^s`; zero at `s = 1`.
pub fn critical_r(order: RenyiOrder) -> f64 {
    critical_log1p(order).exp_m1()
}

/// `c_s = s^s (1-s)^{1-s}` with `0^0 = 1`.
pub fn c_constant(s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("c_s requires s in (0, 1], got {s}")));
    }
    Ok(s.powf(s) * (1.0 - s).powf(1.0 - s))
}

/// All scalar constants for one order.
pub fn g_constant(order: RenyiOrder) -> ScalarConstants {
    let s = order.s();
    let c_s = c_constant(s).expect("order validated");
    let c_s_over_s = if s == 1.0 {
        1.0
    } else {
        ((1.0 - s) / s).powf(1.0 - s)
    };

    if s == 1.0 {
        return ScalarConstants {
            s,
            g_s: 1.0,
            c_s,
            c_s_over_s,
            r_star: 0.0,
            log1p_r_star: 0.0,
            ratio: 1.0,
            residual: 0.0,
            g_s_crosscheck: 1.0,
        };
    }

    let v = critical_log1p(order);
    let r_star = v.exp_m1();
    let ln_r = ln_r_from_log1p(v);
    // r^{1-s} / (s (1+r))
    let g_s = ((1.0 - s) * ln_r - s.ln() - v).exp();
    // ln(1+r) / r^s
    let g_s_crosscheck = (v.ln() - s * ln_r).exp();

    ScalarConstants {
        s,
        g_s,
        c_s,
        c_s_over_s,
        r_star,
        log1p_r_star: v,
        ratio: c_s_over_s / g_s,
        residual: critical_residual(s, v),
        g_s_crosscheck,
    }
}

/// `g_s(r) = ln(1+r)/r^s`, with the limits 0 at `r = 0` for `s < 1` and 1 for `s = 1`.
pub fn log_ratio(s: f64, r: f64) -> f64 {
    if r == 0.0 {
        return if s == 1.0 { 1.0 } else { 0.0 };
    }
    r.ln_1p() / r.powf(s)
}

/// Minimum margin found on a scalar grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMargin {
    pub min_margin: f64,
    pub argmin: f64,
    pub points: usize,
}

impl GridMargin {
    fn scan(grid: &[f64], mut margin: impl FnMut(f64) -> f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        let mut best = GridMargin {
            min_margin: f64::INFINITY,
            argmin: f64::NAN,
            points: grid.len(),
        };
        for &r in grid {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::InvalidInput(format!("grid value {r} is not a finite r >= 0")));
            }
            let m = margin(r);
            if m < best.min_margin {
                best.min_margin = m;
                best.argmin = r;
            }
        }
        Ok(best)
    }
}

/// Checks `ln(1+r) <= G_s r^s`; the margin is `G_s r^s - ln(1+r)`.
pub fn check_scalar_log_bound(order: RenyiOrder, r_grid: &[f64]) -> Result<GridMargin> {
    let s = order.s();
    let g = g_constant(order).g_s;
    GridMargin::scan(r_grid, |r| g * r.powf(s) - r.ln_1p())
}

/// `F_s(r) = ln2 r^{s+1} + (1/2 - s ln2)(r - 1) - r ln(1+r)`.
pub fn aux_function(s: f64, r: f64) -> f64 {
    LN_2 * r.powf(s + 1.0) + (0.5 - s * LN_2) * (r - 1.0) - r * r.ln_1p()
}

/// Checks `F_s(r) >= 0`; only claimed for `s >= s0`.
pub fn check_aux_inequality(s: f64, r_grid: &[f64]) -> Result<GridMargin> {
    if !(s.is_finite() && s >= THRESHOLD_S0 - REGIME_TOL) {
        return Err(Error::Domain(format!(
            "auxiliary inequality requires s >= s0 = {THRESHOLD_S0}, got {s}"
        )));
    }
    GridMargin::scan(r_grid, |r| aux_function(s, r))
}

/// Result of the rational bound check `r^{1-s}/(1+r) <= c_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalBoundReport {
    pub margin: GridMargin,
    /// Largest value of `r^{1-s}/(1+r)` on the grid and where it occurs.
    pub max_value: f64,
    pub argmax: f64,
    /// Analytic maximizer `(1-s)/s`.
    pub maximizer: f64,
    /// `c_s - value` at the analytic maximizer.
    pub gap_at_maximizer: f64,
}

fn rational_value(s: f64, r: f64) -> f64 {
    r.powf(1.0 - s) / (1.0 + r)
}

pub fn check_rational_bound(order: RenyiOrder, r_grid: &[f64]) -> Result<RationalBoundReport> {
    let s = order.s();
    let c = c_constant(s)?;
    let margin = GridMargin::scan(r_grid, |r| c - rational_value(s, r))?;
    let (argmax, max_value) = r_grid
        .iter()
        .map(|&r| (r, rational_value(s, r)))
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let maximizer = (1.0 - s) / s;
    Ok(RationalBoundReport {
        margin,
        max_value,
        argmax,
        maximizer,
        gap_at_maximizer: c - rational_value(s, maximizer),
    })
}

/// Evenly spaced grid on `[lo, hi]` with `n >= 2` points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect()
        }
    }
}

/// Log-spaced grid on `[lo, hi]`, both strictly positive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(s: f64) -> RenyiOrder {
        RenyiOrder::new(s).unwrap()
    }

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn renyi_order_rejects_out_of_range() {
        assert!(RenyiOrder::new(0.0).is_err());
        assert!(RenyiOrder::new(1.0 + 1e-15).is_err());
        assert!(RenyiOrder::new(f64::NAN).is_err());
        let o = order(0.25);
        assert_eq!(o.alpha(), 1.25);
    }

    #[test]
    fn regime_classification() {
        assert_eq!(order(0.5).regime(), Regime::BelowThreshold);
        assert_eq!(RenyiOrder::threshold().regime(), Regime::AtThreshold);
        assert_eq!(order(THRESHOLD_S0 + 5e-13).regime(), Regime::AtThreshold);
        assert_eq!(order(THRESHOLD_S0 + 2e-12).regime(), Regime::AboveThreshold);
        assert_eq!(order(0.9).regime(), Regime::AboveThreshold);
    }

    #[test]
    fn w_minus1_branch_point_and_exact_values() {
        assert_eq!(lambert_w_minus1(-1.0 / E).unwrap(), -1.0);
        let w = lambert_w_minus1(-2.0 * (-2.0f64).exp()).unwrap();
        assert!((w + 2.0).abs() < 1e-13, "{w}");
    }

    #[test]
    fn w_minus1_matches_bisection_oracle() {
        let x = -0.05;
        let oracle = bisect(-50.0, -1.0, |w| w * w.exp() - x);
        let w = lambert_w_minus1(x).unwrap();
        assert!(w <= -1.0);
        assert!((w - oracle).abs() < 1e-12 * oracle.abs(), "{w} vs {oracle}");
        assert!((w * w.exp() / x - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn w_minus1_domain_errors() {
        assert!(lambert_w_minus1(-0.4).is_err());
        assert!(lambert_w_minus1(0.0).is_err());
        assert!(lambert_w_minus1(0.1).is_err());
    }

    #[test]
    fn w_minus1_near_branch_point() {
        for q in [1e-7, 1e-9, 1e-12] {
            let x = (q - 1.0) / E;
            let w = lambert_w_minus1(x).unwrap();
            assert!(w <= -1.0);
            assert!((w * w.exp() / x - 1.0).abs() <= 1e-14, "q={q} w={w}");
        }
    }

    #[test]
    fn w0_recovers_principal_values() {
        for w in [-0.999, -0.9, -0.5, -0.1, -1e-5, -1e-300] {
            let x = w * f64::exp(w);
            let got = lambert_w0(x).unwrap();
            assert!((got - w).abs() <= 1e-10 * w.abs().max(1e-300), "{w} -> {got}");
        }
    }

    #[test]
    fn lower_branch_gives_only_the_trivial_root() {
        // W_{-1}(-(1/s)e^{-1/s}) = -1/s, hence r = -1/(s W) - 1 = 0
        let s: f64 = 0.5;
        let w = lambert_w_minus1(-(1.0 / s) * (-1.0 / s).exp()).unwrap();
        assert!((w + 1.0 / s).abs() < 1e-12);
        let r = -1.0 / (s * w) - 1.0;
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn critical_r_at_threshold_is_one() {
        let r = critical_r(RenyiOrder::threshold());
        assert!((r - 1.0).abs() < 1e-9, "{r}");
        assert_eq!(critical_r(order(1.0)), 0.0);
    }

    #[test]
    fn critical_r_matches_bisection_on_h() {
        let s = 0.5;
        let oracle = bisect(1.0, 20.0, |r| r / (1.0 + r) - s * r.ln_1p());
        let r = critical_r(order(s));
        assert!((r - oracle).abs() < 1e-10 * oracle, "{r} vs {oracle}");
    }

    #[test]
    fn critical_r_orders_around_threshold() {
        assert!(critical_r(order(0.6)) > 1.0);
        assert!(critical_r(order(0.8)) < 1.0);
    }

    #[test]
    fn g_constant_endpoints() {
        let one = g_constant(order(1.0));
        assert_eq!(one.g_s, 1.0);
        assert_eq!(one.ratio, 1.0);
        let th = g_constant(RenyiOrder::threshold());
        assert!((th.g_s - LN_2).abs() < 1e-12);
    }

    #[test]
    fn g_constant_below_cheng_constant() {
        for s in [0.01, 0.1, 0.25, 0.5, 0.9, 0.999] {
            let k = g_constant(order(s));
            assert!(k.g_s < k.c_s_over_s, "s={s}");
            assert!(k.ratio >= 1.0 && k.ratio < E);
            assert!(k.residual <= 1e-12);
            assert!((k.g_s - k.g_s_crosscheck).abs() <= 1e-12 * k.g_s);
        }
    }

    #[test]
    fn g_constant_stays_finite_when_r_star_overflows() {
        let k = g_constant(order(1e-4));
        assert!(k.r_star.is_infinite());
        assert!(k.g_s.is_finite() && k.ratio.is_finite());
        assert!(k.ratio < E && k.ratio > 2.7);
    }

    #[test]
    fn c_constant_values() {
        assert!((c_constant(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(c_constant(1.0).unwrap(), 1.0);
        let expected = 0.25f64.powf(0.25) * 0.75f64.powf(0.75);
        assert_eq!(c_constant(0.25).unwrap(), expected);
        assert!(c_constant(0.0).is_err());
    }

    #[test]
    fn scalar_log_bound_tight_at_maximizer() {
        let o = order(0.5);
        let r = critical_r(o);
        let m = check_scalar_log_bound(o, &[r]).unwrap();
        assert!(m.min_margin.abs() < 1e-10);
        let z = check_scalar_log_bound(o, &[0.0]).unwrap();
        assert_eq!(z.min_margin, 0.0);
    }

    #[test]
    fn aux_inequality_edge_values() {
        let m = check_aux_inequality(THRESHOLD_S0, &[1.0]).unwrap();
        assert!(m.min_margin.abs() < 1e-12);
        for s in [THRESHOLD_S0, 0.8, 1.0] {
            let z = check_aux_inequality(s, &[0.0]).unwrap();
            assert_eq!(z.min_margin, -(0.5 - s * LN_2));
            assert!(z.min_margin >= 0.0);
        }
        assert!(matches!(check_aux_inequality(0.5, &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn rational_bound_equality_at_maximizer() {
        let rep = check_rational_bound(order(0.5), &[0.0, 1.0]).unwrap();
        assert!((rep.max_value - 0.5).abs() < 1e-15);
        assert_eq!(rep.argmax, 1.0);
        assert!(rep.margin.min_margin.abs() <= 1e-10);
        assert!(rep.gap_at_maximizer.abs() <= 1e-10);
    }

    #[test]
    fn grid_rejects_negative_values() {
        assert!(check_scalar_log_bound(order(0.5), &[-1.0]).is_err());
        assert!(check_scalar_log_bound(order(0.5), &[]).is_err());
    }
}
