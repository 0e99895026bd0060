use proptest::prelude::*;
use std::f64::consts::{E, LN_2};

use qtrace::divergences::{
    classical_q, classical_q_alpha, q2_bkm, q2_layercake, q_alpha_layercake, q_alpha_sandwiched, q_direct,
    q_layercake, ClassicalPair, TailFunction,
};
use qtrace::linalg::{haar_unitary, rng_from_seed, sample_density_with, HermitianOperator, OperatorPair};
use qtrace::scalar::{g_constant, lambert_w_minus1};
use qtrace::witnesses::{classical_uniform_objective, witness_ratio, WitnessSpec};
use qtrace::{QuadratureConfig, RenyiOrder};

fn order(s: f64) -> RenyiOrder {
    RenyiOrder::new(s).unwrap()
}

fn random_pair(dim: usize, seed: u64) -> OperatorPair {
    let mut rng = rng_from_seed(seed);
    let rho = sample_density_with(&mut rng, dim, dim).unwrap();
    let sigma = sample_density_with(&mut rng, dim, dim).unwrap();
    OperatorPair::new(rho, sigma).unwrap()
}

fn cfg() -> QuadratureConfig {
    QuadratureConfig::new(1e-12, 1e-12, 4000).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_log_bound(s in 0.01f64..=1.0, log_r in -18.0f64..18.0) {
        let r = log_r.exp();
        let g = g_constant(order(s)).g_s;
        prop_assert!(g * r.powf(s) - r.ln_1p() >= -1e-12 * (1.0 + r.ln_1p()));
    }

    #[test]
    fn lambert_round_trip(t in 1e-12f64..1.0) {
        let x = -t / E;
        let w = lambert_w_minus1(x).unwrap();
        prop_assert!(w <= -1.0);
        prop_assert!((w * w.exp() / x - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn witness_ratio_is_scalar(d in 1usize..8, kf in 0.0f64..1.0, log_lambda in -4.0f64..4.0, s in 0.05f64..=1.0) {
        let k = 1 + ((d - 1) as f64 * kf).round() as usize;
        let spec = WitnessSpec::new(d, k, log_lambda.exp()).unwrap();
        let r = spec.r_effective();
        let expected = r.ln_1p() / r.powf(s);
        let got = witness_ratio(&spec, order(s)).unwrap();
        prop_assert!((got - expected).abs() <= 1e-10 * expected.max(1.0), "{got} vs {expected}");
    }

    #[test]
    fn uniform_objective_below_ln2_above_threshold(raw in proptest::collection::vec(0.0f64..1.0, 1..9)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let v = classical_uniform_objective(&p, order(0.9)).unwrap();
        prop_assert!(v <= LN_2 + 1e-9);
    }

    #[test]
    fn unitary_invariance(dim in 2usize..5, seed in any::<u64>(), s in 0.1f64..=1.0) {
        let pair = random_pair(dim, seed);
        let u = haar_unitary(&mut rng_from_seed(seed ^ 1), dim);
        let rot = |a: &HermitianOperator| HermitianOperator::new(&u * a.matrix() * u.adjoint()).unwrap();
        let turned = OperatorPair::new(rot(pair.rho()), rot(pair.sigma())).unwrap();
        let o = order(s);
        let (a, b) = (q_direct(&pair).unwrap(), q_direct(&turned).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        let (a, b) = (q_alpha_layercake(&pair, o, &cfg()).unwrap(), q_alpha_layercake(&turned, o, &cfg()).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn homogeneity(dim in 1usize..5, seed in any::<u64>(), s in 0.1f64..=1.0, log_t in -3.0f64..3.0) {
        let pair = random_pair(dim, seed);
        let t = log_t.exp();
        let o = order(s);
        let scaled = pair.with_scaled_sigma(t).unwrap();
        let base = q_alpha_layercake(&pair, o, &cfg()).unwrap();
        let moved = q_alpha_layercake(&scaled, o, &cfg()).unwrap();
        prop_assert!((moved - t.powf(-s) * base).abs() <= 1e-9 * moved);
        let sw = q_alpha_sandwiched(&scaled, o).unwrap();
        prop_assert!((sw - t.powf(-s) * q_alpha_sandwiched(&pair, o).unwrap()).abs() <= 1e-11 * sw);
        let both = OperatorPair::new(pair.rho().scale(t), pair.sigma().scale(t)).unwrap();
        let q = q_direct(&pair).unwrap();
        prop_assert!((q_direct(&both).unwrap() - t * q).abs() <= 1e-11 * t * (1.0 + q));
    }

    #[test]
    fn tail_function_is_monotone(dim in 1usize..6, seed in any::<u64>()) {
        let pair = random_pair(dim, seed);
        let tail = TailFunction::new(&pair).unwrap();
        let r_max = tail.r_max();
        let mut prev = tail.eval(0.0).unwrap();
        prop_assert!((prev - tail.trace_rho()).abs() < 1e-12);
        for i in 1..=64 {
            let v = tail.eval(r_max * i as f64 / 64.0 * 1.01).unwrap();
            prop_assert!(v <= prev + 1e-12);
            prev = v;
        }
        prop_assert_eq!(prev, 0.0);
    }

    #[test]
    fn routes_agree(dim in 1usize..5, seed in any::<u64>()) {
        let pair = random_pair(dim, seed);
        let q = q_direct(&pair).unwrap();
        prop_assert!((q_layercake(&pair, &cfg()).unwrap() - q).abs() <= 1e-9 * (1.0 + q));
        let q2 = q2_bkm(&pair).unwrap();
        prop_assert!((q2_layercake(&pair, &cfg()).unwrap() - q2).abs() <= 1e-9 * (1.0 + q2));
    }

    #[test]
    fn diagonal_embedding(raw_p in proptest::collection::vec(0.01f64..1.0, 1..6), seed in any::<u64>(), s in 0.1f64..=1.0) {
        let mut rng = rng_from_seed(seed);
        let q: Vec<f64> = raw_p.iter().map(|_| rand::Rng::random_range(&mut rng, 0.05..1.0)).collect();
        let cp = ClassicalPair::new(raw_p, q).unwrap();
        let pair = cp.to_operator_pair().unwrap();
        let o = order(s);
        let expected = classical_q_alpha(&cp, o);
        prop_assert!((q_alpha_layercake(&pair, o, &cfg()).unwrap() - expected).abs() <= 1e-10 * expected);
        prop_assert!((q_alpha_sandwiched(&pair, o).unwrap() - expected).abs() <= 1e-12 * expected);
        let cq = classical_q(&cp);
        prop_assert!((q_direct(&pair).unwrap() - cq).abs() <= 1e-12 * (1.0 + cq));
    }
}
