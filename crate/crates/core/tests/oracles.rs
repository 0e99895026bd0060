//! Values frozen from 50-digit mpmath evaluations.

use qtrace::divergences::{
    q2_bkm, q2_collision, q2_layercake, q_alpha_layercake, q_alpha_sandwiched, q_bkm_route, q_direct, q_layercake,
    umegaki,
};
use qtrace::linalg::{generalized_eigenvalues, HermitianOperator, OperatorPair};
use qtrace::scalar::{critical_r, g_constant, lambert_w_minus1};
use qtrace::{QuadratureConfig, RenyiOrder};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn order(s: f64) -> RenyiOrder {
    RenyiOrder::new(s).unwrap()
}

// (s, G_s, r*)
const CONSTANTS: [(f64, f64, f64); 6] = [
    (0.05, 7.3575888241871024912, 485165174.40978986574),
    (0.1, 3.6788111176255169246, 22015.463523435072338),
    (0.25, 1.4786090446206367872, 49.435253001058201937),
    (0.5, 0.80474234254941181121, 3.9215536345675050925),
    (0.75, 0.69495372116369797357, 0.83282772270598465707),
    (0.9, 0.77709375438235404914, 0.23931119983105078426),
];

#[test]
fn g_and_r_star_match_high_precision() {
    for (s, g, r) in CONSTANTS {
        let c = g_constant(order(s));
        assert!(rel(c.g_s, g) < 1e-13, "G at s={s}: {} vs {g}", c.g_s);
        assert!(rel(critical_r(order(s)), r) < 1e-11, "r* at s={s}");
        assert!(rel(c.r_star, r) < 1e-11);
    }
}

#[test]
fn lambert_w_minus1_matches_high_precision() {
    let cases = [
        (-0.1, -3.5771520639572972184),
        (-0.3, -1.781337023421627612),
        (-1e-5, -14.163600815810183009),
        (-0.36, -1.2227701339785059531),
    ];
    for (x, w) in cases {
        assert!(rel(lambert_w_minus1(x).unwrap(), w) < 1e-14, "x={x}");
    }
}

fn pair() -> OperatorPair {
    let rho = HermitianOperator::from_parts(2, &[0.7, 0.2, 0.2, 0.3], Some(&[0.0, 0.1, -0.1, 0.0])).unwrap();
    let sigma = HermitianOperator::from_parts(2, &[0.4, 0.0, 0.0, 0.6], Some(&[0.0, -0.1, 0.1, 0.0])).unwrap();
    OperatorPair::new(rho, sigma).unwrap()
}

#[test]
fn noncommuting_pair_divergences() {
    let p = pair();
    let cfg = QuadratureConfig::new(1e-13, 1e-13, 2000).unwrap();
    let q = 0.95461652920945113061;
    assert!(rel(q_direct(&p).unwrap(), q) < 1e-13);
    assert!(rel(q_layercake(&p, &cfg).unwrap(), q) < 1e-11);
    assert!(rel(q_bkm_route(&p).unwrap(), q) < 1e-11);
    assert!(rel(umegaki(&p).unwrap(), 0.35779852311470200529) < 1e-13);

    let q2 = 1.7285227033046936931;
    assert!(rel(q2_bkm(&p).unwrap(), q2) < 1e-13);
    assert!(rel(q2_layercake(&p, &cfg).unwrap(), q2) < 1e-11);
    assert!(rel(q2_collision(&p, &cfg).unwrap(), 0.58819761629352196593) < 1e-11);

    assert!(rel(q_alpha_sandwiched(&p, order(0.5)).unwrap(), 1.2671453839028836363) < 1e-13);
    assert!(rel(q_alpha_sandwiched(&p, order(0.9)).unwrap(), 1.6204107749619802483) < 1e-13);
    assert!(rel(q_alpha_layercake(&p, order(0.5), &cfg).unwrap(), 1.2664965231157803835) < 1e-11);
    assert!(rel(q_alpha_layercake(&p, order(0.9), &cfg).unwrap(), 1.6183003730989399447) < 1e-11);

    let gen = generalized_eigenvalues(&p).unwrap();
    assert!(rel(gen[0], 0.330605301983863473986830830284994) < 1e-13);
    assert!(rel(gen[1], 2.10417730671178850054778667559508) < 1e-13);
}
