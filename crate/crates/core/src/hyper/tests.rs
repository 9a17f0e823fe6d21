use proptest::prelude::*;
use rug::Rational;

use super::*;
use crate::poly::Poly;
use crate::qcore::{bracket_ratio, exact, qpoch_infinite, BracketRatio, Length};

const BITS: u32 = 192;

fn policy(target: f64) -> PrecisionPolicy {
    PrecisionPolicy::new(BITS).with_target(target).unwrap()
}

fn ctx(q: Scalar) -> QContext {
    QContext::new(q, policy(1e-40)).unwrap()
}

fn s(v: f64) -> Scalar {
    Scalar::from_f64(v, BITS)
}

fn r(n: i64, d: i64) -> Scalar {
    Scalar::from_ratio(n, d, BITS)
}

#[test]
fn gosper_terminating_case_is_exact() {
    // a = 3, b = 2: 2F1[-2, 2; 4; 2/5] has three nonzero terms.
    let spec = ClassicalSeriesSpec::new(vec![r(-2, 1), r(2, 1)], vec![r(4, 1)], r(2, 5));
    let v = eval_classical(&spec, &policy(1e-40)).unwrap();
    let x = Rational::from((2, 5));
    let oracle = Rational::from(1)
        + Rational::from((-2 * 2, 4)) * &x
        + Rational::from(((-2) * (-1) * 2 * 3, 4 * 5 * 2)) * x.clone() * &x;
    assert_eq!(oracle, Rational::from((81, 125)));
    assert!(Scalar::rel_diff(&v.value, &Scalar::from_rational(&oracle, BITS), 0.0) < 1e-50);
    assert_eq!(v.terms_used, 3);
}

#[test]
fn classical_trivial_cases() {
    let b = s(1.7);
    let a1 = ClassicalSeriesSpec::new(
        vec![Scalar::zero(BITS), b.clone()],
        vec![&b + 2i64],
        r(17, 27),
    );
    assert_eq!(eval_classical(&a1, &policy(1e-40)).unwrap().value, 1i64);
    let x0 = ClassicalSeriesSpec::new(vec![s(0.3), s(2.5)], vec![s(1.5)], Scalar::zero(BITS));
    assert_eq!(eval_classical(&x0, &policy(1e-40)).unwrap().value, 1i64);
}

#[test]
fn basic_trivial_cases() {
    let c = ctx(r(1, 2));
    let x0 = BasicSeriesSpec::new(
        vec![s(0.3), s(0.5)],
        vec![s(0.2)],
        Scalar::zero(BITS),
        c.clone(),
    );
    assert_eq!(eval_basic(&x0).unwrap().value, 1i64);

    // a = b = 1, q = 1/2, λ = 1/6: the series terminates at once and the
    // product side collapses to (1 + q)(1 - λ/q) = 1.
    let q = c.q().clone();
    let lam = r(1, 6);
    let spec = BasicSeriesSpec::new(
        vec![Scalar::one(BITS), q.clone()],
        vec![q.powi(3)],
        lam.clone(),
        c.clone(),
    );
    let lhs = eval_basic(&spec).unwrap().value;
    let rhs = (1i64 - q.powi(2)) / (1i64 - &q) * qpoch_infinite(&(&lam / &q), &c).unwrap()
        / qpoch_infinite(&lam, &c).unwrap();
    assert!(Scalar::rel_diff(&lhs, &rhs, 0.0) < 1e-40);
    assert_eq!(lhs, 1i64);
}

#[test]
fn basic_partial_sums_match_rational_oracle() {
    // 2φ1[q, q^b; q^(b+2); q, x] at q = 1/3, b = 2, x = 1/4.
    let qr = Rational::from((1, 3));
    let xr = Rational::from((1, 4));
    let q2 = Rational::from((1, 9));
    let q4 = Rational::from((1, 81));
    let c = ctx(r(1, 3));
    let spec = BasicSeriesSpec::new(vec![r(1, 3), r(1, 9)], vec![r(1, 81)], r(1, 4), c);
    let terms = series_terms(&Weight::Unit, &Base::Basic(spec.clone()), 40, 256).unwrap();
    let mut sum = Scalar::zero(256);
    for (n, t) in terms.iter().enumerate() {
        sum += t;
        let mut xn = Rational::from(1);
        for _ in 0..n {
            xn *= &xr;
        }
        let oracle =
            exact::bracket_ratio(&[qr.clone(), q2.clone()], &[q4.clone(), qr.clone()], &qr, n)
                .unwrap()
                * xn;
        assert!(
            Scalar::rel_diff(t, &Scalar::from_rational(&oracle, 256), 0.0) < 1e-55,
            "n = {n}"
        );
    }
    let full = eval_basic(&spec).unwrap().value;
    assert!(Scalar::rel_diff(&full, &sum, 0.0) < 1e-22);
}

#[test]
fn unit_weight_reduces_to_basic() {
    let c = ctx(s(0.6));
    let spec = BasicSeriesSpec::new(vec![s(0.3), s(-0.5)], vec![s(0.2)], s(0.7), c);
    let plain = eval_basic(&spec).unwrap().value;
    let weighted = eval_weighted_series(
        &Weight::Unit,
        &Base::Basic(spec.clone()),
        &policy(1e-40),
        &SumOptions::default(),
    )
    .unwrap()
    .value;
    assert_eq!(plain, weighted);
}

#[test]
fn weighted_bracket_series_matches_rational_partial_sum() {
    // Σ [1/3; 1/2; 1/2]_n (1/3)^n / ((2t - 3)(t - 5)), t = (1/2)^n.
    let c = ctx(r(1, 2));
    let base = Base::Bracket(BracketSeries::new(vec![r(1, 3)], vec![r(1, 2)], r(1, 3), c));
    let den = Poly::linear(r(-3, 1), r(2, 1)).mul(&Poly::linear(r(-5, 1), Scalar::one(BITS)));
    let weight = Weight::QRational {
        f: RationalFn::new(Poly::one(BITS), den),
        base: r(1, 2),
        alternating: false,
    };
    let v = eval_weighted_series(&weight, &base, &policy(1e-40), &SumOptions::default()).unwrap();

    let half = Rational::from((1, 2));
    let mut oracle = Rational::from(0);
    let mut t = Rational::from(1);
    let mut xn = Rational::from(1);
    for n in 0..400 {
        let b = exact::bracket_ratio(
            &[Rational::from((1, 3))],
            std::slice::from_ref(&half),
            &half,
            n,
        )
        .unwrap();
        let w = Rational::from(1) / ((Rational::from(2) * &t - 3u32) * (t.clone() - 5u32));
        oracle += b * &xn * w;
        t *= &half;
        xn /= 3u32;
    }
    assert!(Scalar::rel_diff(&v.value, &Scalar::from_rational(&oracle, 256), 0.0) < 1e-40);
}

#[test]
fn weight_pole_is_reported_with_index() {
    // 1 / (t - 1/8) with t = (1/2)^n has its pole at n = 3.
    let c = ctx(r(1, 2));
    let base = Base::Bracket(BracketSeries::new(vec![], vec![], r(1, 2), c));
    let f = RationalFn::new(Poly::one(BITS), Poly::linear(r(-1, 8), Scalar::one(BITS)));
    let weight = Weight::QRational {
        f,
        base: r(1, 2),
        alternating: false,
    };
    match eval_weighted_series(&weight, &base, &policy(1e-30), &SumOptions::default()) {
        Err(Error::SingularParameter { index, .. }) => assert_eq!(index, 3),
        other => panic!("expected singular weight, got {other:?}"),
    }
}

#[test]
fn bauer_series_gives_two_over_pi() {
    let half = r(1, 2);
    let spec = ClassicalSeriesSpec::new(
        vec![half.clone(), half.clone(), half],
        vec![r(1, 1), r(1, 1)],
        r(-1, 1),
    );
    let weight = Weight::NRational {
        f: RationalFn::new(Poly::linear(r(1, 1), r(4, 1)), Poly::one(BITS)),
        alternating: false,
    };
    let v = eval_weighted_series(
        &weight,
        &Base::Classical(spec),
        &policy(1e-32),
        &SumOptions::default(),
    )
    .unwrap();
    let two_over_pi = Scalar::from_i64(2, 512) / crate::mpreal::const_pi(512);
    assert!(Scalar::rel_diff(&v.value, &two_over_pi, 0.0) < 1e-30);
}

#[test]
fn lower_parameter_pole_is_singular() {
    let c = ctx(r(1, 2));
    let spec = BasicSeriesSpec::new(vec![s(0.3)], vec![r(4, 1)], s(0.5), c);
    match eval_basic(&spec) {
        Err(Error::SingularParameter { param, index }) => {
            assert_eq!(index, 2);
            assert_eq!(param, "lower[0]");
        }
        other => panic!("expected singular parameter, got {other:?}"),
    }
    let classical = ClassicalSeriesSpec::new(vec![s(0.5)], vec![r(-3, 1)], s(0.5));
    assert!(matches!(
        eval_classical(&classical, &policy(1e-30)),
        Err(Error::SingularParameter { index: 3, .. })
    ));
}

#[test]
fn terminating_upper_parameter_is_detected() {
    // q^{-3}: (q^{-3}; q)_n vanishes for n >= 4.
    let c = ctx(r(1, 2));
    let spec = BasicSeriesSpec::new(vec![r(8, 1)], vec![], r(1, 3), c);
    let v = eval_basic(&spec).unwrap();
    assert_eq!(v.terms_used, 4);
}

#[test]
fn growing_basic_series_is_divergent() {
    let c = ctx(r(1, 2));
    let spec = BasicSeriesSpec::new(vec![s(0.3)], vec![s(0.2)], r(2, 1), c);
    assert!(matches!(eval_basic(&spec), Err(Error::Divergence { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn q_binomial_theorem(alpha in -2.0f64..2.0, x in -0.9f64..0.9, q in 0.05f64..0.9) {
        let c = QContext::new(s(q), policy(1e-33)).unwrap();
        let spec = BasicSeriesSpec::new(vec![s(alpha)], vec![], s(x), c.clone());
        let lhs = eval_basic(&spec).unwrap().value;
        let rhs = qpoch_infinite(&(s(alpha) * s(x)), &c).unwrap() / qpoch_infinite(&s(x), &c).unwrap();
        prop_assert!(Scalar::rel_diff(&lhs, &rhs, 0.0) <= 1e-30);
    }

    #[test]
    fn incremental_terms_match_bracket_ratio(
        a in -3.0f64..3.0, b in 0.1f64..0.9, c0 in -0.9f64..0.9, x in -0.9f64..0.9, q in 0.1f64..0.9,
    ) {
        let c = ctx(s(q));
        let spec = BasicSeriesSpec::new(vec![s(a), s(b)], vec![s(c0)], s(x), c.clone());
        let terms = series_terms(&Weight::Unit, &Base::Basic(spec), 51, BITS).unwrap();
        for (n, t) in terms.iter().enumerate() {
            let br = BracketRatio::new(vec![s(a), s(b)], vec![s(c0), s(q)], Length::Finite(n));
            let direct = bracket_ratio(&br, &c).unwrap() * s(x).powi(n as i64);
            prop_assert!(Scalar::rel_diff(t, &direct, 1e-300) <= 1e-39, "n = {}", n);
        }
    }

    #[test]
    fn accepted_sums_are_stable_under_more_terms(
        a in -3.0f64..3.0, b in 0.1f64..0.9, x in -0.95f64..0.95, q in 0.05f64..0.95,
    ) {
        let target = 1e-30;
        let c = QContext::new(s(q), policy(target)).unwrap();
        let spec = BasicSeriesSpec::new(vec![s(a)], vec![s(b)], s(x), c);
        let base = Base::Basic(spec.clone());
        let res = eval_basic(&spec).unwrap();
        let terms = series_terms(&Weight::Unit, &base, res.terms_used + 20, 2 * BITS).unwrap();
        let mut extra = Scalar::zero(2 * BITS);
        for t in terms.iter().skip(res.terms_used) {
            extra += t;
        }
        prop_assert!((extra / &res.value).abs() < target);
    }
}
