use proptest::prelude::*;
use rug::Rational;

use super::*;
use crate::qcore::qpoch_infinite;

const BITS: u32 = 192;

fn policy(target: f64) -> PrecisionPolicy {
    PrecisionPolicy::new(BITS).with_target(target).unwrap()
}

fn r(n: i64, d: i64) -> Scalar {
    Scalar::from_ratio(n, d, BITS)
}

fn s(v: f64) -> Scalar {
    Scalar::from_f64(v, BITS)
}

fn one() -> Scalar {
    Scalar::one(BITS)
}

/// `x (1 - u t) / (1 - v t)`.
fn linear_ratio(x: Scalar, u: Scalar, v: Scalar) -> RationalFn {
    RationalFn::new(Poly::linear(x.clone(), -(x * u)), Poly::linear(one(), -v))
}

#[test]
fn telescoping_geometric_sequence() {
    let q = r(1, 2);
    let a = SequenceSpec::new(one(), RationalFn::constant(q.clone()), q.clone(), 0);
    let b = SequenceSpec::constant(one(), q);
    let pair = AbelPair::new(a, b);
    let p = policy(1e-40);
    assert!(Scalar::rel_diff(&abel_lhs(&pair, &p).unwrap().value, &r(-1, 1), 0.0) < 1e-40);
    assert!(Scalar::rel_diff(&abel_rhs(&pair, &p).unwrap().value, &r(-1, 1), 0.0) < 1e-40);
}

#[test]
fn constant_and_zero_sequences() {
    let q = r(1, 2);
    let b = SequenceSpec::new(one(), RationalFn::constant(r(1, 3)), q.clone(), 1);
    let p = policy(1e-40);
    let constant = AbelPair::new(SequenceSpec::constant(r(7, 1), q.clone()), b.clone());
    assert!(abel_lhs(&constant, &p).unwrap().value.is_zero());
    let zero = AbelPair::new(SequenceSpec::constant(Scalar::zero(BITS), q), b);
    assert!(abel_rhs(&zero, &p).unwrap().value.is_zero());
}

#[test]
fn sequence_values_follow_ratio() {
    let q = r(1, 2);
    let seq = SequenceSpec::new(
        r(3, 1),
        linear_ratio(one(), r(1, 1), Scalar::zero(BITS)),
        q,
        1,
    );
    let v = seq.values(4, BITS).unwrap();
    // s_1 = 3, s_2 = 3 (1 - 1/2), s_3 = s_2 (1 - 1/4), s_4 = s_3 (1 - 1/8).
    assert_eq!(v[1], 1.5f64);
    assert_eq!(v[3], Scalar::from_ratio(3 * 3 * 7, 2 * 4 * 8, BITS));
}

#[test]
fn gosper_pair_at_unit_parameters() {
    // a = b = 1, q = 1/2: λ = 1/6 and B_2 = 0, so the whole sum is A_1 - A_0.
    let q = r(1, 2);
    let a = SequenceSpec::new(
        (1i64 - &q) / (1i64 - q.powi(1)),
        linear_ratio(q.clone(), q.clone(), q.powi(2)),
        q.clone(),
        0,
    );
    let lam = r(1, 6);
    let b = SequenceSpec::new(
        one(),
        linear_ratio(&lam / &q, q.recip(), one()),
        q.clone(),
        1,
    );
    let pair = AbelPair::new(a, b);
    let p = QContext::new(q.clone(), policy(1e-40)).unwrap();
    let claimed = -(1i64 - &q) / (1i64 - q.powi(1)) * qpoch_infinite(&(&lam / &q), &p).unwrap()
        / qpoch_infinite(&lam, &p).unwrap();
    let cert =
        certify_transformation(&pair, |_| Ok(claimed.clone()), &policy(1e-40), 1e-35).unwrap();
    assert!(cert.pass, "{cert:?}");
    assert!(Scalar::rel_diff(&cert.claimed, &r(-2, 3), 0.0) < 1e-40);

    let perturbed = &claimed * &s(1.000001);
    let bad = certify_transformation(&pair, |_| Ok(perturbed), &policy(1e-40), 1e-35).unwrap();
    assert!(!bad.pass);
}

#[test]
fn one_sided_convergence_is_flagged() {
    // A ≡ 1 makes every left term zero while the right series grows like 2^n.
    let q = r(1, 2);
    let a = SequenceSpec::constant(one(), q.clone());
    let b = SequenceSpec::new(one(), RationalFn::constant(r(2, 1)), q, 1);
    let pair = AbelPair::new(a, b);
    let cert =
        certify_transformation(&pair, |_| Ok(Scalar::zero(BITS)), &policy(1e-20), 1e-15).unwrap();
    assert!(!cert.pass);
    assert!(cert.one_sided.is_some());
    assert!(cert.lhs.is_some() && cert.rhs.is_none());
}

#[test]
fn solver_reproduces_linear_crossing() {
    let q = s(0.4);
    let beta = s(0.7);
    let x = s(0.3);
    let ctx = QContext::new(q.clone(), policy(1e-40)).unwrap();
    let r1 = linear_ratio(x.clone(), beta.clone(), q.clone());
    let c = solve_vanishing_coefficient(&r1, &ctx, &one()).unwrap();
    let want = (1i64 - &q + &beta * &x - &x) / ((1i64 - &q) * (&q - &beta * &x));
    assert!(Scalar::rel_diff(&c.a2, &want, 0.0) < 1e-50);
    assert!(Scalar::rel_diff(&r1.eval(&c.t_star).unwrap(), &one(), 0.0) < 1e-50);
    assert!(c.a3.is_none());

    let g = solve_vanishing_coefficient_general(&r1, &ctx, &r(2, 1), r(5, 1), r(7, 1)).unwrap();
    assert!(Scalar::rel_diff(&g.a2, &(want * 2i64), 0.0) < 1e-50);
    assert_eq!(g.a4, Some(r(7, 1)));
}

#[test]
fn solver_rejects_constant_and_identity_ratios() {
    let ctx = QContext::new(r(1, 2), policy(1e-30)).unwrap();
    let constant = RationalFn::constant(r(1, 3));
    assert!(matches!(
        solve_vanishing_coefficient(&constant, &ctx, &one()),
        Err(Error::NoSolution(_))
    ));
    let identity = RationalFn::new(Poly::linear(one(), r(-1, 2)), Poly::linear(one(), r(-1, 2)));
    assert!(matches!(
        solve_vanishing_coefficient(&identity, &ctx, &one()),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn solver_skips_crossings_on_the_lattice() {
    // N - D = t - 1/4 puts the only crossing at q^2, where a_1 [n] + a_2
    // would vanish.
    let q = r(1, 2);
    let ctx = QContext::new(q, policy(1e-30)).unwrap();
    let r1 = RationalFn::new(Poly::linear(r(3, 4), r(2, 1)), Poly::linear(one(), one()));
    assert!(matches!(
        solve_vanishing_coefficient(&r1, &ctx, &one()),
        Err(Error::NoSolution(_))
    ));
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

#[test]
fn exact_linear_crossing_zeroes_the_residue_coefficient() {
    for (q, beta, x) in [
        (rat(1, 2), rat(2, 1), rat(1, 3)),
        (rat(1, 3), rat(1, 1), rat(2, 5)),
        (rat(2, 5), rat(9, 4), rat(1, 7)),
        (rat(3, 4), rat(1, 2), rat(3, 5)),
        (rat(1, 10), rat(100, 1), rat(1, 2)),
    ] {
        let num = [x.clone(), -(x.clone() * &beta)];
        let den = [rat(1, 1), -q.clone()];
        let a1 = rat(1, 1);
        let (_, a2) = exact::solve_vanishing_coefficient(&num, &den, &q, &a1).unwrap();
        let closed = (rat(1, 1) - &q + beta.clone() * &x - &x)
            / ((rat(1, 1) - &q) * (q.clone() - beta.clone() * &x));
        assert_eq!(a2, closed);
        let bx = beta.clone() * &x;
        let v =
            -(a1.clone() * &q) + a1.clone() * &bx - a1.clone() * &x + &a1 + a2.clone() * &q * &q
                - a2.clone() * &bx * &q
                - a2.clone() * &q
                + a2.clone() * &bx;
        assert_eq!(v, 0);
    }
}

#[test]
fn exact_cubic_crossing_for_the_alternating_triple() {
    // r1(t) = -((1 - s t)/(1 - s^2 t))^3 with s = √q rational.
    for sq in [rat(1, 2), rat(1, 3), rat(3, 4), rat(2, 7), rat(5, 9)] {
        let q = sq.clone() * &sq;
        let cube = |c: &Rational| {
            vec![
                rat(1, 1),
                -(c.clone() * 3u32),
                c.clone() * c * 3u32,
                -(c.clone() * c * c),
            ]
        };
        let num: Vec<Rational> = cube(&sq).into_iter().map(|c| -c).collect();
        let den = cube(&q);
        let (t, a2) = exact::solve_vanishing_coefficient(&num, &den, &q, &rat(1, 1)).unwrap();
        assert_eq!(t, rat(2, 1) / (sq.clone() + &q));
        let closed = (sq.clone() + 2u32) / ((sq.clone() + 1u32) * (sq.clone() + 1u32) * &sq);
        assert_eq!(a2, closed);
    }
}

fn admissible_pair() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64, f64, f64, f64)> {
    (
        0.1f64..0.9,
        -0.9f64..0.9,
        -0.9f64..0.9,
        0.1f64..0.95,
        -2.0f64..2.0,
        -0.9f64..0.9,
        -0.9f64..0.9,
        -2.0f64..2.0,
        0.5f64..3.0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn summation_by_parts_holds(params in admissible_pair()) {
        let (q, u, v, xa, c, d, xb, a0, b1) = params;
        let q = s(q);
        let a = SequenceSpec::new(s(a0), linear_ratio(s(xa), s(u), s(v)), q.clone(), 0);
        let b = SequenceSpec::new(s(b1), linear_ratio(s(xb), s(c), s(d)), q.clone(), 1);
        let pair = AbelPair::new(a, b);
        let p = policy(1e-28);
        let lhs = abel_lhs(&pair, &p).unwrap();
        let rhs = abel_rhs(&pair, &p).unwrap();
        let floor = 10f64.powf(-(BITS as f64) / 3.0);
        prop_assert!(Scalar::rel_diff(&lhs.value, &rhs.value, floor) <= 1e-25);
    }
}
