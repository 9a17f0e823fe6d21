//! The eighteen registered identities.

use super::{cantarini, Constraint, IdentityRecord, Kind, ParamSpec, Point, Side};
use crate::error::Result;
use crate::hyper::{
    eval_basic, eval_classical, eval_weighted_series, sum_stream, Base, BasicSeriesSpec,
    BracketSeries, ClassicalSeriesSpec, Grouping, SumOptions, Weight, MAX_TERMS,
};
use crate::mpreal::{const_pi, escalate, gamma, pow, PrecisionPolicy, Scalar};
use crate::poly::{Poly, RationalFn};
use crate::qcore::{qpoch_infinite, QContext};

const fn param(name: &'static str, lo: &'static str, hi: &'static str) -> ParamSpec {
    ParamSpec { name, lo, hi }
}

/// Parameter access at the guarded precision of a policy.
struct Args<'a> {
    point: &'a Point,
    bits: u32,
}

impl<'a> Args<'a> {
    fn new(point: &'a Point, policy: &PrecisionPolicy) -> Self {
        Args {
            point,
            bits: policy.guarded_bits(),
        }
    }

    fn get(&self, name: &str) -> Result<Scalar> {
        self.point.scalar(name, self.bits)
    }

    fn ratio(&self, n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(n, d, self.bits)
    }

    fn ctx(&self, policy: &PrecisionPolicy) -> Result<QContext> {
        QContext::new(self.get("q")?, *policy)
    }
}

fn basic(upper: Vec<Scalar>, lower: Vec<Scalar>, x: Scalar, ctx: QContext) -> Result<Side> {
    eval_basic(&BasicSeriesSpec::new(upper, lower, x, ctx)).map(Side::from)
}

fn classical(
    upper: Vec<Scalar>,
    lower: Vec<Scalar>,
    x: Scalar,
    policy: &PrecisionPolicy,
) -> Result<Side> {
    eval_classical(&ClassicalSeriesSpec::new(upper, lower, x), policy).map(Side::from)
}

/// `Π (a_i;q)_∞ / Π (b_j;q)_∞`.
fn products(num: &[Scalar], den: &[Scalar], ctx: &QContext) -> Result<Scalar> {
    let bits = ctx.policy.guarded_bits();
    let mut v = Scalar::one(bits);
    for a in num {
        v *= qpoch_infinite(a, ctx)?;
    }
    for b in den {
        v /= qpoch_infinite(b, ctx)?;
    }
    Ok(v)
}

// Gosper's 2F1 evaluation.

fn g1_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b) = (a.get("a")?, a.get("b")?);
    classical(
        vec![1i64 - &av, b.clone()],
        vec![&b + 2i64],
        &b / &(&av + &b),
        policy,
    )
}

fn g1_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b) = (a.get("a")?, a.get("b")?);
    Ok(Side::closed((&b + 1i64) * pow(&(&av / &(&av + &b)), &av)?))
}

// First q-analogue.

fn g2_lambda(a: &Args) -> Result<Scalar> {
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    Ok((1i64 - pow(&q, &b)?) * pow(&q, &(&av + 1i64))? / (1i64 - pow(&q, &(&av + &b))?))
}

fn g2_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let upper = vec![pow(&q, &(1i64 - &av))?, pow(&q, &b)?];
    basic(
        upper,
        vec![pow(&q, &(&b + 2i64))?],
        g2_lambda(&a)?,
        a.ctx(policy)?,
    )
}

fn g2_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let lam = g2_lambda(&a)?;
    let ctx = a.ctx(policy)?;
    let pre = (1i64 - pow(&q, &(&b + 1i64))?) / (1i64 - &q);
    Ok(Side::closed(
        pre * products(&[&lam * &pow(&q, &(-&av))?], &[lam], &ctx)?,
    ))
}

// Second q-analogue, with the weight 1/p(n).

/// The two linear factors of `p` as polynomials in `t = q^n`.
pub(crate) fn g3_factors(q: &Scalar, a: &Scalar, b: &Scalar) -> Result<(Poly, Poly)> {
    let qa = pow(q, a)?;
    let ab = a + b;
    let c0 = -(a * &qa);
    let f1 = Poly::linear(c0.clone(), &ab * &qa - b);
    let f2 = Poly::linear(c0, &ab * &qa * q - b * q);
    Ok((f1, f2))
}

fn g3_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let ctx = a.ctx(policy)?;
    let ab = &av + &b;
    let (f1, f2) = g3_factors(&q, &av, &b)?;
    let weight = Weight::QRational {
        f: RationalFn::new(Poly::one(a.bits), f1.mul(&f2)),
        base: q.clone(),
        alternating: false,
    };
    let base = Base::Bracket(BracketSeries::new(
        vec![pow(&q, &(1i64 - &av))?],
        vec![q.clone()],
        &b * &q / &ab,
        ctx,
    ));
    let s = eval_weighted_series(&weight, &base, policy, &SumOptions::default())?;
    let pre = &ab * (1i64 - &q).square() * pow(&q, &(&av * 2i64 - 1i64))?;
    Ok(Side {
        value: pre * s.value,
        terms: s.terms_used,
        escalations: s.escalations,
    })
}

pub(crate) fn g3_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let ab = &av + &b;
    let qa = pow(&q, &av)?;
    let first = &ab * (1i64 - &q) * pow(&q, &(&av * 2i64 - 1i64))?
        / (&b * (1i64 - &qa) * (&av * &qa - &b * (1i64 - &qa)));
    let spec = |policy: &PrecisionPolicy| -> Result<BasicSeriesSpec> {
        Ok(BasicSeriesSpec::new(
            vec![pow(&q, &(1i64 - &av))?, q.clone()],
            vec![q.square()],
            &b / &ab,
            a.ctx(policy)?,
        ))
    };
    let scale = (&q * (&ab - &b / &qa)).recip();
    let mut phi = eval_basic(&spec(policy)?)?;
    // The difference can be far smaller than either term; resum to make up
    // the cancelled digits.
    let second = &scale * &phi.value;
    let value = &first - &second;
    let loss = second.abs().to_f64() / value.abs().to_f64();
    if loss > 1.0 && loss.is_finite() {
        let tighter = policy.with_target((policy.target_rel_error / loss).max(1e-300))?;
        phi = eval_basic(&spec(&tighter)?)?;
    }
    let second = scale * &phi.value;
    Ok(Side {
        value: first - second,
        terms: phi.terms_used,
        escalations: phi.escalations,
    })
}

// Heine's q-Gauss sum.

fn h1_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b, c) = (a.get("a")?, a.get("b")?, a.get("c")?);
    let x = &c / &(&av * &b);
    basic(vec![av, b], vec![c], x, a.ctx(policy)?)
}

fn h1_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b, c) = (a.get("a")?, a.get("b")?, a.get("c")?);
    let x = &c / &(&av * &b);
    let num = [&c / &av, &c / &b];
    Ok(Side::closed(products(&num, &[c, x], &a.ctx(policy)?)?))
}

// The 3φ2 extension of Heine's sum.

pub(crate) fn h2_d(q: &Scalar, a: &Scalar, b: &Scalar, c: &Scalar) -> Scalar {
    let ab = a * b;
    (&ab * q + &ab * c - a * c * q - b * c * q) / ((&ab - c * q) * q)
}

fn h2_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b, c) = (a.get("q")?, a.get("a")?, a.get("b")?, a.get("c")?);
    let d = h2_d(&q, &av, &b, &c);
    let x = &c * q.square() / (&av * &b);
    let lower = vec![c, &d * q.square()];
    basic(vec![av, b, d], lower, x, a.ctx(policy)?)
}

pub(crate) fn h2_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b, c) = (a.get("q")?, a.get("a")?, a.get("b")?, a.get("c")?);
    let d = h2_d(&q, &av, &b, &c);
    let ab = &av * &b;
    let pre = -((&ab - &c * &q) * (1i64 - &d) * (1i64 - &d * &q) * &q)
        / ((1i64 - &q) * (&q - &av) * (&q - &b) * &c);
    let cq = &c * &q;
    let prod = products(
        &[&cq / &av, &cq / &b],
        &[c.clone(), &cq * &q / &ab],
        &a.ctx(policy)?,
    )?;
    Ok(Side::closed(pre * prod))
}

// Bailey–Daum q-Kummer sum and its variants.

/// `(-q;q)_∞ (aq²;q²)_∞ (aq³/b²;q²)_∞ / ((-q/b;q)_∞ (aq/b;q)_∞)`, common to
/// the two 4φ3 variants.
fn kummer_k(q: &Scalar, a: &Scalar, b: &Scalar, policy: &PrecisionPolicy) -> Result<Scalar> {
    let ctx = QContext::new(q.clone(), *policy)?;
    let ctx2 = ctx.with_base(q.square())?;
    let outer = products(&[-q.clone()], &[-(q / b), a * q / b], &ctx)?;
    let inner = products(&[a * &q.square(), a * &q.powi(3) / &b.square()], &[], &ctx2)?;
    Ok(outer * inner)
}

fn k1_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let lower = vec![&av * &q / &b];
    basic(vec![av, b.clone()], lower, -(&q / &b), a.ctx(policy)?)
}

fn k1_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let ctx = a.ctx(policy)?;
    let ctx2 = ctx.with_base(q.square())?;
    let outer = products(&[-q.clone()], &[-(&q / &b), &av * &q / &b], &ctx)?;
    let inner = products(&[&av * &q, &av * q.square() / b.square()], &[], &ctx2)?;
    Ok(Side::closed(outer * inner))
}

fn k2_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let ra = av.sqrt()?;
    let rq = q.sqrt()?;
    let upper = vec![
        av.clone(),
        &ra * &q,
        -(&ra * &q),
        &ra / &rq,
        -(&ra / &rq),
        b.clone(),
    ];
    let lower = vec![
        ra.clone(),
        -ra.clone(),
        &ra * &q * &rq,
        -(&ra * &q * &rq),
        &av * &q / &b,
    ];
    basic(upper, lower, -(q.square() / &b), a.ctx(policy)?)
}

pub(crate) fn k2_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let ctx = a.ctx(policy)?;
    let ctx2 = ctx.with_base(q.square())?;
    let q2 = q.square();
    let outer = products(&[-q2.clone()], &[-(&q2 / &b), &av * &q / &b], &ctx)?;
    let inner = products(&[&av * &q2, &av * q.powi(3) / b.square()], &[], &ctx2)?;
    Ok(Side::closed((1i64 - &av * &q) * outer * inner))
}

fn k3_params(q: &Scalar, a: &Scalar, b: &Scalar) -> (Vec<Scalar>, Vec<Scalar>) {
    let ab = a + b;
    let e1 = &ab / &(q + b);
    let e2 = &ab * q / (1i64 + b);
    let upper = vec![a.clone(), b.clone(), e1.clone(), e2.clone()];
    let lower = vec![a * q / b, &e1 * &q.square(), &e2 / q];
    (upper, lower)
}

fn k3_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let (upper, lower) = k3_params(&q, &av, &b);
    basic(upper, lower, -(q.square() / &b), a.ctx(policy)?)
}

pub(crate) fn k3_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let pre = (&q - &av * &q + &b - &b * &q) / &b;
    Ok(Side::closed(pre * kummer_k(&q, &av, &b, policy)?))
}

fn k4_params(q: &Scalar, a: &Scalar, b: &Scalar) -> (Vec<Scalar>, Vec<Scalar>) {
    let ab = a + b;
    let g1 = (q + b) * a / (&ab * q);
    let g2 = (1i64 + b) * a * q / &ab;
    let upper = vec![a.clone(), b.clone(), g1.clone(), g2.clone()];
    let lower = vec![a * q / b, &g1 * &q.square(), &g2 / q];
    (upper, lower)
}

fn k4_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let (upper, lower) = k4_params(&q, &av, &b);
    basic(upper, lower, -(&q / &b), a.ctx(policy)?)
}

pub(crate) fn k4_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b) = (a.get("q")?, a.get("a")?, a.get("b")?);
    let pre = (&av + &b - &av * &q - &av * &b) / &b;
    Ok(Side::closed(pre * kummer_k(&q, &av, &b, policy)?))
}

// Very-well-poised 6φ5 sum.

fn k5_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b, c, d) = (
        a.get("q")?,
        a.get("a")?,
        a.get("b")?,
        a.get("c")?,
        a.get("d")?,
    );
    let ra = av.sqrt()?;
    let aq = &av * &q;
    let upper = vec![
        av.clone(),
        &ra * &q,
        -(&ra * &q),
        b.clone(),
        c.clone(),
        d.clone(),
    ];
    let lower = vec![ra.clone(), -ra, &aq / &b, &aq / &c, &aq / &d];
    let x = &aq / &(&b * &c * &d);
    basic(upper, lower, x, a.ctx(policy)?)
}

fn k5_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (q, av, b, c, d) = (
        a.get("q")?,
        a.get("a")?,
        a.get("b")?,
        a.get("c")?,
        a.get("d")?,
    );
    let aq = &av * &q;
    let num = [
        aq.clone(),
        &aq / &(&b * &c),
        &aq / &(&b * &d),
        &aq / &(&c * &d),
    ];
    let den = [&aq / &b, &aq / &c, &aq / &d, &aq / &(&b * &c * &d)];
    Ok(Side::closed(products(&num, &den, &a.ctx(policy)?)?))
}

// Dougall's 5F4 sum and its d → -∞ limit.

fn gammas(num: &[Scalar], den: &[Scalar], policy: &PrecisionPolicy) -> Result<Scalar> {
    let tight = policy.with_target(policy.target_rel_error / 16.0)?;
    let mut v = Scalar::one(policy.guarded_bits());
    for x in num {
        v *= gamma(x, &tight)?;
    }
    for x in den {
        v /= gamma(x, &tight)?;
    }
    Ok(v)
}

fn d1_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b, c, d) = (a.get("a")?, a.get("b")?, a.get("c")?, a.get("d")?);
    let half = &av / 2i64;
    let upper = vec![av.clone(), &half + 1i64, b.clone(), c.clone(), d.clone()];
    let lower = vec![half, &av - &b + 1i64, &av - &c + 1i64, &av - &d + 1i64];
    classical(upper, lower, a.ratio(1, 1), policy)
}

fn d1_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b, c, d) = (a.get("a")?, a.get("b")?, a.get("c")?, a.get("d")?);
    let s = |x: Scalar| x + 1i64;
    let num = [s(&av - &b), s(&av - &c), s(&av - &d), s(&av - &b - &c - &d)];
    let den = [
        s(av.clone()),
        s(&av - &b - &c),
        s(&av - &b - &d),
        s(&av - &c - &d),
    ];
    Ok(Side::closed(gammas(&num, &den, policy)?))
}

pub(crate) fn d2_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b, c) = (a.get("a")?, a.get("b")?, a.get("c")?);
    let half = &av / 2i64;
    let upper = vec![av.clone(), &half + 1i64, b.clone(), c.clone()];
    let lower = vec![half, &av - &b + 1i64, &av - &c + 1i64];
    classical(upper, lower, a.ratio(-1, 1), policy)
}

fn d2_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (av, b, c) = (a.get("a")?, a.get("b")?, a.get("c")?);
    let num = [&av - &b + 1i64, &av - &c + 1i64];
    let den = [&av + 1i64, &av - &b - &c + 1i64];
    Ok(Side::closed(gammas(&num, &den, policy)?))
}

// Parameterless sums with the cubed central binomial kernel
// (-1/64)^n C(2n,n)^3 = (-1)^n ((1/2)_n / n!)^3.

pub(crate) fn central_binomial_cubed(bits: u32) -> Base {
    let half = Scalar::from_ratio(1, 2, bits);
    let one = Scalar::one(bits);
    Base::Classical(ClassicalSeriesSpec::new(
        vec![half; 3],
        vec![one.clone(), one],
        Scalar::from_i64(-1, bits),
    ))
}

fn n_weight(num: &[i64], den: &[i64], bits: u32) -> Weight {
    let poly = |c: &[i64]| Poly::new(c.iter().map(|&v| Scalar::from_i64(v, bits)).collect());
    Weight::NRational {
        f: RationalFn::new(poly(num), poly(den)),
        alternating: false,
    }
}

fn binomial_sum(num: &[i64], den: &[i64], policy: &PrecisionPolicy) -> Result<Side> {
    let bits = policy.guarded_bits();
    let base = central_binomial_cubed(bits);
    eval_weighted_series(
        &n_weight(num, den, bits),
        &base,
        policy,
        &SumOptions::default(),
    )
    .map(Side::from)
}

fn c1_lhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    // (4n+1)² / ((4n-1)(4n+3))
    binomial_sum(&[1, 8, 16], &[-3, 8, 16], policy)
}

/// `-32 (2 + √2) Γ(1/4)² / Γ(1/8)⁴`.
pub(crate) fn c1_closed(policy: &PrecisionPolicy) -> Result<Scalar> {
    let bits = policy.guarded_bits();
    let quarter = Scalar::from_ratio(1, 4, bits);
    let eighth = Scalar::from_ratio(1, 8, bits);
    let g = gammas(
        &[quarter.clone(), quarter],
        &[eighth.clone(), eighth.clone(), eighth.clone(), eighth],
        policy,
    )?;
    let root2 = Scalar::from_i64(2, bits).sqrt()?;
    Ok(-(Scalar::from_i64(32, bits) * (root2 + 2i64) * g))
}

fn c1_rhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    c1_closed(policy).map(Side::closed)
}

fn b1_lhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    binomial_sum(&[1, 4], &[1], policy)
}

fn b1_rhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let bits = policy.guarded_bits();
    Ok(Side::closed(Scalar::from_i64(2, bits) / const_pi(bits)))
}

fn c3_lhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    // (2n+1)(4n²+8n+5) / (n+1)³
    binomial_sum(&[5, 18, 20, 8], &[1, 3, 3, 1], policy)
}

/// The companion sum implied by matching the `q → 1` limits of both sides
/// of the q-series identity: `κ₁ C = c + κ₂ D`.
pub(crate) fn c3_closed(policy: &PrecisionPolicy) -> Result<Scalar> {
    let s = cantarini::limit_scalars()?;
    let bits = policy.guarded_bits();
    let r = |v: &rug::Rational| Scalar::from_rational(v, bits);
    Ok((r(&s.kappa_lhs) * c1_closed(policy)? - r(&s.constant)) / r(&s.kappa_rhs))
}

fn c3_rhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    c3_closed(policy).map(Side::closed)
}

fn c2_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let q = Args::new(p, policy).get("q")?;
    cantarini::lhs(&q, policy).map(Side::from)
}

pub(crate) fn c2_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let q = Args::new(p, policy).get("q")?;
    let (value, terms, escalations) = cantarini::rhs(&q, policy)?;
    Ok(Side {
        value,
        terms,
        escalations,
    })
}

// A double series with a logarithmic closed form.

fn x1_once(target: f64, bits: u32) -> Result<crate::hyper::SeriesResult> {
    let inner_target = target / 16.0;
    // c_n = C(2n,n)/16^n
    let mut c = Scalar::from_ratio(1, 8, bits);
    let mut n = 1i64;
    let mut outer = || -> Result<Option<Scalar>> {
        let nn = Scalar::from_i64(n, bits);
        let r1 = Scalar::from_ratio(2 * n + 1, 8 * (n + 1), bits);
        let r2 = Scalar::from_ratio(2 * n - 1, 8 * n, bits);
        let (mut p1, mut p2) = (nn.clone(), &nn + 1i64);
        let mut m = 0i64;
        let mut inner = || -> Result<Option<Scalar>> {
            let t = (&p1 - &p2) / (m + n + 1);
            p1 *= &r1;
            p2 *= &r2;
            m += 1;
            Ok(Some(t))
        };
        let s = sum_stream(&mut inner, Grouping::Single, inner_target, MAX_TERMS, bits)?;
        let term = &c / &(&nn * &(&nn + 1i64)) * s.value;
        c *= Scalar::from_ratio(2 * n + 1, 8 * (n + 1), bits);
        n += 1;
        Ok(Some(term))
    };
    sum_stream(&mut outer, Grouping::Single, target, MAX_TERMS, bits)
}

fn x1_lhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let (r, steps) = escalate(
        policy,
        |bits| x1_once(policy.target_rel_error, bits + 32),
        |r| &r.value,
    )?;
    Ok(Side {
        value: r.value,
        terms: r.terms_used,
        escalations: steps,
    })
}

fn x1_rhs(_: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let bits = policy.guarded_bits();
    let r3 = Scalar::from_i64(3, bits).sqrt()?;
    let arg = (&r3 + 2i64).square() * 7i64 / 128i64;
    Ok(Side::closed(16i64 - &r3 * 8i64 + arg.ln()? * 8i64))
}

// q-binomial theorem.

fn qb_lhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    basic(vec![a.get("alpha")?], vec![], a.get("x")?, a.ctx(policy)?)
}

fn qb_rhs(p: &Point, policy: &PrecisionPolicy) -> Result<Side> {
    let a = Args::new(p, policy);
    let (al, x) = (a.get("alpha")?, a.get("x")?);
    Ok(Side::closed(products(&[&al * &x], &[x], &a.ctx(policy)?)?))
}

const Q_STD: ParamSpec = param("q", "0.05", "0.9");
const A_UNIT: ParamSpec = param("a", "0.05", "0.95");
const B_KUMMER: ParamSpec = param("b", "1", "6");

pub static CATALOG: [IdentityRecord; 18] = [
    IdentityRecord {
        id: "G1",
        name: "Gosper's strange 2F1 evaluation",
        kind: Kind::Classical,
        statement: "2F1[1-a, b; b+2; b/(a+b)] = (b+1) (a/(a+b))^a",
        params: &[param("a", "0.1", "5"), param("b", "0.1", "5")],
        derived: &[],
        constraints: &[Constraint::Compare("|b/(a+b)| < 1"), Constraint::Compare("b + 2 > 0"), Constraint::Compare("a > 0")],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: g1_lhs,
        rhs: g1_rhs,
    },
    IdentityRecord {
        id: "G2",
        name: "q-analogue of Gosper's evaluation via three-term relations",
        kind: Kind::Basic,
        statement: "2φ1[q^(1-a), q^b; q^(b+2); q, λ] = (1-q^(b+1))/(1-q) (λq^(-a);q)∞/(λ;q)∞",
        params: &[param("q", "0.05", "0.95"), param("a", "-0.5", "5"), param("b", "0.1", "5")],
        derived: &[("λ", "(1 - q^b)*q^(a+1)/(1 - q^(a+b))")],
        constraints: &[Constraint::Compare("a + b > 0"), Constraint::Compare("|λ| < 1")],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: g2_lhs,
        rhs: g2_rhs,
    },
    IdentityRecord {
        id: "G3",
        name: "q-analogue of Gosper's evaluation via summation by parts",
        kind: Kind::Basic,
        statement: "(a+b)(1-q)² q^(2a-1) Σ (bq/(a+b))^n (q^(1-a);q)_n / ((q;q)_n p(n)) \
                    = (a+b)(1-q)q^(2a-1) / (b(1-q^a)(aq^a - b(1-q^a))) \
                    - 2φ1[q^(1-a), q; q²; q, b/(a+b)] / (q(a+b-bq^(-a))), \
                    p(n) = ((a+b)q^(a+n) - bq^n - aq^a)((a+b)q^(a+n+1) - bq^(n+1) - aq^a)",
        params: &[param("q", "0.05", "0.8"), param("a", "0.1", "5"), param("b", "0.1", "5")],
        derived: &[],
        constraints: &[
            Constraint::Compare("|b/(a+b)| < 1"),
            Constraint::Compare("(1 - q^a)*(a*q^a - b*(1 - q^a)) != 0"),
            Constraint::Compare("a + b - b*q^(-a) != 0"),
            Constraint::Lattice {
                text: "p(n) != 0 for n >= 0",
                exprs: &["a*q^a/((a+b)*q^a - b)", "a*q^(a-1)/((a+b)*q^a - b)"],
                inverse: false,
            },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: g3_lhs,
        rhs: g3_rhs,
    },
    IdentityRecord {
        id: "H1",
        name: "Heine's q-Gauss sum",
        kind: Kind::Basic,
        statement: "2φ1[a, b; c; q, c/(ab)] = (c/a;q)∞(c/b;q)∞/((c;q)∞(c/(ab);q)∞)",
        params: &[Q_STD, param("a", "-3", "3"), param("b", "-3", "3"), param("c", "-0.9", "0.9")],
        derived: &[],
        constraints: &[
            Constraint::Compare("a*b != 0"),
            Constraint::Compare("|c/(a*b)| < 1"),
            Constraint::Lattice { text: "c != q^-n", exprs: &["c"], inverse: true },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: h1_lhs,
        rhs: h1_rhs,
    },
    IdentityRecord {
        id: "H2",
        name: "3φ2 extension of Heine's q-Gauss sum",
        kind: Kind::Basic,
        statement: "3φ2[a, b, d; c, dq²; q, cq²/(ab)] = -(ab-cq)(1-d)(1-dq)q/((1-q)(q-a)(q-b)c) \
                    (cq/a;q)∞(cq/b;q)∞/((c;q)∞(cq²/(ab);q)∞)",
        params: &[Q_STD, param("a", "0.1", "3"), param("b", "0.1", "3"), param("c", "-0.9", "0.9")],
        derived: &[("d", "(a*b*q + a*b*c - a*c*q - b*c*q)/((a*b - c*q)*q)")],
        constraints: &[
            Constraint::Compare("a*b != c*q"),
            Constraint::Compare("a != q"),
            Constraint::Compare("b != q"),
            Constraint::Compare("c != 0"),
            Constraint::Compare("|c*q^2/(a*b)| < 1"),
            Constraint::Lattice { text: "c, dq² != q^-n", exprs: &["c", "d*q^2"], inverse: true },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: h2_lhs,
        rhs: h2_rhs,
    },
    IdentityRecord {
        id: "K1",
        name: "Bailey–Daum q-Kummer sum",
        kind: Kind::Basic,
        statement: "2φ1[a, b; aq/b; q, -q/b] = (-q;q)∞(aq;q²)∞(aq²/b²;q²)∞/((-q/b;q)∞(aq/b;q)∞)",
        params: &[Q_STD, A_UNIT, B_KUMMER],
        derived: &[],
        constraints: &[
            Constraint::Compare("|q/b| < 1"),
            Constraint::Lattice { text: "aq/b != q^-n", exprs: &["a*q/b"], inverse: true },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: k1_lhs,
        rhs: k1_rhs,
    },
    IdentityRecord {
        id: "K2",
        name: "6φ5 variant of the q-Kummer sum",
        kind: Kind::Basic,
        statement: "6φ5[a, √a q, -√a q, √a/√q, -√a/√q, b; √a, -√a, √a q√q, -√a q√q, aq/b; q, -q²/b] \
                    = (1-aq)(-q²;q)∞(aq²;q²)∞(aq³/b²;q²)∞/((-q²/b;q)∞(aq/b;q)∞)",
        params: &[Q_STD, A_UNIT, B_KUMMER],
        derived: &[],
        constraints: &[
            Constraint::Compare("a > 0"),
            Constraint::Compare("|q^2/b| < 1"),
            Constraint::Lattice { text: "aq/b != q^-n", exprs: &["a*q/b"], inverse: true },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: k2_lhs,
        rhs: k2_rhs,
    },
    IdentityRecord {
        id: "K3",
        name: "4φ3 variant of the q-Kummer sum at -q²/b",
        kind: Kind::Basic,
        statement: "4φ3[a, b, (a+b)/(q+b), (a+b)q/(1+b); aq/b, (a+b)q²/(q+b), (a+b)/(1+b); q, -q²/b] \
                    = (q-aq+b-bq)/b (-q;q)∞(aq²;q²)∞(aq³/b²;q²)∞/((-q/b;q)∞(aq/b;q)∞)",
        params: &[Q_STD, A_UNIT, B_KUMMER],
        derived: &[],
        constraints: &[
            Constraint::Compare("|q^2/b| < 1"),
            Constraint::Compare("q + b != 0"),
            Constraint::Compare("1 + b != 0"),
            Constraint::Compare("a + b != 0"),
            Constraint::Lattice {
                text: "lower parameters != q^-n",
                exprs: &["a*q/b", "(a+b)*q^2/(q+b)", "(a+b)/(1+b)"],
                inverse: true,
            },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: k3_lhs,
        rhs: k3_rhs,
    },
    IdentityRecord {
        id: "K4",
        name: "4φ3 variant of the q-Kummer sum at -q/b",
        kind: Kind::Basic,
        statement: "4φ3[a, b, (q+b)a/((a+b)q), (1+b)aq/(a+b); aq/b, (q+b)aq/(a+b), (1+b)a/(a+b); q, -q/b] \
                    = (a+b-aq-ab)/b (-q;q)∞(aq²;q²)∞(aq³/b²;q²)∞/((-q/b;q)∞(aq/b;q)∞)",
        params: &[Q_STD, A_UNIT, B_KUMMER],
        derived: &[],
        constraints: &[
            Constraint::Compare("|q/b| < 1"),
            Constraint::Compare("a + b != 0"),
            Constraint::Lattice {
                text: "lower parameters != q^-n",
                exprs: &["a*q/b", "(q+b)*a*q/(a+b)", "(1+b)*a/(a+b)"],
                inverse: true,
            },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: k4_lhs,
        rhs: k4_rhs,
    },
    IdentityRecord {
        id: "K5",
        name: "Very-well-poised 6φ5 sum",
        kind: Kind::Basic,
        statement: "6φ5[a, √a q, -√a q, b, c, d; √a, -√a, aq/b, aq/c, aq/d; q, aq/(bcd)] \
                    = (aq, aq/(bc), aq/(bd), aq/(cd);q)∞/(aq/b, aq/c, aq/d, aq/(bcd);q)∞",
        params: &[Q_STD, A_UNIT, param("b", "0.5", "4"), param("c", "0.5", "4"), param("d", "0.5", "4")],
        derived: &[],
        constraints: &[
            Constraint::Compare("a > 0"),
            Constraint::Compare("|a*q/(b*c*d)| < 1"),
            Constraint::Lattice {
                text: "aq/b, aq/c, aq/d != q^-n",
                exprs: &["a*q/b", "a*q/c", "a*q/d"],
                inverse: true,
            },
        ],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: k5_lhs,
        rhs: k5_rhs,
    },
    IdentityRecord {
        id: "D1",
        name: "Dougall's 5F4 sum",
        kind: Kind::Classical,
        statement: "5F4[a, a/2+1, b, c, d; a/2, a-b+1, a-c+1, a-d+1; 1] \
                    = Γ(a-b+1)Γ(a-c+1)Γ(a-d+1)Γ(a-b-c-d+1)/(Γ(a+1)Γ(a-b-c+1)Γ(a-b-d+1)Γ(a-c-d+1))",
        params: &[param("a", "1", "5"), param("b", "0.1", "1.5"), param("c", "0.1", "1.5"), param("d", "0.1", "1.5")],
        derived: &[],
        constraints: &[Constraint::Compare("a - b - c - d + 1 > 0")],
        sampling: &["a - b - c - d + 1 > 0.3"],
        tolerance: 1e-25,
        experimental: false,
        lhs: d1_lhs,
        rhs: d1_rhs,
    },
    IdentityRecord {
        id: "D2",
        name: "Dougall's sum with d → -∞",
        kind: Kind::Classical,
        statement: "4F3[a, a/2+1, b, c; a/2, a-b+1, a-c+1; -1] = Γ(a-b+1)Γ(a-c+1)/(Γ(a+1)Γ(a-b-c+1))",
        params: &[param("a", "1", "5"), param("b", "0.1", "1.5"), param("c", "0.1", "1.5")],
        derived: &[],
        constraints: &[Constraint::Compare("a - b - c + 1 > 0"), Constraint::Compare("a + 2 - 2*b - 2*c > 0")],
        sampling: &["a + 2 - 2*b - 2*c > 0.3"],
        tolerance: 1e-25,
        experimental: false,
        lhs: d2_lhs,
        rhs: d2_rhs,
    },
    IdentityRecord {
        id: "C1",
        name: "Cantarini's series",
        kind: Kind::Constant,
        statement: "Σ (-1/64)^n C(2n,n)³ (4n+1)²/((4n-1)(4n+3)) = -32(2+√2)Γ(1/4)²/Γ(1/8)⁴",
        params: &[],
        derived: &[],
        constraints: &[],
        sampling: &[],
        tolerance: 1e-25,
        experimental: false,
        lhs: c1_lhs,
        rhs: c1_rhs,
    },
    IdentityRecord {
        id: "C2",
        name: "q-analogue of Cantarini's series",
        kind: Kind::Basic,
        statement: "Σ (-1)^n [q,q,q; q²,q²,q²; q²]_n ρ₁(n)/((q^2n+q^(2n+1)-2q)(q^(2n+1)+q^(2n+2)-2)) \
                    = (1-q)(1+q)²q/2 [q,q,q; q²,q²,q²; q²]_∞ - (1+q)²q² \
                    + Σ (-1)^n [q,q,q; q²,q²,q²; q²]_n ρ₂(n)/((1-q^(n+1))³(1+q^(n+1))³), \
                    both series as limits of partial sums ending at even n",
        params: &[param("q", "0.05", "0.8")],
        derived: &[],
        constraints: &[],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: c2_lhs,
        rhs: c2_rhs,
    },
    IdentityRecord {
        id: "B1",
        name: "Bauer–Ramanujan series",
        kind: Kind::Constant,
        statement: "Σ (-1/64)^n C(2n,n)³ (4n+1) = 2/π",
        params: &[],
        derived: &[],
        constraints: &[],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: b1_lhs,
        rhs: b1_rhs,
    },
    IdentityRecord {
        id: "C3",
        name: "Companion of Cantarini's series from the q → 1 limit",
        kind: Kind::Constant,
        statement: "Σ (-1/64)^n C(2n,n)³ (2n+1)(4n²+8n+5)/(n+1)³ = (κ₁ C1 - c)/κ₂ \
                    with κ₁, κ₂, c from the q → 1 expansion of the C2 weights",
        params: &[],
        derived: &[],
        constraints: &[],
        sampling: &[],
        tolerance: 1e-25,
        experimental: false,
        lhs: c3_lhs,
        rhs: c3_rhs,
    },
    IdentityRecord {
        id: "X1",
        name: "Double series with a logarithmic value",
        kind: Kind::Constant,
        statement: "Σ_{n≥1} Σ_{m≥0} C(2n,n)/((m+n+1)n(n+1)) (n((2n+1)/(n+1))^m - (n+1)((2n-1)/n)^m)/(8^m 16^n) \
                    = 16 - 8√3 + 8 ln(7(2+√3)²/128)",
        params: &[],
        derived: &[],
        constraints: &[],
        sampling: &[],
        tolerance: 1e-30,
        experimental: true,
        lhs: x1_lhs,
        rhs: x1_rhs,
    },
    IdentityRecord {
        id: "QB",
        name: "q-binomial theorem",
        kind: Kind::Basic,
        statement: "1φ0[α; -; q, x] = (αx;q)∞/(x;q)∞",
        params: &[Q_STD, param("alpha", "-2", "2"), param("x", "-0.9", "0.9")],
        derived: &[],
        constraints: &[Constraint::Compare("|x| < 1")],
        sampling: &[],
        tolerance: 1e-30,
        experimental: false,
        lhs: qb_lhs,
        rhs: qb_rhs,
    },
];
