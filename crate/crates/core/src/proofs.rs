//! Summation-by-parts certificates for the q-analogues: each theorem is an
//! [`AbelPair`] together with the value its left series should take once
//! the transformed series has been summed in closed form.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::abel::{
    certify_transformation, solve_vanishing_coefficient, AbelPair, Certification,
    RationalCoefficients, SequenceSpec,
};
use crate::error::{Error, Result};
use crate::hyper::{eval_weighted_series, Base, BracketSeries, Grouping, SumOptions, Weight};
use crate::identities::{find, sample_points, Point, VerifyOptions};
use crate::mpreal::{pow, PrecisionPolicy, Scalar};
use crate::poly::{Poly, RationalFn};
use crate::qcore::QContext;

/// A pair, plus the coefficients of `A_n = 1/(a_1 [n] + a_2)` when they
/// came from the vanishing-coefficient solver.
#[derive(Debug, Clone)]
pub struct Setup {
    pub pair: AbelPair,
    pub coefficients: Option<RationalCoefficients>,
}

type Build = fn(&Point, &PrecisionPolicy) -> Result<Setup>;
type Claim = fn(&Point, &Setup, &PrecisionPolicy) -> Result<Scalar>;

pub struct Theorem {
    pub id: &'static str,
    pub aliases: &'static [&'static str],
    /// Registry record whose parameters and right side the theorem uses.
    pub identity: &'static str,
    pub name: &'static str,
    build: Build,
    claim: Claim,
}

impl Theorem {
    pub fn setup(&self, point: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
        (self.build)(point, policy)
    }

    pub fn claimed(
        &self,
        point: &Point,
        setup: &Setup,
        policy: &PrecisionPolicy,
    ) -> Result<Scalar> {
        (self.claim)(point, setup, policy)
    }
}

pub static THEOREMS: [Theorem; 7] = [
    Theorem {
        id: "thm2.1",
        aliases: &["G2"],
        identity: "G2",
        name: "first q-analogue of Gosper's sum",
        build: thm21,
        claim: thm21_claim,
    },
    Theorem {
        id: "thm2.2",
        aliases: &["G3"],
        identity: "G3",
        name: "second q-analogue of Gosper's sum",
        build: thm22,
        claim: thm22_claim,
    },
    Theorem {
        id: "gauss",
        aliases: &["H2"],
        identity: "H2",
        name: "3φ2 extension of Heine's sum",
        build: gauss,
        claim: gauss_claim,
    },
    Theorem {
        id: "variant1",
        aliases: &["K2"],
        identity: "K2",
        name: "6φ5 variant of the q-Kummer sum",
        build: variant1,
        claim: variant1_claim,
    },
    Theorem {
        id: "variant2",
        aliases: &["K3"],
        identity: "K3",
        name: "first 4φ3 variant of the q-Kummer sum",
        build: variant2,
        claim: variant2_claim,
    },
    Theorem {
        id: "variant3",
        aliases: &["K4"],
        identity: "K4",
        name: "second 4φ3 variant of the q-Kummer sum",
        build: variant3,
        claim: variant3_claim,
    },
    Theorem {
        id: "cantarini",
        aliases: &["C2"],
        identity: "C2",
        name: "q-analogue of Cantarini's series",
        build: cantarini,
        claim: cantarini_claim,
    },
];

pub fn theorems() -> &'static [Theorem] {
    &THEOREMS
}

/// Case-insensitive lookup by id or alias.
pub fn find_theorem(id: &str) -> Result<&'static Theorem> {
    THEOREMS
        .iter()
        .find(|t| {
            t.id.eq_ignore_ascii_case(id) || t.aliases.iter().any(|a| a.eq_ignore_ascii_case(id))
        })
        .ok_or_else(|| Error::Unknown(format!("theorem {id}")))
}

fn get(p: &Point, name: &str, policy: &PrecisionPolicy) -> Result<Scalar> {
    p.scalar(name, policy.guarded_bits())
}

/// `x Π(1 - u_i t) / Π(1 - v_j t)`.
fn frac(x: Scalar, us: &[Scalar], vs: &[Scalar]) -> RationalFn {
    let bits = x.precision();
    let lin = |c: &Scalar| Poly::linear(Scalar::one(bits), -c.clone());
    let num: Vec<Poly> = us.iter().map(lin).collect();
    let den: Vec<Poly> = vs.iter().map(lin).collect();
    RationalFn::new(
        Poly::product(&num, bits).scale(&x),
        Poly::product(&den, bits),
    )
}

fn rhs_of(id: &str, p: &Point, policy: &PrecisionPolicy) -> Result<Scalar> {
    Ok((find(id)?.rhs)(p, policy)?.value)
}

/// `A_n = 1/(a_1 [n] + a_2)` with `a_1 = 1` and `a_2` from the solver, in
/// the base of `ctx`.
fn reciprocal_bracket(
    r1: &RationalFn,
    ctx: &QContext,
) -> Result<(SequenceSpec, RationalCoefficients)> {
    let q = ctx.q().clone();
    let bits = q.precision();
    let coeffs = solve_vanishing_coefficient(r1, ctx, &Scalar::one(bits))?;
    let c = 1i64 + &coeffs.a2 * &(1i64 - &q);
    let ratio = frac(Scalar::one(bits), &[c.recip()], &[&q / &c]);
    Ok((SequenceSpec::new(coeffs.a2.recip(), ratio, q, 0), coeffs))
}

// The first Gosper analogue: A_n = (1-q) q^n/(1 - q^(b+n)), B_n = [q^(1-a); q]_(n-1) (λ/q)^(n-1).

fn g2_lambda(q: &Scalar, a: &Scalar, b: &Scalar) -> Result<Scalar> {
    Ok((1i64 - pow(q, b)?) * pow(q, &(a + 1i64))? / (1i64 - pow(q, &(a + b))?))
}

fn thm21(p: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
    let (q, a, b) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
    );
    let qb = pow(&q, &b)?;
    let lam = g2_lambda(&q, &a, &b)?;
    let seq_a = SequenceSpec::new(
        (1i64 - &q) / (1i64 - &qb),
        frac(q.clone(), std::slice::from_ref(&qb), &[&qb * &q]),
        q.clone(),
        0,
    );
    let seq_b = SequenceSpec::new(
        Scalar::one(q.precision()),
        frac(
            &lam / &q,
            &[pow(&q, &(-&a))?],
            &[Scalar::one(q.precision())],
        ),
        q,
        1,
    );
    Ok(Setup {
        pair: AbelPair::new(seq_a, seq_b),
        coefficients: None,
    })
}

fn thm21_claim(p: &Point, _: &Setup, policy: &PrecisionPolicy) -> Result<Scalar> {
    let (q, b) = (get(p, "q", policy)?, get(p, "b", policy)?);
    let qb = pow(&q, &b)?;
    let pre = -(1i64 - &q).square() / ((1i64 - &qb) * (1i64 - &qb * &q));
    Ok(pre * rhs_of("G2", p, policy)?)
}

// The second Gosper analogue: B_n = x^n (β;q)_n/(q;q)_n and A_n from the solver.

fn g3_b_ratio(q: &Scalar, a: &Scalar, b: &Scalar) -> Result<RationalFn> {
    let x = b / &(a + b);
    Ok(frac(x, &[pow(q, &(1i64 - a))?], std::slice::from_ref(q)))
}

fn thm22(p: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
    let (q, a, b) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
    );
    let r1 = g3_b_ratio(&q, &a, &b)?;
    let ctx = QContext::new(q.clone(), *policy)?;
    let (seq_a, coeffs) = reciprocal_bracket(&r1, &ctx)?;
    let seq_b = SequenceSpec::new(Scalar::one(q.precision()), r1, q, 0);
    Ok(Setup {
        pair: AbelPair::new(seq_a, seq_b),
        coefficients: Some(coeffs),
    })
}

fn thm22_claim(p: &Point, _: &Setup, policy: &PrecisionPolicy) -> Result<Scalar> {
    let (q, a, b) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
    );
    let ab = &a + &b;
    let x = &b / &ab;
    let beta = pow(&q, &(1i64 - &a))?;
    let qa = pow(&q, &a)?;
    let e = &ab * (1i64 - &q) * (&q - &beta * &x) * &qa;
    let k = &ab * (1i64 - &q).square() * pow(&q, &(&a * 2i64 - 1i64))?;
    let (f1, f2) = crate::identities::g3_factors(&q, &a, &b)?;
    let one = Scalar::one(q.precision());
    let p0 = f1.eval(&one) * f2.eval(&one);
    let rhs = rhs_of("G3", p, policy)?;
    Ok(e.square() / &q * (p0.recip() - rhs / k))
}

// The 3φ2 extension of Heine's sum.

fn gauss(p: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
    let (q, a, b, c) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
        get(p, "c", policy)?,
    );
    let ab = &a * &b;
    let k = &ab * &q + &ab * &c - &a * &c * &q - &b * &c * &q;
    let u = &k / &(&ab - &c * &q);
    let seq_a = SequenceSpec::new(
        (1i64 - &q) / (&q - &u),
        frac(q.clone(), &[&u / &q], &[u]),
        q.clone(),
        0,
    );
    let x = &c * &q / &ab;
    let ratio = frac(
        x,
        &[&a / &q, &b / &q],
        &[Scalar::one(q.precision()), &c / &q],
    );
    let seq_b = SequenceSpec::new(Scalar::one(q.precision()), ratio, q, 1);
    Ok(Setup {
        pair: AbelPair::new(seq_a, seq_b),
        coefficients: None,
    })
}

fn gauss_claim(p: &Point, _: &Setup, policy: &PrecisionPolicy) -> Result<Scalar> {
    let (q, a, b, c) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
        get(p, "c", policy)?,
    );
    let d = crate::identities::h2_d(&q, &a, &b, &c);
    let pre = -(1i64 - &q).square() / (&q * (1i64 - &d) * (1i64 - &d * &q));
    Ok(pre * rhs_of("H2", p, policy)?)
}

// The q-Kummer variants share B_n = [a, b; q, aq/b]_(n-1) (q/b)^(k(n-1)).

fn kummer_b(q: &Scalar, a: &Scalar, b: &Scalar, power: i64) -> SequenceSpec {
    let one = Scalar::one(q.precision());
    let x = (q / b).powi(power);
    let ratio = frac(x, &[a / q, b / q], &[one.clone(), a / b]);
    SequenceSpec::new(one, ratio, q.clone(), 1)
}

fn variant1(p: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
    let (q, a) = (get(p, "q", policy)?, get(p, "a", policy)?);
    let b = get(p, "b", policy)?;
    let one = Scalar::one(q.precision());
    let zero = Scalar::zero(q.precision());
    // -q (1 - (a/q) t²)/(1 - aq t²)
    let num = Poly::new(vec![-q.clone(), zero.clone(), a.clone()]);
    let den = Poly::new(vec![one, zero, -(&a * &q)]);
    let seq_a = SequenceSpec::new(
        (1i64 - &q) / (1i64 - &a / &q),
        RationalFn::new(num, den),
        q.clone(),
        0,
    );
    Ok(Setup {
        pair: AbelPair::new(seq_a, kummer_b(&q, &a, &b, 1)),
        coefficients: None,
    })
}

fn variant1_claim(p: &Point, _: &Setup, policy: &PrecisionPolicy) -> Result<Scalar> {
    let (q, a) = (get(p, "q", policy)?, get(p, "a", policy)?);
    let pre = -(1i64 - q.square()) * (1i64 - &a) / ((1i64 - &a / &q) * (1i64 - &a * &q));
    Ok(pre * rhs_of("K2", p, policy)?)
}

fn variant2(p: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
    let (q, a, b) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
    );
    let e1 = (&a + &b) / (&q + &b);
    let seq_a = SequenceSpec::new(
        (1i64 - &q) / (&q - &a),
        frac(-b.clone(), std::slice::from_ref(&e1), &[&e1 * &q]),
        q.clone(),
        0,
    );
    Ok(Setup {
        pair: AbelPair::new(seq_a, kummer_b(&q, &a, &b, 2)),
        coefficients: None,
    })
}

fn variant2_claim(p: &Point, _: &Setup, policy: &PrecisionPolicy) -> Result<Scalar> {
    let (q, a, b) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
    );
    let e1 = (&a + &b) / (&q + &b);
    let e2 = (&a + &b) * &q / (1i64 + &b);
    let pre = -(1i64 - &q) * (1i64 + &b) * (1i64 - &e2 / &q)
        / ((&q + &b) * (1i64 - &e1) * (1i64 - &e1 * &q));
    Ok(pre * rhs_of("K3", p, policy)?)
}

fn variant3(p: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
    let (q, a, b) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
    );
    let ab = &a + &b;
    let g1 = (&q + &b) * &a / (&ab * &q);
    let a0 = (1i64 - &q) / (&ab * (1i64 - &g1)) * -(&b / &q);
    let seq_a = SequenceSpec::new(
        a0,
        frac(-(&q / &b), std::slice::from_ref(&g1), &[&g1 * &q]),
        q.clone(),
        0,
    );
    Ok(Setup {
        pair: AbelPair::new(seq_a, kummer_b(&q, &a, &b, 0)),
        coefficients: None,
    })
}

fn variant3_claim(p: &Point, _: &Setup, policy: &PrecisionPolicy) -> Result<Scalar> {
    let (q, a, b) = (
        get(p, "q", policy)?,
        get(p, "a", policy)?,
        get(p, "b", policy)?,
    );
    let ab = &a + &b;
    let g1 = (&q + &b) * &a / (&ab * &q);
    let g2 = (1i64 + &b) * &a * &q / &ab;
    let pre =
        (1i64 - &q) * (&q + &b) * (1i64 - &g2 / &q) / (&q * &ab * (1i64 - &g1) * (1i64 - &g1 * &q));
    Ok(pre * rhs_of("K4", p, policy)?)
}

// The Cantarini analogue in base Q = q²: B_n = (-1)^n [q,q,q; Q,Q,Q; Q]_n.

fn cantarini_b_ratio(q: &Scalar) -> RationalFn {
    let q2 = q.square();
    frac(
        -Scalar::one(q.precision()),
        &[q.clone(), q.clone(), q.clone()],
        &[q2.clone(), q2.clone(), q2],
    )
}

fn cantarini(p: &Point, policy: &PrecisionPolicy) -> Result<Setup> {
    let q = get(p, "q", policy)?;
    let ctx = QContext::new(q.square(), *policy)?;
    let r1 = cantarini_b_ratio(&q);
    let (seq_a, coeffs) = reciprocal_bracket(&r1, &ctx)?;
    let seq_b = SequenceSpec::new(Scalar::one(q.precision()), r1, q.square(), 0);
    let pair = AbelPair::new(seq_a, seq_b).with_pairing(Grouping::EvenPartialSums);
    Ok(Setup {
        pair,
        coefficients: Some(coeffs),
    })
}

/// `4 Σ B_n - B_0 (A_0 - A_(-1))` less the right side of the identity, the
/// first sum taken over partial sums ending at even `n`.
fn cantarini_claim(p: &Point, setup: &Setup, policy: &PrecisionPolicy) -> Result<Scalar> {
    let q = get(p, "q", policy)?;
    let ctx = QContext::new(q.square(), *policy)?;
    let bits = q.precision();
    let base = Base::Bracket(BracketSeries::new(
        vec![q.clone(); 3],
        vec![q.square(); 3],
        -Scalar::one(bits),
        ctx,
    ));
    let sum_b = eval_weighted_series(
        &Weight::Unit,
        &base,
        policy,
        &SumOptions::grouped(Grouping::EvenPartialSums),
    )?;
    let a2 = &setup
        .coefficients
        .as_ref()
        .ok_or_else(|| Error::Domain("missing solver coefficients".into()))?
        .a2;
    let s0 = a2.recip() - (a2 - q.square().recip()).recip();
    Ok(sum_b.value * 4i64 - s0 - rhs_of("C2", p, policy)?)
}

/// Certification of one theorem at one point.
#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub theorem: &'static str,
    pub params: Point,
    pub coefficients: Option<RationalCoefficients>,
    pub certification: Certification,
}

impl CertifyReport {
    pub fn to_json(&self) -> Value {
        let c = &self.certification;
        let side = |s: &Option<crate::hyper::SeriesResult>| match s {
            Some(r) => json!({ "value": r.value.to_decimal_string(), "terms": r.terms_used }),
            None => Value::Null,
        };
        let dev = |d: f64| {
            if d.is_finite() {
                json!(format!("{d:.3e}"))
            } else {
                Value::Null
            }
        };
        let coeffs = self.coefficients.as_ref().map(|k| {
            json!({
                "a1": k.a1.to_decimal_string(),
                "a2": k.a2.to_decimal_string(),
                "t_star": k.t_star.to_decimal_string(),
            })
        });
        json!({
            "theorem": self.theorem,
            "params": self.params.to_json(),
            "lhs": side(&c.lhs),
            "rhs": side(&c.rhs),
            "claimed": c.claimed.to_decimal_string(),
            "dev_lhs_rhs": dev(c.dev_lhs_rhs),
            "dev_lhs_claimed": dev(c.dev_lhs_claimed),
            "dev_rhs_claimed": dev(c.dev_rhs_claimed),
            "coefficients": coeffs,
            "one_sided": c.one_sided,
            "pass": c.pass,
        })
    }
}

/// Certifies `theorem` at `point`. With `claim_factor` the claimed value is
/// scaled before comparison.
pub fn certify_at(
    theorem: &'static Theorem,
    point: &Point,
    policy: &PrecisionPolicy,
    tolerance: f64,
    claim_factor: Option<f64>,
) -> Result<CertifyReport> {
    find(theorem.identity)?.check(point)?;
    let setup = theorem.setup(point, policy)?;
    let claimed = |pol: &PrecisionPolicy| -> Result<Scalar> {
        let v = theorem.claimed(point, &setup, pol)?;
        Ok(match claim_factor {
            Some(f) => &v * &Scalar::from_f64(f, v.precision()),
            None => v,
        })
    };
    let certification = certify_transformation(&setup.pair, claimed, policy, tolerance)?;
    Ok(CertifyReport {
        theorem: theorem.id,
        params: point.clone(),
        coefficients: setup.coefficients.clone(),
        certification,
    })
}

/// Certifies `id` at points drawn from its identity's sampler, in parallel
/// and in sampling order. `opts.rhs_factor` perturbs the claimed value.
pub fn certify(id: &str, opts: &VerifyOptions) -> Result<Vec<(Point, Result<CertifyReport>)>> {
    let theorem = find_theorem(id)?;
    let record = find(theorem.identity)?;
    let points = sample_points(record, opts.seed, opts.samples)?;
    let policy = opts.policy_for(record)?;
    let tolerance = opts.tolerance_for(record);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        points
            .into_par_iter()
            .map(|p| {
                let r = certify_at(theorem, &p, &policy, tolerance, opts.rhs_factor);
                (p, r)
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests;
