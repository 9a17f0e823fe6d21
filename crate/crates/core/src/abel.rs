//! Summation by parts in the form
//!
//! `Σ_{n≥1} B_n (A_n - A_{n-1}) = lim A_m B_{m+1} - A_0 B_1 + Σ_{n≥1} A_n (B_n - B_{n+1})`,
//!
//! with both sequences given by an initial value and a term ratio rational
//! in `t = base^n`, plus the coefficient choice that makes the transformed
//! series collapse.

use crate::error::{Error, Result};
use crate::hyper::{Grouping, SeriesResult, MAX_TERMS};
use crate::mpreal::{escalate, PrecisionPolicy, Scalar};
use crate::poly::{is_negligible, Poly, RationalFn};
use crate::qcore::QContext;

/// `s_start = initial`, `s_{n+1} = s_n * ratio(base^n)`.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub initial: Scalar,
    pub ratio: RationalFn,
    pub base: Scalar,
    pub start_index: usize,
}

impl SequenceSpec {
    pub fn new(initial: Scalar, ratio: RationalFn, base: Scalar, start_index: usize) -> Self {
        SequenceSpec {
            initial,
            ratio,
            base,
            start_index,
        }
    }

    pub fn constant(value: Scalar, base: Scalar) -> Self {
        let bits = value.precision();
        SequenceSpec::new(value, RationalFn::constant(Scalar::one(bits)), base, 0)
    }

    /// `s_start, s_{start+1}, ...`, `count` values.
    pub fn values(&self, count: usize, bits: u32) -> Result<Vec<Scalar>> {
        let mut it = Walker::new(self, "s", bits, bits);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(it.value.clone());
            it.advance()?;
        }
        Ok(out)
    }
}

/// Incremental walk along a [`SequenceSpec`].
struct Walker<'a> {
    spec: &'a SequenceSpec,
    name: &'static str,
    value: Scalar,
    t: Scalar,
    base: Scalar,
    n: usize,
    check_bits: u32,
}

impl<'a> Walker<'a> {
    fn new(spec: &'a SequenceSpec, name: &'static str, bits: u32, check_bits: u32) -> Self {
        let base = spec.base.with_precision(bits);
        Walker {
            spec,
            name,
            value: spec.initial.with_precision(bits),
            t: base.powi(spec.start_index as i64),
            base,
            n: spec.start_index,
            check_bits,
        }
    }

    /// Positioned at index `n`, which must not precede the start index.
    fn at(
        spec: &'a SequenceSpec,
        name: &'static str,
        n: usize,
        bits: u32,
        check_bits: u32,
    ) -> Result<Self> {
        if n < spec.start_index {
            return Err(Error::Domain(format!(
                "sequence {name} starts at index {}",
                spec.start_index
            )));
        }
        let mut w = Walker::new(spec, name, bits, check_bits);
        while w.n < n {
            w.advance()?;
        }
        Ok(w)
    }

    fn advance(&mut self) -> Result<()> {
        let r = self
            .spec
            .ratio
            .eval_at(&self.t, self.check_bits)
            .ok_or_else(|| Error::SingularParameter {
                param: self.name.into(),
                index: self.n,
            })?;
        self.value *= r;
        self.t *= &self.base;
        self.n += 1;
        Ok(())
    }
}

/// The two sequences of a summation by parts, and the partial sums whose
/// limit defines both series.
#[derive(Debug, Clone)]
pub struct AbelPair {
    pub a: SequenceSpec,
    pub b: SequenceSpec,
    pub pairing: Grouping,
}

impl AbelPair {
    pub fn new(a: SequenceSpec, b: SequenceSpec) -> Self {
        AbelPair {
            a,
            b,
            pairing: Grouping::Single,
        }
    }

    pub fn with_pairing(mut self, pairing: Grouping) -> Self {
        self.pairing = pairing;
        self
    }
}

/// Runs a summand stream over `n ≥ 1`. Under even pairing a zero term for
/// `n = 0` is prepended so that groups end at even `n`.
fn sum_from_one(
    pairing: Grouping,
    target: f64,
    bits: u32,
    mut term: impl FnMut() -> Result<Scalar>,
) -> Result<SeriesResult> {
    let mut pad = pairing == Grouping::EvenPartialSums;
    let mut source = || -> Result<Option<Scalar>> {
        if pad {
            pad = false;
            return Ok(Some(Scalar::zero(bits)));
        }
        term().map(Some)
    };
    let mut r = crate::hyper::sum_stream(&mut source, pairing, target, MAX_TERMS, bits)?;
    if pairing == Grouping::EvenPartialSums {
        r.terms_used = r.terms_used.saturating_sub(1);
    }
    Ok(r)
}

fn lhs_once(pair: &AbelPair, target: f64, bits: u32, check: u32) -> Result<SeriesResult> {
    let mut a = Walker::at(&pair.a, "A", 0, bits, check)?;
    let mut b = Walker::at(&pair.b, "B", 1, bits, check)?;
    let mut prev = a.value.clone();
    a.advance()?;
    sum_from_one(pair.pairing, target, bits, || {
        let term = &b.value * &(&a.value - &prev);
        prev = a.value.clone();
        a.advance()?;
        b.advance()?;
        Ok(term)
    })
}

/// `Σ_{n≥1} B_n (A_n - A_{n-1})`.
pub fn abel_lhs(pair: &AbelPair, policy: &PrecisionPolicy) -> Result<SeriesResult> {
    let (mut r, steps) = escalate(
        policy,
        |bits| {
            lhs_once(
                pair,
                policy.target_rel_error,
                bits + 32,
                policy.working_bits,
            )
        },
        |r| &r.value,
    )?;
    r.escalations = steps;
    Ok(r)
}

/// `lim A_m B_{m+1}`, from the products at `m, 2m, 4m, ...` starting past
/// the summation horizon: zero once two consecutive products are below
/// `threshold`, otherwise the later product once two agree to `target`.
fn boundary_limit(
    pair: &AbelPair,
    horizon: usize,
    threshold: &Scalar,
    target: f64,
    bits: u32,
    check: u32,
) -> Result<Scalar> {
    let mut m = 2 * horizon.max(32);
    if m % 2 == 1 {
        m += 1;
    }
    let mut a = Walker::at(&pair.a, "A", m, bits, check)?;
    let mut b = Walker::at(&pair.b, "B", m + 1, bits, check)?;
    let mut previous = &a.value * &b.value;
    let eps = Scalar::from_f64(target, bits);
    while 2 * m <= MAX_TERMS {
        while a.n < 2 * m {
            a.advance()?;
            b.advance()?;
        }
        let current = &a.value * &b.value;
        if previous.abs() <= *threshold && current.abs() <= *threshold {
            return Ok(Scalar::zero(bits));
        }
        let gap = (&previous - &current).abs();
        if gap <= threshold.max_of(&(current.abs() * &eps)) {
            return Ok(current);
        }
        previous = current;
        m *= 2;
    }
    Err(Error::LimitDivergence(format!(
        "A_m B_(m+1) still moving at m = {m} (last value {})",
        previous.to_short_string(8)
    )))
}

fn rhs_once(pair: &AbelPair, target: f64, bits: u32, check: u32) -> Result<SeriesResult> {
    let a0 = Walker::at(&pair.a, "A", 0, bits, check)?.value;
    let b1 = Walker::at(&pair.b, "B", 1, bits, check)?.value;
    let mut a = Walker::at(&pair.a, "A", 1, bits, check)?;
    let mut b = Walker::at(&pair.b, "B", 1, bits, check)?;
    let series = sum_from_one(pair.pairing, target, bits, || {
        let current = b.value.clone();
        b.advance()?;
        let term = &a.value * &(&current - &b.value);
        a.advance()?;
        Ok(term)
    })?;

    let corner = &a0 * &b1;
    let scale = series.value.abs().max_of(&corner.abs());
    let threshold = &scale * &Scalar::from_f64(target, bits);
    let limit = boundary_limit(pair, series.terms_used, &threshold, target, bits, check)?;
    Ok(SeriesResult {
        value: limit - corner + &series.value,
        ..series
    })
}

/// `lim A_m B_{m+1} - A_0 B_1 + Σ_{n≥1} A_n (B_n - B_{n+1})`, the boundary
/// limit confirmed by its values at `m` and `2m` past the summation horizon.
pub fn abel_rhs(pair: &AbelPair, policy: &PrecisionPolicy) -> Result<SeriesResult> {
    let (mut r, steps) = escalate(
        policy,
        |bits| {
            rhs_once(
                pair,
                policy.target_rel_error,
                bits + 32,
                policy.working_bits,
            )
        },
        |r| &r.value,
    )?;
    r.escalations = steps;
    Ok(r)
}

/// Coefficients of `r_2 = 1/(a_1 [n]_q + a_2)`, or of the second form
/// `(a_3 [n]_q + a_4)/(a_1 [n]_q + a_2)`, chosen so the residue of
/// `r_2 (1 - r_1)` at the pole of `r_2` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalCoefficients {
    pub a1: Scalar,
    pub a2: Scalar,
    pub a3: Option<Scalar>,
    pub a4: Option<Scalar>,
    /// The root of `r_1(t) = 1` the pole was placed on.
    pub t_star: Scalar,
}

/// `N - D` for `r_1 = N/D`, with cancelled leading coefficients removed.
fn crossing_poly(r1: &RationalFn) -> Poly {
    let diff = r1.num.sub(&r1.den);
    let n = diff.coeffs().len();
    let scale: Vec<Scalar> = (0..n)
        .map(|i| {
            let a = r1.num.coeffs().get(i).map(Scalar::abs);
            let b = r1.den.coeffs().get(i).map(Scalar::abs);
            match (a, b) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => Scalar::zero(64),
            }
        })
        .collect();
    diff.trimmed_against(&scale)
}

/// Whether `t = q^n` for some integer `n ≥ 0`.
fn is_power_of(t: &Scalar, q: &Scalar) -> bool {
    if !(*t > 0i64 && *t <= 1i64) {
        return false;
    }
    let n = (t.ln().map(|l| l.to_f64()).unwrap_or(f64::NAN)
        / q.ln().map(|l| l.to_f64()).unwrap_or(f64::NAN))
    .round();
    if !n.is_finite() || n < 0.0 {
        return false;
    }
    let qn = q.powi(n as i64);
    is_negligible(&(&qn - t), &Scalar::one(t.precision()))
}

/// Solves `r_1(t*) = 1` and sets `a_2 = a_1 (t* - 1)/(1 - q)`, which places
/// the pole of `r_2` at `t*`. Roots where `r_1` itself has a pole, or where
/// the denominator `a_1 [n]_q + a_2` would vanish at an integer `n ≥ 0`, are
/// skipped; the smallest remaining root is used.
pub fn solve_vanishing_coefficient(
    r1: &RationalFn,
    ctx: &QContext,
    a1: &Scalar,
) -> Result<RationalCoefficients> {
    if a1.is_zero() {
        return Err(Error::Domain("a1 must be nonzero".into()));
    }
    let p = crossing_poly(r1);
    if p.is_zero() {
        return Err(Error::Degenerate("r1(t) is identically 1".into()));
    }
    let q = ctx.q();
    let t_star = p
        .real_roots()
        .into_iter()
        .find(|t| {
            let d = r1.den.eval(t);
            !is_negligible(&d, &r1.den.magnitude(t)) && !is_power_of(t, q)
        })
        .ok_or_else(|| Error::NoSolution("r1(t) = 1 has no admissible real root".into()))?;
    let a2 = a1 * &(&t_star - 1i64) / (1i64 - q);
    Ok(RationalCoefficients {
        a1: a1.clone(),
        a2,
        a3: None,
        a4: None,
        t_star,
    })
}

/// Second form of `r_2`: `a_3` and `a_4` do not enter the residue condition
/// and are carried through unchanged.
pub fn solve_vanishing_coefficient_general(
    r1: &RationalFn,
    ctx: &QContext,
    a1: &Scalar,
    a3: Scalar,
    a4: Scalar,
) -> Result<RationalCoefficients> {
    let mut c = solve_vanishing_coefficient(r1, ctx, a1)?;
    c.a3 = Some(a3);
    c.a4 = Some(a4);
    Ok(c)
}

/// Three-way comparison of a summation by parts against a claimed value.
#[derive(Debug, Clone)]
pub struct Certification {
    pub lhs: Option<SeriesResult>,
    pub rhs: Option<SeriesResult>,
    pub claimed: Scalar,
    pub dev_lhs_rhs: f64,
    pub dev_lhs_claimed: f64,
    pub dev_rhs_claimed: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Set when only one of the two series could be summed.
    pub one_sided: Option<String>,
}

/// Evaluates both sides of the pair and the claimed closed form, passing
/// iff all three agree to `tolerance`.
pub fn certify_transformation(
    pair: &AbelPair,
    claimed: impl FnOnce(&PrecisionPolicy) -> Result<Scalar>,
    policy: &PrecisionPolicy,
    tolerance: f64,
) -> Result<Certification> {
    let lhs = abel_lhs(pair, policy);
    let rhs = abel_rhs(pair, policy);
    let claimed = claimed(policy)?;
    let floor = 10f64.powf(-(policy.working_bits as f64) / 3.0);
    let dev = |a: &Scalar, b: &Scalar| Scalar::rel_diff(a, b, floor);
    match (lhs, rhs) {
        (Ok(l), Ok(r)) => {
            let dev_lhs_rhs = dev(&l.value, &r.value);
            let dev_lhs_claimed = dev(&l.value, &claimed);
            let dev_rhs_claimed = dev(&r.value, &claimed);
            let pass = dev_lhs_rhs <= tolerance
                && dev_lhs_claimed <= tolerance
                && dev_rhs_claimed <= tolerance;
            Ok(Certification {
                lhs: Some(l),
                rhs: Some(r),
                claimed,
                dev_lhs_rhs,
                dev_lhs_claimed,
                dev_rhs_claimed,
                tolerance,
                pass,
                one_sided: None,
            })
        }
        (Ok(l), Err(e)) if e.is_numerical() => {
            let d = dev(&l.value, &claimed);
            Ok(one_sided(
                Some(l),
                None,
                claimed,
                d,
                tolerance,
                format!("right side failed: {e}"),
            ))
        }
        (Err(e), Ok(r)) if e.is_numerical() => {
            let d = dev(&r.value, &claimed);
            Ok(one_sided(
                None,
                Some(r),
                claimed,
                d,
                tolerance,
                format!("left side failed: {e}"),
            ))
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

fn one_sided(
    lhs: Option<SeriesResult>,
    rhs: Option<SeriesResult>,
    claimed: Scalar,
    dev: f64,
    tolerance: f64,
    why: String,
) -> Certification {
    let (dev_lhs_claimed, dev_rhs_claimed) = if lhs.is_some() {
        (dev, f64::NAN)
    } else {
        (f64::NAN, dev)
    };
    Certification {
        lhs,
        rhs,
        claimed,
        dev_lhs_rhs: f64::NAN,
        dev_lhs_claimed,
        dev_rhs_claimed,
        tolerance,
        pass: false,
        one_sided: Some(why),
    }
}

/// Exact rational counterpart of [`solve_vanishing_coefficient`].
pub mod exact {
    use rug::{Float, Rational};

    use crate::error::{Error, Result};
    use crate::mpreal::Scalar;
    use crate::poly::Poly;

    /// Coefficients are listed from the constant term up.
    pub fn eval_poly(coeffs: &[Rational], t: &Rational) -> Rational {
        coeffs
            .iter()
            .rev()
            .fold(Rational::new(), |acc, c| acc * t + c)
    }

    /// Rational roots `t*` of `N(t) = D(t)`, found by refining floating
    /// roots into continued-fraction convergents and keeping those that
    /// satisfy the equation exactly.
    pub fn rational_crossings(num: &[Rational], den: &[Rational]) -> Result<Vec<Rational>> {
        let n = num.len().max(den.len());
        let mut diff: Vec<Rational> = (0..n)
            .map(|i| {
                num.get(i).cloned().unwrap_or_default() - den.get(i).cloned().unwrap_or_default()
            })
            .collect();
        while diff.last().is_some_and(|c| *c == 0) {
            diff.pop();
        }
        if diff.is_empty() {
            return Err(Error::Degenerate("r1(t) is identically 1".into()));
        }
        if diff.len() == 1 {
            return Ok(Vec::new());
        }
        if diff.len() == 2 {
            return Ok(vec![-(diff[0].clone() / &diff[1])]);
        }
        let bits = 1024;
        let poly = Poly::new(
            diff.iter()
                .map(|c| Scalar::from_rational(c, bits))
                .collect(),
        );
        let mut out = Vec::new();
        for root in poly.real_roots() {
            if let Some(r) = recover(root.as_float(), &diff) {
                out.push(r);
            }
        }
        Ok(out)
    }

    fn recover(x: &Float, diff: &[Rational]) -> Option<Rational> {
        let target = x.to_rational()?;
        // Convergents h_k / k_k of the continued fraction of `target`.
        let (mut h0, mut h1) = (rug::Integer::from(0), rug::Integer::from(1));
        let (mut k0, mut k1) = (rug::Integer::from(1), rug::Integer::from(0));
        let mut rest = target;
        for _ in 0..256 {
            let a = rest.clone().floor().into_numer_denom().0;
            let h2 = a.clone() * &h1 + &h0;
            let k2 = a.clone() * &k1 + &k0;
            let candidate = Rational::from((h2.clone(), k2.clone()));
            if eval_poly(diff, &candidate) == 0 {
                return Some(candidate);
            }
            h0 = std::mem::replace(&mut h1, h2);
            k0 = std::mem::replace(&mut k1, k2);
            let frac = rest.clone() - Rational::from(a);
            if frac == 0 {
                return None;
            }
            rest = frac.recip();
        }
        None
    }

    /// `(t*, a_2)` with `a_2 = a_1 (t* - 1)/(1 - q)` for each rational
    /// crossing at which `D(t*) ≠ 0`.
    pub fn solve_vanishing_coefficient(
        num: &[Rational],
        den: &[Rational],
        q: &Rational,
        a1: &Rational,
    ) -> Result<(Rational, Rational)> {
        let t = rational_crossings(num, den)?
            .into_iter()
            .find(|t| eval_poly(den, t) != 0)
            .ok_or_else(|| Error::NoSolution("r1(t) = 1 has no rational root".into()))?;
        let a2 = a1.clone() * (t.clone() - 1u32) / (Rational::from(1) - q);
        Ok((t, a2))
    }
}

#[cfg(test)]
mod tests;
