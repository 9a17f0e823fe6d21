//! The alternating q-series with the cubed `[q, q, q; q^2, q^2, q^2; q^2]_n`
//! kernel and its weights, together with the exact expansion of those
//! weights at `q = 1 - h` that identifies the classical limit.
//!
//! A monomial `(c, k, s)` stands for `c q^(k n + s)`.

use rug::Rational;

use crate::error::{Error, Result};
use crate::hyper::{eval_weighted_series, Base, BracketSeries, Grouping, SumOptions, Weight};
use crate::mpreal::{PrecisionPolicy, Scalar};
use crate::poly::{Poly, RationalFn};
use crate::qcore::{qpoch_infinite, QContext};

pub type Monomial = (i64, u32, i64);

/// Numerator of the left-hand weight.
pub const RHO1: &[Monomial] = &[
    (-8, 2, 0),
    (-7, 2, 1),
    (-6, 2, 2),
    (-9, 2, 3),
    (-4, 2, 4),
    (-1, 2, 5),
    (2, 2, 6),
    (1, 2, 7),
    (4, 4, 1),
    (8, 4, 2),
    (4, 4, 3),
    (16, 0, 1),
];

/// Left-hand denominator `(q^2n + q^(2n+1) - 2q)(q^(2n+1) + q^(2n+2) - 2)`.
pub const DEN1: &[&[Monomial]] = &[
    &[(1, 2, 0), (1, 2, 1), (-2, 0, 1)],
    &[(1, 2, 1), (1, 2, 2), (-2, 0, 0)],
];

/// Numerator of the right-hand weight.
pub const RHO2: &[Monomial] = &[
    (-11, 2, 2),
    (2, 2, 3),
    (-2, 2, 5),
    (-1, 2, 6),
    (-1, 4, 3),
    (12, 4, 4),
    (1, 4, 5),
    (-1, 4, 6),
    (1, 4, 8),
    (-4, 6, 6),
    (1, 0, 4),
    (1, 0, 3),
    (-1, 0, 2),
    (-1, 0, 1),
    (4, 0, 0),
];

/// Right-hand denominator `(1 - q^(n+1))^3 (1 + q^(n+1))^3`.
pub const DEN2: &[&[Monomial]] = &[
    &[(1, 0, 0), (-1, 1, 1)],
    &[(1, 0, 0), (-1, 1, 1)],
    &[(1, 0, 0), (-1, 1, 1)],
    &[(1, 0, 0), (1, 1, 1)],
    &[(1, 0, 0), (1, 1, 1)],
    &[(1, 0, 0), (1, 1, 1)],
];

/// Expands a product of monomial sums, collecting like terms.
pub fn product(factors: &[&[Monomial]]) -> Vec<Monomial> {
    let mut acc: Vec<Monomial> = vec![(1, 0, 0)];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for &(c1, k1, s1) in &acc {
            for &(c2, k2, s2) in f.iter() {
                next.push((c1 * c2, k1 + k2, s1 + s2));
            }
        }
        acc = next;
    }
    let mut merged: Vec<Monomial> = Vec::new();
    for (c, k, s) in acc {
        match merged.iter_mut().find(|m| m.1 == k && m.2 == s) {
            Some(m) => m.0 += c,
            None => merged.push((c, k, s)),
        }
    }
    merged.retain(|m| m.0 != 0);
    merged.sort_by_key(|m| (m.1, m.2));
    merged
}

/// The monomials as a polynomial in `t = q^(2n)`; every `k` must be even.
pub fn t_poly(monos: &[Monomial], q: &Scalar) -> Result<Poly> {
    if monos.iter().any(|&(_, k, _)| k % 2 != 0) {
        return Err(Error::Domain("monomial is not a power of q^2n".into()));
    }
    let halved: Vec<Monomial> = monos.iter().map(|&(c, k, s)| (c, k / 2, s)).collect();
    Ok(Poly::from_monomials(&halved, q))
}

/// Exact value of the monomials at rational `q` and integer `n`.
pub fn eval_exact(monos: &[Monomial], q: &Rational, n: i64) -> Rational {
    monos.iter().fold(Rational::new(), |acc, &(c, k, s)| {
        let e = k as i64 * n + s;
        let base = if e >= 0 { q.clone() } else { q.clone().recip() };
        let p = (0..e.unsigned_abs()).fold(Rational::from(1), |acc, _| acc * &base);
        acc + p * c
    })
}

fn weight(num: &[Monomial], den: &[&[Monomial]], q: &Scalar) -> Result<Weight> {
    let q2 = q.square();
    Ok(Weight::QRational {
        f: RationalFn::new(t_poly(num, q)?, t_poly(&product(den), q)?),
        base: q2,
        alternating: true,
    })
}

fn kernel(q: &Scalar, policy: &PrecisionPolicy) -> Result<(QContext, Base)> {
    let ctx = QContext::new(q.square(), *policy)?;
    let b = ctx.q().clone();
    let base = Base::Bracket(BracketSeries::new(
        vec![q.clone(); 3],
        vec![b; 3],
        Scalar::one(q.precision()),
        ctx.clone(),
    ));
    Ok((ctx, base))
}

/// `Σ (-1)^n [q,q,q; q²,q²,q²; q²]_n ρ₁(n)/den₁(n)`, as the limit of partial
/// sums ending at even `n`.
pub fn lhs(q: &Scalar, policy: &PrecisionPolicy) -> Result<crate::hyper::SeriesResult> {
    let (_, base) = kernel(q, policy)?;
    eval_weighted_series(
        &weight(RHO1, DEN1, q)?,
        &base,
        policy,
        &SumOptions::grouped(Grouping::EvenPartialSums),
    )
}

/// The series part of the right side, summed like [`lhs`].
pub fn rhs_series(q: &Scalar, policy: &PrecisionPolicy) -> Result<crate::hyper::SeriesResult> {
    let (_, base) = kernel(q, policy)?;
    eval_weighted_series(
        &weight(RHO2, DEN2, q)?,
        &base,
        policy,
        &SumOptions::grouped(Grouping::EvenPartialSums),
    )
}

/// `(1-q)(1+q)² q/2 ((q;q²)_∞/(q²;q²)_∞)³ - (1+q)² q²`.
pub fn rhs_constant(q: &Scalar, policy: &PrecisionPolicy) -> Result<Scalar> {
    let (ctx, _) = kernel(q, policy)?;
    let ratio = qpoch_infinite(q, &ctx)? / qpoch_infinite(ctx.q(), &ctx)?;
    let one_plus = 1i64 + q;
    let first = (1i64 - q) * one_plus.square() * q / 2i64 * ratio.powi(3);
    Ok(first - one_plus.square() * q.square())
}

/// The full right side with its term count.
pub fn rhs(q: &Scalar, policy: &PrecisionPolicy) -> Result<(Scalar, usize, u32)> {
    let s = rhs_series(q, policy)?;
    Ok((
        rhs_constant(q, policy)? + &s.value,
        s.terms_used,
        s.escalations,
    ))
}

/// Polynomial in `n` with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct NPoly(pub Vec<Rational>);

impl NPoly {
    pub fn constant(c: Rational) -> Self {
        NPoly(vec![c]).trimmed()
    }

    /// `a + b n`.
    fn linear(a: Rational, b: Rational) -> Self {
        NPoly(vec![a, b]).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| *c == 0) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &NPoly) -> NPoly {
        let n = self.0.len().max(other.0.len());
        let c = (0..n)
            .map(|i| {
                let a = self.0.get(i).cloned().unwrap_or_default();
                a + other.0.get(i).cloned().unwrap_or_default()
            })
            .collect();
        NPoly(c).trimmed()
    }

    pub fn mul(&self, other: &NPoly) -> NPoly {
        if self.is_zero() || other.is_zero() {
            return NPoly(Vec::new());
        }
        let mut c = vec![Rational::new(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a.clone() * b;
            }
        }
        NPoly(c).trimmed()
    }

    pub fn scale(&self, s: &Rational) -> NPoly {
        NPoly(self.0.iter().map(|c| c.clone() * s).collect()).trimmed()
    }

    pub fn eval(&self, n: &Rational) -> Rational {
        self.0
            .iter()
            .rev()
            .fold(Rational::new(), |acc, c| acc * n + c)
    }

    fn leading(&self) -> Option<&Rational> {
        self.0.last()
    }
}

/// Coefficient of `h^j` in `c (1 - h)^(k n + s)`, a polynomial in `n`:
/// `c (-1)^j binom(k n + s, j)`.
fn monomial_order(&(c, k, s): &Monomial, j: u32) -> NPoly {
    let mut p = NPoly::constant(Rational::from(c));
    for i in 0..j as i64 {
        p = p.mul(&NPoly::linear(Rational::from(s - i), Rational::from(k)));
    }
    let mut fact = Rational::from(1);
    for i in 1..=j {
        fact *= i;
    }
    let sign = if j.is_multiple_of(2) { 1 } else { -1 };
    p.scale(&(Rational::from(sign) / fact))
}

/// Lowest nonvanishing order of a monomial sum at `q = 1 - h` and its
/// coefficient, a polynomial in `n`.
pub fn leading_order(monos: &[Monomial]) -> Result<(u32, NPoly)> {
    for j in 0..=16 {
        let p = monos
            .iter()
            .fold(NPoly(Vec::new()), |acc, m| acc.add(&monomial_order(m, j)));
        if !p.is_zero() {
            return Ok((j, p));
        }
    }
    Err(Error::Degenerate(
        "monomial sum vanishes to high order at q = 1".into(),
    ))
}

/// The constant `κ` with `num(n)/den(n) → κ P(n)/Q(n)` as `q → 1`, checked
/// to hold for every `n`.
pub fn limit_factor(
    num: &[Monomial],
    den: &[&[Monomial]],
    p: &NPoly,
    q: &NPoly,
) -> Result<Rational> {
    let (jn, rn) = leading_order(num)?;
    let (jd, rd) = leading_order(&product(den))?;
    if jn != jd {
        return Err(Error::Degenerate(format!(
            "weight behaves like h^{} at q = 1",
            jn as i64 - jd as i64
        )));
    }
    let lhs = rn.mul(q);
    let rhs = rd.mul(p);
    let kappa =
        lhs.leading().cloned().unwrap_or_default() / rhs.leading().cloned().unwrap_or_default();
    if lhs != rhs.scale(&kappa) {
        return Err(Error::Degenerate(
            "limit weight is not proportional to the classical weight".into(),
        ));
    }
    Ok(kappa)
}

fn npoly(coeffs: &[i64]) -> NPoly {
    NPoly(coeffs.iter().map(|&c| Rational::from(c)).collect()).trimmed()
}

/// `(4n+1)² / ((4n-1)(4n+3))`.
pub fn catalan_weight() -> (NPoly, NPoly) {
    (npoly(&[1, 8, 16]), npoly(&[-3, 8, 16]))
}

/// `(2n+1)(4n²+8n+5) / (n+1)³`.
pub fn companion_weight() -> (NPoly, NPoly) {
    (npoly(&[5, 18, 20, 8]), npoly(&[1, 3, 3, 1]))
}

/// Scalars relating the `q → 1` limits of both sides to the two classical
/// sums: the left side tends to `kappa_lhs · C` and the right side to
/// `constant + kappa_rhs · D`, where `C` and `D` are the sums with the
/// [`catalan_weight`] and [`companion_weight`].
#[derive(Debug, Clone, PartialEq)]
pub struct LimitScalars {
    pub kappa_lhs: Rational,
    pub kappa_rhs: Rational,
    pub constant: Rational,
}

pub fn limit_scalars() -> Result<LimitScalars> {
    let (p1, q1) = catalan_weight();
    let (p2, q2) = companion_weight();
    let kappa_lhs = limit_factor(RHO1, DEN1, &p1, &q1)?;
    let kappa_rhs = limit_factor(RHO2, DEN2, &p2, &q2)?;
    // The product term carries a factor 1 - q; only -(1+q)² q² survives.
    let constant = Rational::from(-4);
    Ok(LimitScalars {
        kappa_lhs,
        kappa_rhs,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(x: Rational, e: u32) -> Rational {
        (0..e).fold(Rational::from(1), |acc, _| acc * &x)
    }

    fn q_half() -> Rational {
        Rational::from((1, 2))
    }

    /// `ρ₁` typed out term by term at rational `q`.
    fn rho1_literal(q: &Rational, n: u32) -> Rational {
        let p = |e: u32| (0..e).fold(Rational::from(1), |acc, _| acc * q);
        let (a, b) = (2 * n, 4 * n);
        -8 * p(a) - 7 * p(a + 1) - 6 * p(a + 2) - 9 * p(a + 3) - 4 * p(a + 4) - p(a + 5)
            + 2 * p(a + 6)
            + p(a + 7)
            + 4 * p(b + 1)
            + 8 * p(b + 2)
            + 4 * p(b + 3)
            + 16 * q.clone()
    }

    fn rho2_literal(q: &Rational, n: u32) -> Rational {
        let p = |e: u32| (0..e).fold(Rational::from(1), |acc, _| acc * q);
        let (a, b, c) = (2 * n, 4 * n, 6 * n);
        -11 * p(a + 2) + 2 * p(a + 3) - 2 * p(a + 5) - p(a + 6) - p(b + 3)
            + 12 * p(b + 4)
            + p(b + 5)
            - p(b + 6)
            + p(b + 8)
            - 4 * p(c + 6)
            + p(4)
            + p(3)
            - p(2)
            - q.clone()
            + 4
    }

    #[test]
    fn weight_tables_match_literal_transcription() {
        let q = q_half();
        for n in 0..3u32 {
            assert_eq!(
                eval_exact(RHO1, &q, n as i64),
                rho1_literal(&q, n),
                "rho1 at n = {n}"
            );
            assert_eq!(
                eval_exact(RHO2, &q, n as i64),
                rho2_literal(&q, n),
                "rho2 at n = {n}"
            );
            let t = p2(q.clone(), 2 * n);
            let d1 = (t.clone() + t.clone() * &q - Rational::from(2) * &q)
                * (t.clone() * &q + t.clone() * &q * &q - Rational::from(2));
            assert_eq!(eval_exact(&product(DEN1), &q, n as i64), d1);
            let u = p2(q.clone(), n + 1);
            let d2 = p2((Rational::from(1) - &u) * (Rational::from(1) + &u), 3);
            assert_eq!(eval_exact(&product(DEN2), &q, n as i64), d2);
        }
    }

    #[test]
    fn t_polynomials_agree_with_monomials() {
        let q = Scalar::from_ratio(1, 3, 192);
        let poly = t_poly(&product(DEN2), &q).unwrap();
        for n in 0..4 {
            let t = q.powi(2 * n);
            let exact = eval_exact(&product(DEN2), &Rational::from((1, 3)), n);
            assert!(
                Scalar::rel_diff(&poly.eval(&t), &Scalar::from_rational(&exact, 192), 0.0) < 1e-50
            );
        }
        assert!(t_poly(&[(1, 1, 0)], &q).is_err());
    }

    #[test]
    fn limit_scalars_from_expansion() {
        let s = limit_scalars().unwrap();
        assert_eq!(s.kappa_lhs, 4);
        assert_eq!(s.kappa_rhs, Rational::from((1, 2)));
        assert_eq!(s.constant, -4);
    }

    #[test]
    fn expansion_orders() {
        // ρ₁ vanishes at q = 1 and so does each denominator factor.
        assert_eq!(leading_order(RHO1).unwrap().0, 2);
        assert_eq!(leading_order(&product(DEN1)).unwrap().0, 2);
        assert_eq!(leading_order(&product(DEN2)).unwrap().0, 3);
        // binom(2n, 1) with sign: c (1-h)^(2n) = c - 2cn h + ...
        assert_eq!(monomial_order(&(3, 2, 0), 1), npoly(&[0, -6]));
    }

    #[test]
    fn mismatched_weight_is_rejected() {
        let (p, q) = companion_weight();
        assert!(limit_factor(RHO1, DEN1, &p, &q).is_err());
    }

    #[test]
    fn rhs_constant_at_q_one_half() {
        let q = Scalar::from_ratio(1, 2, 192);
        let policy = PrecisionPolicy::new(192).with_target(1e-40).unwrap();
        let c = rhs_constant(&q, &policy).unwrap();
        let ctx = QContext::new(Scalar::from_ratio(1, 4, 192), policy).unwrap();
        let ratio = qpoch_infinite(&q, &ctx).unwrap() / qpoch_infinite(ctx.q(), &ctx).unwrap();
        let want = Scalar::from_ratio(9, 32, 192) * ratio.powi(3) - Scalar::from_ratio(9, 16, 192);
        assert!(Scalar::rel_diff(&c, &want, 0.0) < 1e-40);
    }
}
