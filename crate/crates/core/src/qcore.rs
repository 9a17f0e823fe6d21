//! q-shifted factorials, bracket ratios of them, and the q-bracket.

use crate::error::{Error, Result};
use crate::mpreal::{PrecisionPolicy, Scalar};
use crate::poly::is_negligible;

/// Base `q` together with the precision policy that governs every
/// evaluation made with it.
#[derive(Debug, Clone)]
pub struct QContext {
    q: Scalar,
    pub policy: PrecisionPolicy,
}

impl QContext {
    /// Requires `0 < q < 1`.
    pub fn new(q: Scalar, policy: PrecisionPolicy) -> Result<Self> {
        if !(q > 0i64 && q < 1i64) {
            return Err(Error::Domain(format!(
                "base q = {} outside (0, 1)",
                q.to_f64()
            )));
        }
        Ok(QContext { q, policy })
    }

    pub fn q(&self) -> &Scalar {
        &self.q
    }

    /// Same policy, different base (e.g. `q^2`).
    pub fn with_base(&self, q: Scalar) -> Result<Self> {
        QContext::new(q, self.policy)
    }

    pub fn with_policy(&self, policy: PrecisionPolicy) -> Self {
        QContext {
            q: self.q.clone(),
            policy,
        }
    }

    fn bits(&self) -> u32 {
        self.policy.working_bits.max(self.q.precision())
    }
}

/// `(a;q)_n = Π_{k<n} (1 - a q^k)`, built with the recurrence
/// `(a;q)_{k+1} = (a;q)_k (1 - a q^k)`.
pub fn qpoch_finite(a: &Scalar, ctx: &QContext, n: usize) -> Scalar {
    let bits = ctx.bits();
    let mut prod = Scalar::one(bits);
    let mut x = a.with_precision(bits.max(a.precision()));
    for _ in 0..n {
        prod *= 1i64 - &x;
        x *= ctx.q();
    }
    prod
}

/// Number of factors after which the tail of `(a;q)_∞` is below the
/// policy's target, or `None` when no such index exists within reach.
fn truncation_index(a: &Scalar, ctx: &QContext) -> Option<usize> {
    let target = ctx.policy.target_rel_error;
    let eps_tail = target / 4.0;
    let q = ctx.q().to_f64();
    let a_abs = a.abs().to_f64();
    if a_abs == 0.0 {
        return Some(0);
    }
    // Σ_{k≥N} |a|q^k / (1 - |a|q^k) <= x / ((1-q)(1-x)) with x = |a| q^N.
    let ln_q = q.ln();
    let mut n = if a_abs > eps_tail {
        ((eps_tail / a_abs).ln() / ln_q).ceil() as i64
    } else {
        0
    };
    n = n.max(0);
    loop {
        let x = a_abs * q.powi(n as i32);
        let bound = x / ((1.0 - q) * (1.0 - x));
        if x < eps_tail && x < 0.5 && bound < target / 2.0 {
            return Some(n as usize);
        }
        n += 1 + n / 64;
        if n > 200_000_000 {
            return None;
        }
    }
}

/// `(a;q)_∞` to the context's target relative error.
///
/// The product is truncated at the first `N` with `|a| q^N < ε/4` whose
/// geometric tail bound on `|log Π_{k≥N}(1 - a q^k)|` is below `ε/2`.
/// A factor that is exactly zero makes the result zero.
pub fn qpoch_infinite(a: &Scalar, ctx: &QContext) -> Result<Scalar> {
    let n = truncation_index(a, ctx).ok_or(Error::NotConverged { terms: 200_000_000 })?;
    let guard = 16 + usize::BITS - n.leading_zeros();
    let bits = ctx.bits() + guard;
    let mut prod = Scalar::one(bits);
    let mut x = a.with_precision(bits);
    for _ in 0..n {
        let factor = 1i64 - &x;
        if factor.is_zero() {
            return Ok(Scalar::zero(ctx.bits()));
        }
        prod *= factor;
        x *= ctx.q();
    }
    Ok(prod)
}

/// Length of a bracket ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Length {
    Finite(usize),
    Infinite,
}

/// `[a_1, ..., a_r ; b_1, ..., b_s ; q]_len`, the quotient of products of
/// q-shifted factorials.
#[derive(Debug, Clone)]
pub struct BracketRatio {
    pub numerators: Vec<Scalar>,
    pub denominators: Vec<Scalar>,
    pub length: Length,
}

impl BracketRatio {
    pub fn new(numerators: Vec<Scalar>, denominators: Vec<Scalar>, length: Length) -> Self {
        BracketRatio {
            numerators,
            denominators,
            length,
        }
    }

    pub fn infinite(numerators: Vec<Scalar>, denominators: Vec<Scalar>) -> Self {
        Self::new(numerators, denominators, Length::Infinite)
    }
}

/// Index `k` at which `1 - b q^k` vanishes, searching only while `|b q^k|`
/// can still reach one.
fn vanishing_index(b: &Scalar, ctx: &QContext, limit: Option<usize>) -> Option<usize> {
    let one = Scalar::one(ctx.bits());
    let mut x = b.clone();
    let mut k = 0usize;
    loop {
        if limit.is_some_and(|n| k >= n) {
            return None;
        }
        if x.abs() < 0.5f64 {
            return None;
        }
        let factor = 1i64 - &x;
        if is_negligible(&factor, &one.max_of(&x.abs())) {
            return Some(k);
        }
        x *= ctx.q();
        k += 1;
    }
}

/// Evaluates a bracket ratio, refusing lengths at which a denominator
/// factor vanishes.
pub fn bracket_ratio(spec: &BracketRatio, ctx: &QContext) -> Result<Scalar> {
    let limit = match spec.length {
        Length::Finite(n) => Some(n),
        Length::Infinite => None,
    };
    for (j, b) in spec.denominators.iter().enumerate() {
        if let Some(k) = vanishing_index(b, ctx, limit) {
            return Err(Error::SingularParameter {
                param: format!("denominator[{j}]"),
                index: k,
            });
        }
    }
    let bits = ctx.bits() + 16;
    let mut value = Scalar::one(bits);
    for a in &spec.numerators {
        value *= match spec.length {
            Length::Finite(n) => qpoch_finite(a, ctx, n),
            Length::Infinite => qpoch_infinite(a, ctx)?,
        };
    }
    for b in &spec.denominators {
        value /= match spec.length {
            Length::Finite(n) => qpoch_finite(b, ctx, n),
            Length::Infinite => qpoch_infinite(b, ctx)?,
        };
    }
    Ok(value)
}

/// `[n]_q = (1 - q^n) / (1 - q)`.
pub fn qbracket(n: usize, ctx: &QContext) -> Scalar {
    let one = Scalar::one(ctx.bits());
    (&one - ctx.q().powi(n as i64)) / (one - ctx.q())
}

/// Exact rational counterparts of the finite q-products, used as oracles.
pub mod exact {
    use rug::Rational;

    use crate::error::{Error, Result};

    pub fn qpoch_finite(a: &Rational, q: &Rational, n: usize) -> Rational {
        let mut prod = Rational::from(1);
        let mut x = a.clone();
        for _ in 0..n {
            prod *= Rational::from(1) - &x;
            x *= q;
        }
        prod
    }

    pub fn bracket_ratio(
        numerators: &[Rational],
        denominators: &[Rational],
        q: &Rational,
        n: usize,
    ) -> Result<Rational> {
        let mut value = Rational::from(1);
        for a in numerators {
            value *= qpoch_finite(a, q, n);
        }
        for (j, b) in denominators.iter().enumerate() {
            let d = qpoch_finite(b, q, n);
            if d == 0 {
                let mut x = b.clone();
                let index = (0..n)
                    .find(|_| {
                        let hit = x == 1;
                        x *= q;
                        hit
                    })
                    .unwrap_or(0);
                return Err(Error::SingularParameter {
                    param: format!("denominator[{j}]"),
                    index,
                });
            }
            value /= d;
        }
        Ok(value)
    }

    pub fn qbracket(n: usize, q: &Rational) -> Rational {
        let mut qn = Rational::from(1);
        for _ in 0..n {
            qn *= q;
        }
        (Rational::from(1) - qn) / (Rational::from(1) - q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn ctx(q: Scalar) -> QContext {
        QContext::new(q, PrecisionPolicy::new(192).with_target(1e-40).unwrap()).unwrap()
    }

    #[test]
    fn finite_examples() {
        let c = ctx(Scalar::from_ratio(1, 2, 192));
        let a = Scalar::from_f64(0.3, 192);
        assert_eq!(qpoch_finite(&a, &c, 0), 1i64);
        assert_eq!(qpoch_finite(c.q(), &c, 2), Scalar::from_ratio(3, 8, 192));
        assert_eq!(qpoch_finite(&Scalar::zero(192), &c, 9), 1i64);
    }

    #[test]
    fn euler_function_at_one_half_matches_rational_product() {
        let c = ctx(Scalar::from_ratio(1, 2, 192));
        let v = qpoch_infinite(c.q(), &c).unwrap();
        let half = Rational::from((1, 2));
        // 200 factors leave a relative tail below 2^-199.
        let oracle = exact::qpoch_finite(&half, &half, 200);
        let oracle = Scalar::from_rational(&oracle, 256);
        assert!(Scalar::rel_diff(&v, &oracle, 0.0) < 1e-40);
        assert!((v.to_f64() - 0.288_788_095_086_602_4).abs() < 1e-15);
        assert_eq!(qpoch_infinite(&Scalar::zero(192), &c).unwrap(), 1i64);
    }

    #[test]
    fn infinite_product_splits() {
        let c = ctx(Scalar::from_f64(0.7, 192));
        let a = Scalar::from_f64(-1.3, 192);
        let whole = qpoch_infinite(&a, &c).unwrap();
        for n in [1usize, 5, 17] {
            let shifted = &a * c.q().powi(n as i64);
            let split = qpoch_finite(&a, &c, n) * qpoch_infinite(&shifted, &c).unwrap();
            assert!(Scalar::rel_diff(&whole, &split, 0.0) < 1e-39, "n = {n}");
        }
    }

    #[test]
    fn infinite_product_hits_exact_zero() {
        let c = ctx(Scalar::from_ratio(1, 2, 192));
        // a = q^{-2} = 4: the factor 1 - 4 q^2 is exactly zero.
        let v = qpoch_infinite(&Scalar::from_i64(4, 192), &c).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn bracket_ratio_examples() {
        let c = ctx(Scalar::from_ratio(1, 2, 192));
        let a = Scalar::from_f64(0.9, 192);
        let empty = BracketRatio::new(vec![a], vec![], Length::Finite(0));
        assert_eq!(bracket_ratio(&empty, &c).unwrap(), 1i64);
        let same = BracketRatio::new(vec![c.q().clone()], vec![c.q().clone()], Length::Finite(12));
        assert_eq!(bracket_ratio(&same, &c).unwrap(), 1i64);

        // λ = q^2 (1-q)/(1-q^2) = 1/6 at q = 1/2, a = b = 1; λ q^{-a} = 1/3.
        let lam = Scalar::from_ratio(1, 6, 192);
        let spec = BracketRatio::infinite(vec![Scalar::from_ratio(1, 3, 192)], vec![lam]);
        let v = bracket_ratio(&spec, &c).unwrap();
        let half = Rational::from((1, 2));
        let oracle = exact::qpoch_finite(&Rational::from((1, 3)), &half, 220)
            / exact::qpoch_finite(&Rational::from((1, 6)), &half, 220);
        assert!(Scalar::rel_diff(&v, &Scalar::from_rational(&oracle, 256), 0.0) < 1e-40);
    }

    #[test]
    fn bracket_ratio_reports_vanishing_denominator() {
        let c = ctx(Scalar::from_ratio(1, 2, 192));
        // b = q^{-3} = 8 vanishes at index 3.
        let spec = BracketRatio::new(vec![], vec![Scalar::from_i64(8, 192)], Length::Finite(5));
        match bracket_ratio(&spec, &c) {
            Err(Error::SingularParameter { index, .. }) => assert_eq!(index, 3),
            other => panic!("expected singular parameter, got {other:?}"),
        }
        let short = BracketRatio::new(vec![], vec![Scalar::from_i64(8, 192)], Length::Finite(3));
        assert!(bracket_ratio(&short, &c).is_ok());
        let inf = BracketRatio::infinite(vec![], vec![Scalar::from_i64(8, 192)]);
        assert!(bracket_ratio(&inf, &c).is_err());
    }

    #[test]
    fn qbracket_examples() {
        let c = ctx(Scalar::from_ratio(1, 2, 192));
        assert_eq!(qbracket(0, &c), 0i64);
        assert_eq!(qbracket(1, &c), 1i64);
        assert_eq!(qbracket(3, &c), Scalar::from_ratio(7, 4, 192));
        assert_eq!(
            exact::qbracket(3, &Rational::from((1, 2))),
            Rational::from((7, 4))
        );
    }

    #[test]
    fn rejects_q_outside_unit_interval() {
        let p = PrecisionPolicy::new(128);
        assert!(QContext::new(Scalar::one(128), p).is_err());
        assert!(QContext::new(Scalar::from_f64(-0.5, 128), p).is_err());
    }
}
