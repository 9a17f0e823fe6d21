//! Dense polynomials and rational functions with [`Scalar`] coefficients.
//!
//! Every weight and term ratio in the catalog is rational in one variable,
//! either `t = q^n` for the basic series or `n` itself for the classical
//! ones, so one small type serves both.

use crate::mpreal::Scalar;

/// Polynomial `c_0 + c_1 t + ... + c_d t^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(coeffs: Vec<Scalar>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: Scalar) -> Self {
        Poly::new(vec![c])
    }

    pub fn one(bits: u32) -> Self {
        Poly::constant(Scalar::one(bits))
    }

    /// `c0 + c1 t`.
    pub fn linear(c0: Scalar, c1: Scalar) -> Self {
        Poly::new(vec![c0, c1])
    }

    /// Sum of monomials `coef * q^shift * t^power`, the literal shape in
    /// which the catalog's weight polynomials are written.
    pub fn from_monomials(terms: &[(i64, u32, i64)], q: &Scalar) -> Self {
        let bits = q.precision();
        let degree = terms.iter().map(|&(_, k, _)| k as usize).max().unwrap_or(0);
        let mut coeffs = vec![Scalar::zero(bits); degree + 1];
        for &(coef, power, shift) in terms {
            coeffs[power as usize] += q.powi(shift) * coef;
        }
        Poly::new(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(Scalar::is_zero) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(Scalar::zero(64));
        }
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn eval(&self, t: &Scalar) -> Scalar {
        let mut acc = self
            .coeffs
            .last()
            .cloned()
            .unwrap_or_else(|| Scalar::zero(64));
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * t + c;
        }
        acc
    }

    /// Sum of absolute values of the monomials at `t`; the natural scale
    /// against which a computed value is judged to be zero.
    pub fn magnitude(&self, t: &Scalar) -> Scalar {
        let at = t.abs();
        let mut acc = self
            .coeffs
            .last()
            .map(Scalar::abs)
            .unwrap_or_else(|| Scalar::zero(64));
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * &at + c.abs();
        }
        acc
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let bits = self.coeffs[0].precision().max(other.coeffs[0].precision());
        let mut out = vec![Scalar::zero(bits); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let bits = self.coeffs[0].precision().max(other.coeffs[0].precision());
        let out = (0..n)
            .map(|i| {
                let a = self
                    .coeffs
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| Scalar::zero(bits));
                match other.coeffs.get(i) {
                    Some(b) => a - b,
                    None => a,
                }
            })
            .collect();
        Poly::new(out)
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        Poly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::constant(Scalar::zero(self.coeffs[0].precision()));
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as i64)
                .collect(),
        )
    }

    /// Drops leading coefficients that are rounding residue relative to
    /// `scale[i]`, the magnitude of the quantities that cancelled to form
    /// coefficient `i`.
    pub fn trimmed_against(&self, scale: &[Scalar]) -> Poly {
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 {
            let i = coeffs.len() - 1;
            match scale.get(i) {
                Some(s) if is_negligible(&coeffs[i], s) => {
                    coeffs.pop();
                }
                _ => break,
            }
        }
        if coeffs.len() == 1 {
            if let Some(s) = scale.first() {
                if is_negligible(&coeffs[0], s) {
                    coeffs[0] = Scalar::zero(coeffs[0].precision());
                }
            }
        }
        Poly::new(coeffs)
    }

    /// Real roots in increasing order, each to about the working precision.
    ///
    /// Roots of the derivative split the line into monotone pieces; each
    /// piece with a sign change is bisected, and a critical point where the
    /// polynomial itself vanishes is kept as a multiple root.
    pub fn real_roots(&self) -> Vec<Scalar> {
        let d = self.degree();
        if d == 0 {
            return Vec::new();
        }
        let bits = self
            .coeffs
            .iter()
            .map(Scalar::precision)
            .max()
            .unwrap_or(64);
        if d == 1 {
            return vec![-(&self.coeffs[0] / &self.coeffs[1])];
        }
        let lead = self.coeffs[d].abs();
        let mut bound = Scalar::zero(bits);
        for c in &self.coeffs[..d] {
            bound = bound.max_of(&(c.abs() / &lead));
        }
        let bound = bound + 1i64;

        let critical = self.derivative().real_roots();
        let mut roots = Vec::new();
        let mut edges = vec![-bound.clone()];
        for c in critical {
            if c > -bound.clone() && c < bound {
                if is_negligible(&self.eval(&c), &self.magnitude(&c)) {
                    roots.push(c.clone());
                }
                edges.push(c);
            }
        }
        edges.push(bound);
        for w in edges.windows(2) {
            if let Some(r) = self.bisect(&w[0], &w[1], bits) {
                roots.push(r);
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        roots.dedup_by(|a, b| is_negligible(&(&*a - &*b), &a.abs().max_of(&Scalar::one(bits))));
        roots
    }

    fn bisect(&self, lo: &Scalar, hi: &Scalar, bits: u32) -> Option<Scalar> {
        let (mut lo, mut hi) = (lo.clone(), hi.clone());
        let flo = self.eval(&lo);
        let fhi = self.eval(&hi);
        let negligible = |x: &Scalar, f: &Scalar| is_negligible(f, &self.magnitude(x));
        if negligible(&lo, &flo)
            || negligible(&hi, &fhi)
            || flo.is_sign_negative() == fhi.is_sign_negative()
        {
            return None;
        }
        let lo_negative = flo.is_sign_negative();
        for _ in 0..(2 * bits + 64) {
            let mid = (&lo + &hi) / 2i64;
            if mid == lo || mid == hi {
                break;
            }
            let fm = self.eval(&mid);
            if fm.is_zero() {
                return Some(mid);
            }
            if fm.is_sign_negative() == lo_negative {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((lo + hi) / 2i64)
    }

    /// Product of the given polynomials.
    pub fn product<'a>(factors: impl IntoIterator<Item = &'a Poly>, bits: u32) -> Poly {
        factors
            .into_iter()
            .fold(Poly::one(bits), |acc, f| acc.mul(f))
    }
}

/// Rational function `num(t) / den(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Self {
        RationalFn { num, den }
    }

    pub fn constant(c: Scalar) -> Self {
        let bits = c.precision();
        RationalFn::new(Poly::constant(c), Poly::one(bits))
    }

    /// Evaluates at `t`, returning `None` when the denominator vanishes
    /// relative to the size of its monomials.
    pub fn eval(&self, t: &Scalar) -> Option<Scalar> {
        let d = self.den.eval(t);
        if is_negligible(&d, &self.den.magnitude(t)) {
            return None;
        }
        Some(self.num.eval(t) / d)
    }

    /// As [`RationalFn::eval`], with the pole test made at `bits`.
    pub(crate) fn eval_at(&self, t: &Scalar, bits: u32) -> Option<Scalar> {
        let d = self.den.eval(t);
        if is_negligible_at(&d, &self.den.magnitude(t), bits) {
            return None;
        }
        Some(self.num.eval(t) / d)
    }
}

/// True when `value` is zero up to rounding relative to `scale`.
pub(crate) fn is_negligible(value: &Scalar, scale: &Scalar) -> bool {
    is_negligible_at(value, scale, value.precision())
}

/// As [`is_negligible`], judged at `bits` rather than the value's own
/// precision. Inputs rounded at `bits` and then carried at a higher
/// precision still cancel only to about `2^-bits`.
pub(crate) fn is_negligible_at(value: &Scalar, scale: &Scalar, bits: u32) -> bool {
    if value.is_zero() {
        return true;
    }
    match (value.log2_magnitude(), scale.log2_magnitude()) {
        (Some(v), Some(s)) => v < s - bits as i32 + 16,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_direct() {
        let b = 128;
        let p = Poly::new(vec![
            Scalar::from_i64(2, b),
            Scalar::from_i64(-3, b),
            Scalar::from_i64(1, b),
        ]);
        assert_eq!(p.eval(&Scalar::from_i64(1, b)), 0i64);
        assert_eq!(p.eval(&Scalar::from_i64(5, b)), 12i64);
        assert_eq!(p.derivative().eval(&Scalar::from_i64(5, b)), 7i64);
    }

    #[test]
    fn monomials_collect_by_power() {
        let b = 128;
        let q = Scalar::from_ratio(1, 2, b);
        // 3 t^2 q + 4 q^0 - t^2 q^2  at q = 1/2 -> (3/2 - 1/4) t^2 + 4
        let p = Poly::from_monomials(&[(3, 2, 1), (4, 0, 0), (-1, 2, 2)], &q);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs()[2], 1.25f64);
        assert_eq!(p.coeffs()[1], 0i64);
    }

    #[test]
    fn real_roots_of_cubics() {
        let b = 256;
        // (t - 1)(t + 2)(t - 3) = t^3 - 2t^2 - 5t + 6
        let p = Poly::new(
            vec![6, -5, -2, 1]
                .into_iter()
                .map(|c| Scalar::from_i64(c, b))
                .collect(),
        );
        let roots = p.real_roots();
        assert_eq!(roots.len(), 3);
        for (r, want) in roots.iter().zip([-2i64, 1, 3]) {
            assert!(Scalar::rel_diff(r, &Scalar::from_i64(want, b), 0.0) < 1e-70);
        }
        // t^3 + t has the single real root 0; (t - 1)^2 (t + 1) has a double root.
        let p = Poly::new(
            vec![0, 1, 0, 1]
                .into_iter()
                .map(|c| Scalar::from_i64(c, b))
                .collect(),
        );
        assert_eq!(p.real_roots().len(), 1);
        let p = Poly::new(
            vec![1, -1, -1, 1]
                .into_iter()
                .map(|c| Scalar::from_i64(c, b))
                .collect(),
        );
        let roots = p.real_roots();
        assert_eq!(roots.len(), 2);
        assert!((roots[1].to_f64() - 1.0).abs() < 1e-30);
    }

    #[test]
    fn rational_fn_flags_poles() {
        let b = 128;
        let f = RationalFn::new(
            Poly::one(b),
            Poly::linear(Scalar::one(b), Scalar::from_i64(-1, b)),
        );
        assert!(f.eval(&Scalar::one(b)).is_none());
        assert_eq!(f.eval(&Scalar::from_i64(2, b)).unwrap(), -1i64);
    }
}
