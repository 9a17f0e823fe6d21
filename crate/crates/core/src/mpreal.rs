//! Multiprecision real scalars and the special functions the identity
//! catalog needs.
//!
//! [`Scalar`] is a thin wrapper over an MPFR float. Binary operations run at
//! the larger of the two operand precisions, so mixing a high-precision
//! accumulator with lower-precision parameters never silently truncates the
//! accumulator. The Gamma function is computed with Spouge's approximation,
//! whose a-priori error bound drives the choice of term count.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};

/// Smallest precision a [`Scalar`] may carry.
pub const MIN_BITS: u32 = 64;

/// Real number with an explicit binary working precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Scalar(Float);

fn clamp_bits(bits: u32) -> u32 {
    bits.max(MIN_BITS)
}

impl Scalar {
    pub fn from_float(f: Float) -> Self {
        if f.prec() < MIN_BITS {
            Scalar(Float::with_val(MIN_BITS, f))
        } else {
            Scalar(f)
        }
    }

    pub fn zero(bits: u32) -> Self {
        Scalar(Float::new(clamp_bits(bits)))
    }

    pub fn one(bits: u32) -> Self {
        Self::from_i64(1, bits)
    }

    pub fn from_i64(v: i64, bits: u32) -> Self {
        Scalar(Float::with_val(clamp_bits(bits), v))
    }

    pub fn from_f64(v: f64, bits: u32) -> Self {
        Scalar(Float::with_val(clamp_bits(bits), v))
    }

    pub fn from_ratio(num: i64, den: i64, bits: u32) -> Self {
        Scalar(Float::with_val(
            clamp_bits(bits),
            Rational::from((num, den)),
        ))
    }

    pub fn from_rational(r: &Rational, bits: u32) -> Self {
        Scalar(Float::with_val(clamp_bits(bits), r))
    }

    /// Parses a decimal literal (`"0.125"`, `"1e-3"`, `"-7"`) or a fraction
    /// (`"1/3"`).
    pub fn parse(text: &str, bits: u32) -> Result<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let r = parse_rational(&format!("{}/{}", n.trim(), d.trim()))?;
            return Ok(Self::from_rational(&r, bits));
        }
        let parsed = Float::parse(text).map_err(|e| Error::Parse(format!("`{text}`: {e}")))?;
        Ok(Scalar(Float::with_val(clamp_bits(bits), parsed)))
    }

    pub fn precision(&self) -> u32 {
        self.0.prec()
    }

    pub fn with_precision(&self, bits: u32) -> Self {
        Scalar(Float::with_val(clamp_bits(bits), &self.0))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Scalar(self.0.clone().abs())
    }

    pub fn recip(&self) -> Self {
        Scalar(self.0.clone().recip())
    }

    pub fn square(&self) -> Self {
        Scalar(self.0.clone().square())
    }

    pub fn exp(&self) -> Self {
        Scalar(self.0.clone().exp())
    }

    pub fn ln(&self) -> Result<Self> {
        if self.0 <= 0 {
            return Err(Error::Domain(format!(
                "ln of non-positive value {}",
                self.to_f64()
            )));
        }
        Ok(Scalar(self.0.clone().ln()))
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.0 < 0 {
            return Err(Error::Domain(format!(
                "sqrt of negative value {}",
                self.to_f64()
            )));
        }
        Ok(Scalar(self.0.clone().sqrt()))
    }

    pub fn powi(&self, n: i64) -> Self {
        Scalar(self.0.clone().pow(n))
    }

    /// Floor of log2 |x|, or `None` for zero.
    pub fn log2_magnitude(&self) -> Option<i32> {
        self.0.get_exp().map(|e| e - 1)
    }

    /// log2 |x| as a float, `-inf` for zero and `+inf` for non-finite values.
    pub fn log2_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        if !self.0.is_finite() {
            return f64::INFINITY;
        }
        let (m, e) = self.0.to_f64_exp();
        m.abs().log2() + e as f64
    }

    /// Relative distance `|a - b| / max(|a|, |b|, floor)`.
    pub fn rel_diff(a: &Scalar, b: &Scalar, floor: f64) -> f64 {
        let bits = a.precision().max(b.precision());
        let diff = (a - b).abs();
        let mut scale = a.abs().max_of(&b.abs());
        let floor = Scalar::from_f64(floor, bits);
        if scale < floor {
            scale = floor;
        }
        if scale.is_zero() {
            return if diff.is_zero() { 0.0 } else { f64::INFINITY };
        }
        (diff / scale).to_f64()
    }

    pub fn max_of(&self, other: &Scalar) -> Scalar {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Decimal rendering carrying every significant digit of the binary
    /// precision, always in scientific notation.
    pub fn to_decimal_string(&self) -> String {
        let digits = decimal_digits(self.precision());
        format!("{:.*e}", digits.saturating_sub(1), self.0)
    }

    /// Short rendering for human-facing tables.
    pub fn to_short_string(&self, digits: usize) -> String {
        format!("{:.*e}", digits.saturating_sub(1), self.0)
    }
}

/// Number of decimal digits representable at `bits` of binary precision.
pub fn decimal_digits(bits: u32) -> usize {
    ((bits as f64) * std::f64::consts::LOG10_2).floor() as usize
}

/// Parses `p/q`, an integer, or a terminating decimal into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("`{text}` is not a rational literal"));
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = rug::Integer::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
        .map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = rug::Integer::from(10);
    let mut r = Rational::from(numer);
    if scale >= 0 {
        r *= Rational::from(ten.pow(scale as u32));
    } else {
        r /= Rational::from(ten.pow((-scale) as u32));
    }
    if negative {
        r = -r;
    }
    Ok(r)
}

/// Renders a rational exactly: as a terminating decimal when possible,
/// otherwise as `p/q`.
pub fn format_rational(r: &Rational) -> String {
    let mut den = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den.is_divisible_u(2) {
        den /= 2;
        twos += 1;
    }
    while den.is_divisible_u(5) {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r.clone() * Rational::from(rug::Integer::from(10).pow(places));
    let int = scaled.numer().clone();
    if places == 0 {
        return int.to_string();
    }
    let negative = int < 0;
    let mut digits = int.abs().to_string();
    while digits.len() <= places as usize {
        digits.insert(0, '0');
    }
    let split = digits.len() - places as usize;
    let mut out = format!("{}.{}", &digits[..split], &digits[split..]);
    while out.ends_with('0') {
        out.pop();
    }
    if out.ends_with('.') {
        out.pop();
    }
    if negative {
        out.insert(0, '-');
    }
    out
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*e}", p, self.0),
            None => write!(f, "{}", self.to_decimal_string()),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({:.20e}, {} bits)", self.0, self.precision())
    }
}

impl PartialEq<i64> for Scalar {
    fn eq(&self, other: &i64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<i64> for Scalar {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

impl PartialEq<f64> for Scalar {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for Scalar {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                let bits = self.0.prec().max(rhs.0.prec());
                Scalar(Float::with_val(bits, (&self.0).$method(&rhs.0)))
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<i64> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: i64) -> Scalar {
                let bits = self.0.prec();
                Scalar(Float::with_val(bits, (&self.0).$method(rhs)))
            }
        }
        impl $trait<i64> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: i64) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $assign_trait<&Scalar> for Scalar {
            fn $assign(&mut self, rhs: &Scalar) {
                if rhs.0.prec() > self.0.prec() {
                    self.0.set_prec(rhs.0.prec());
                }
                self.0.$assign(&rhs.0);
            }
        }
        impl $assign_trait<Scalar> for Scalar {
            fn $assign(&mut self, rhs: Scalar) {
                self.$assign(&rhs);
            }
        }
        impl $assign_trait<i64> for Scalar {
            fn $assign(&mut self, rhs: i64) {
                self.0.$assign(rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);
binop!(Div, div, DivAssign, div_assign);

impl Add<&Scalar> for i64 {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        rhs + self
    }
}

impl Sub<&Scalar> for i64 {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar(Float::with_val(rhs.0.prec(), self - &rhs.0))
    }
}

impl Mul<&Scalar> for i64 {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        rhs * self
    }
}

impl Div<&Scalar> for i64 {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        Scalar(Float::with_val(rhs.0.prec(), self / &rhs.0))
    }
}

macro_rules! int_lhs_owned {
    ($($trait:ident $method:ident),*) => {$(
        impl $trait<Scalar> for i64 {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    )*};
}

int_lhs_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0.clone())
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

/// Working precision, accuracy goal and escalation budget for one
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionPolicy {
    pub working_bits: u32,
    pub target_rel_error: f64,
    pub max_escalations: u32,
}

impl PrecisionPolicy {
    /// Policy at `bits` with the default goal of half the working precision.
    pub fn new(bits: u32) -> Self {
        let bits = clamp_bits(bits);
        PrecisionPolicy {
            working_bits: bits,
            target_rel_error: 2f64.powi(-(bits as i32) / 2),
            max_escalations: 3,
        }
    }

    pub fn with_target(mut self, target: f64) -> Result<Self> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::Domain(format!(
                "target relative error {target} outside (0, 1)"
            )));
        }
        self.target_rel_error = target;
        Ok(self)
    }

    pub fn with_max_escalations(mut self, n: u32) -> Self {
        self.max_escalations = n;
        self
    }

    /// Same goal at doubled working precision.
    pub fn doubled(&self) -> Self {
        PrecisionPolicy {
            working_bits: self.working_bits * 2,
            ..*self
        }
    }

    /// Precision at which derived parameters are formed.
    pub fn guarded_bits(&self) -> u32 {
        self.working_bits + 32
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy::new(192)
    }
}

/// Runs `eval` at the working precision and at doubled precision until two
/// consecutive runs agree to the target relative error. Returns the
/// higher-precision result and the number of doublings performed. A policy
/// with no escalation budget runs once and trusts the result.
pub fn escalate<T>(
    policy: &PrecisionPolicy,
    mut eval: impl FnMut(u32) -> Result<T>,
    value: impl Fn(&T) -> &Scalar,
) -> Result<(T, u32)> {
    let mut bits = policy.working_bits;
    let mut previous = eval(bits)?;
    if policy.max_escalations == 0 {
        return Ok((previous, 0));
    }
    let mut last_dev = f64::INFINITY;
    for step in 1..=policy.max_escalations {
        bits *= 2;
        let current = eval(bits)?;
        let floor = 2f64.powi(-(policy.working_bits as i32) / 3 * 2);
        last_dev = Scalar::rel_diff(value(&previous), value(&current), floor);
        if last_dev <= policy.target_rel_error {
            return Ok((current, step));
        }
        previous = current;
    }
    Err(Error::EscalationExhausted {
        bits,
        deviation: last_dev,
    })
}

/// π at `bits` of precision.
pub fn const_pi(bits: u32) -> Scalar {
    Scalar(Float::with_val(clamp_bits(bits), Constant::Pi))
}

/// `x^y = exp(y ln x)` for `x > 0`.
pub fn pow(x: &Scalar, y: &Scalar) -> Result<Scalar> {
    if *x <= 0i64 {
        return Err(Error::Domain(format!(
            "pow base {} must be positive",
            x.to_f64()
        )));
    }
    let bits = x.precision().max(y.precision());
    Ok(Scalar(Float::with_val(
        bits,
        x.as_float().pow(y.as_float()),
    )))
}

/// Spouge parameter and its a-priori relative error bound
/// `a^{-1/2} (2π)^{-(a+1/2)}`.
fn spouge_parameter(target: f64) -> (u32, f64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = 3u32;
    loop {
        let log_bound = -0.5 * (a as f64).ln() - (a as f64 + 0.5) * two_pi.ln();
        if log_bound < target.ln() || a > 100_000 {
            return (a, log_bound.exp());
        }
        a += 1;
    }
}

/// Γ(x) for real x > 0 together with a bound on its relative error.
///
/// Uses Spouge's approximation
/// `Γ(z+1) = (z+a)^{z+1/2} e^{-(z+a)} [c_0 + Σ_{k=1}^{a-1} c_k/(z+k) + ε(z)]`
/// on `z ≥ 0`, shifting arguments below one with `Γ(x) = Γ(x+1)/x`.
pub fn gamma_with_bound(x: &Scalar, policy: &PrecisionPolicy) -> Result<(Scalar, f64)> {
    if *x <= 0i64 || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma argument {} must be positive",
            x.to_f64()
        )));
    }
    let bits = policy.working_bits.max(x.precision());
    // Half the budget goes to truncation, the rest to rounding.
    let (a, truncation) = spouge_parameter(policy.target_rel_error / 2.0);
    // The c_k alternate in sign and grow like e^a; carry enough extra bits
    // to absorb the cancellation.
    let guard = 32
        + (a as f64 * (std::f64::consts::LOG2_E + 2.0 * std::f64::consts::PI.log2())).ceil() as u32;
    let wp = bits + guard;
    let x = x.with_precision(wp);
    let (z, shift) = if x < 1i64 {
        (x.clone(), true)
    } else {
        (&x - 1i64, false)
    };

    let a_s = Scalar::from_i64(a as i64, wp);
    let mut sum = (const_pi(wp) * 2i64).sqrt()?;
    let mut factorial = Scalar::one(wp);
    for k in 1..a as i64 {
        let ak = &a_s - k;
        let half = Scalar::from_ratio(2 * k - 1, 2, wp);
        let mut c = pow(&ak, &half)? * ak.exp() / &factorial;
        if k % 2 == 0 {
            c = -c;
        }
        sum += c / (&z + k);
        factorial *= k;
    }
    let za = &z + &a_s;
    let exponent = &z + &Scalar::from_ratio(1, 2, wp);
    let mut value = pow(&za, &exponent)? * (-&za).exp() * sum;
    if shift {
        value /= &x;
    }
    let rounding = 2f64.powi(-(bits as i32) + 8);
    Ok((value.with_precision(bits), truncation + rounding))
}

/// Γ(x) for real x > 0 to the policy's target relative error.
pub fn gamma(x: &Scalar, policy: &PrecisionPolicy) -> Result<Scalar> {
    gamma_with_bound(x, policy).map(|(v, _)| v)
}
