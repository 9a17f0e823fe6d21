//! `q → 1` limits by Richardson extrapolation in `h = 1 - q`, and the
//! registered pairs linking each q-identity to its classical counterpart.

use rayon::prelude::*;
use rug::Rational;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::identities::{cantarini, find, Point};
use crate::mpreal::{format_rational, gamma, PrecisionPolicy, Scalar};

/// `q_j = 1 - 2^-j` for `j = j0..=j1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSchedule {
    pub j0: u32,
    pub j1: u32,
    pub order: usize,
    /// Relative accuracy asked of each evaluation.
    pub target: f64,
}

impl Default for LimitSchedule {
    fn default() -> Self {
        LimitSchedule {
            j0: 4,
            j1: 12,
            order: 3,
            target: 1e-20,
        }
    }
}

impl LimitSchedule {
    pub fn new(j0: u32, j1: u32, order: usize) -> Result<Self> {
        let s = LimitSchedule {
            j0,
            j1,
            order,
            ..LimitSchedule::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_order(mut self, order: usize) -> Result<Self> {
        self.order = order;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.j0 == 0 || self.j1 > 60 || self.j1 < self.j0 + self.order as u32 + 2 {
            return Err(Error::Domain(format!(
                "schedule j = {}..{} too short for order {}",
                self.j0, self.j1, self.order
            )));
        }
        Ok(())
    }

    pub fn q_values(&self) -> Vec<Rational> {
        (self.j0..=self.j1)
            .map(|j| Rational::from(1) - Rational::from((1, 1u64 << j)))
            .collect()
    }

    /// Working precision at step `j`.
    pub fn bits_at(j: u32) -> u32 {
        192.max(64 + 16 * j)
    }

    fn policy_at(&self, j: u32) -> Result<PrecisionPolicy> {
        PrecisionPolicy::new(Self::bits_at(j)).with_target(self.target)
    }
}

#[derive(Debug, Clone)]
pub struct LimitEstimate {
    pub value: Scalar,
    /// Last extrapolation increment.
    pub error: f64,
    pub order: usize,
    /// `(q_j, f(q_j))` in schedule order.
    pub samples: Vec<(Rational, Scalar)>,
}

impl LimitEstimate {
    pub fn to_json(&self) -> Value {
        json!({
            "value": self.value.to_decimal_string(),
            "error_estimate": format!("{:.3e}", self.error),
            "order": self.order,
            "samples": self.samples.iter().map(|(q, v)| json!({
                "q": format_rational(q),
                "value": v.to_decimal_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// A function of `q` evaluated under a policy.
pub type Family<'a> = dyn Fn(&Rational, &PrecisionPolicy) -> Result<Scalar> + Sync + 'a;

/// Neville tableau row-by-row: `table[i][k]` extrapolates the points
/// `i-k..=i` to `h = 0`.
fn neville(hs: &[Scalar], fs: &[Scalar], order: usize) -> Vec<Vec<Scalar>> {
    let mut table: Vec<Vec<Scalar>> = Vec::with_capacity(fs.len());
    for i in 0..fs.len() {
        let mut row = vec![fs[i].clone()];
        for k in 1..=order.min(i) {
            let prev = &table[i - 1][k - 1];
            let cur = &row[k - 1];
            let v = cur + &((cur - prev) * &hs[i] / &(&hs[i - k] - &hs[i]));
            row.push(v);
        }
        table.push(row);
    }
    table
}

/// Extrapolates `family` to `q = 1`. Fails when the increments of the
/// final column stop shrinking.
pub fn q_limit(family: &Family<'_>, schedule: &LimitSchedule) -> Result<LimitEstimate> {
    schedule.validate()?;
    let qs = schedule.q_values();
    let js: Vec<u32> = (schedule.j0..=schedule.j1).collect();
    let values: Vec<Scalar> = js
        .par_iter()
        .zip(qs.par_iter())
        .map(|(&j, q)| family(q, &schedule.policy_at(j)?))
        .collect::<Result<_>>()?;
    let bits = LimitSchedule::bits_at(schedule.j1);
    let hs: Vec<Scalar> = qs
        .iter()
        .map(|q| Scalar::from_rational(&(Rational::from(1) - q), bits))
        .collect();
    let fs: Vec<Scalar> = values.iter().map(|v| v.with_precision(bits)).collect();
    let k = schedule.order;
    let table = neville(&hs, &fs, k);
    let last = table.len() - 1;
    let value = table[last][k].clone();
    let increments: Vec<f64> = (k + 1..=last)
        .map(|i| (&table[i][k] - &table[i - 1][k]).abs().to_f64())
        .collect();
    let noise = value.abs().to_f64().max(1e-300) * schedule.target * 1e3;
    let tail = &increments[increments.len().saturating_sub(3)..];
    if tail.windows(2).any(|w| w[1] > w[0] && w[1] > noise) {
        return Err(Error::ExtrapolationFailure(format!(
            "increments {:?} not decreasing",
            tail.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
        )));
    }
    let error = *increments.last().unwrap_or(&0.0);
    Ok(LimitEstimate {
        value,
        error,
        order: k,
        samples: qs.into_iter().zip(values).collect(),
    })
}

/// `q^x` as an exact binary rational.
fn q_power(q: &Rational, x: &Rational, bits: u32) -> Result<Rational> {
    let v = crate::mpreal::pow(
        &Scalar::from_rational(q, bits),
        &Scalar::from_rational(x, bits),
    )?;
    v.as_float()
        .to_rational()
        .ok_or_else(|| Error::Domain("non-finite power".into()))
}

fn param(p: &Point, name: &str) -> Result<Rational> {
    p.get(name)
        .cloned()
        .ok_or_else(|| Error::Unknown(format!("parameter {name}")))
}

/// Evaluates one side of a registry record at `point` after checking its
/// constraints.
fn side(id: &str, lhs: bool, point: &Point, policy: &PrecisionPolicy) -> Result<Scalar> {
    let record = find(id)?;
    record.check(point)?;
    let f = if lhs { record.lhs } else { record.rhs };
    Ok(f(point, policy)?.value)
}

fn with_q(q: &Rational, rest: Vec<(&str, Rational)>) -> Point {
    let mut values = vec![("q".to_string(), q.clone())];
    values.extend(rest.into_iter().map(|(n, v)| (n.to_string(), v)));
    Point::new(values)
}

/// Exponent parameters `a, b` become `q^a, q^b`.
fn exponents(q: &Rational, p: &Point, names: &[&str], bits: u32) -> Result<Point> {
    let mut rest = Vec::new();
    for &n in names {
        rest.push((n, q_power(q, &param(p, n)?, bits + 64)?));
    }
    Ok(with_q(q, rest))
}

fn dougall_point(p: &Point) -> Result<Point> {
    let a = param(p, "a")?;
    let c = (a.clone() - 1u32) / 2u32;
    Ok(Point::new(vec![
        ("a".into(), a),
        ("b".into(), param(p, "b")?),
        ("c".into(), c),
    ]))
}

/// How a pair is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// The limit of the q-side equals the classical value.
    Match,
    /// Both sides of the q-identity tend to a common multiple of the
    /// classical value; the multiple is estimated, not asserted.
    Ratio,
}

pub struct LimitPair {
    pub id: &'static str,
    pub q_identity: &'static str,
    pub classical: &'static str,
    pub kind: PairKind,
    pub params: &'static [&'static str],
    pub default_point: &'static str,
    pub description: &'static str,
    /// The q-family at classical parameters `p`, for the given side.
    family: fn(&Point, bool, &Rational, &PrecisionPolicy) -> Result<Scalar>,
    /// The classical counterpart at `p`.
    classical_value: fn(&Point, &PrecisionPolicy) -> Result<Scalar>,
}

fn g2_family(p: &Point, lhs: bool, q: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    side(
        "G2",
        lhs,
        &with_q(q, vec![("a", param(p, "a")?), ("b", param(p, "b")?)]),
        policy,
    )
}

fn g1_value(p: &Point, policy: &PrecisionPolicy) -> Result<Scalar> {
    side("G1", true, p, policy)
}

fn g3_family(p: &Point, lhs: bool, q: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    side(
        "G3",
        lhs,
        &with_q(q, vec![("a", param(p, "a")?), ("b", param(p, "b")?)]),
        policy,
    )
}

/// `(a+b)/(a²b(b+1))` times the Gosper sum.
fn g1_scaled(p: &Point, policy: &PrecisionPolicy) -> Result<Scalar> {
    let bits = policy.guarded_bits();
    let (a, b) = (p.scalar("a", bits)?, p.scalar("b", bits)?);
    let scale = (&a + &b) / (a.square() * &b * (&b + 1i64));
    Ok(scale * g1_value(p, policy)?)
}

fn h1_family(p: &Point, lhs: bool, q: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    side(
        "H1",
        lhs,
        &exponents(q, p, &["a", "b", "c"], policy.guarded_bits())?,
        policy,
    )
}

/// `Γ(c)Γ(c-a-b)/(Γ(c-a)Γ(c-b))`.
fn gauss_value(p: &Point, policy: &PrecisionPolicy) -> Result<Scalar> {
    let bits = policy.guarded_bits();
    let (a, b, c) = (
        p.scalar("a", bits)?,
        p.scalar("b", bits)?,
        p.scalar("c", bits)?,
    );
    if (&c - &a - &b).partial_cmp(&0i64) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::RejectedPoint("c - a - b > 0".into()));
    }
    let g = |x: Scalar| gamma(&x, policy);
    Ok(g(c.clone())? * g(&c - &a - &b)? / (g(&c - &a)? * g(&c - &b)?))
}

fn kummer(
    id: &str,
    p: &Point,
    lhs: bool,
    q: &Rational,
    policy: &PrecisionPolicy,
) -> Result<Scalar> {
    side(
        id,
        lhs,
        &exponents(q, p, &["a", "b"], policy.guarded_bits())?,
        policy,
    )
}

fn k2_family(p: &Point, lhs: bool, q: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    kummer("K2", p, lhs, q, policy)
}

fn k3_family(p: &Point, lhs: bool, q: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    kummer("K3", p, lhs, q, policy)
}

fn k4_family(p: &Point, lhs: bool, q: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    kummer("K4", p, lhs, q, policy)
}

fn d2_value(p: &Point, policy: &PrecisionPolicy) -> Result<Scalar> {
    side("D2", true, &dougall_point(p)?, policy)
}

fn c2_family(_: &Point, lhs: bool, q: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    let q = Scalar::from_rational(q, policy.guarded_bits());
    if lhs {
        Ok(cantarini::lhs(&q, policy)?.value)
    } else {
        Ok(cantarini::rhs(&q, policy)?.0)
    }
}

fn c1_value(p: &Point, policy: &PrecisionPolicy) -> Result<Scalar> {
    side("C1", true, p, policy)
}

fn g1_self(p: &Point, _: bool, _: &Rational, policy: &PrecisionPolicy) -> Result<Scalar> {
    g1_value(p, policy)
}

pub static LIMIT_PAIRS: [LimitPair; 8] = [
    LimitPair {
        id: "G2:G1",
        q_identity: "G2",
        classical: "G1",
        kind: PairKind::Match,
        params: &["a", "b"],
        default_point: "a=3,b=2",
        description: "first q-analogue to Gosper's sum",
        family: g2_family,
        classical_value: g1_value,
    },
    LimitPair {
        id: "G3:G1",
        q_identity: "G3",
        classical: "G1",
        kind: PairKind::Match,
        params: &["a", "b"],
        default_point: "a=2,b=3",
        description: "second q-analogue to (a+b)/(a²b(b+1)) times Gosper's sum",
        family: g3_family,
        classical_value: g1_scaled,
    },
    LimitPair {
        id: "H1:Gauss",
        q_identity: "H1",
        classical: "Gauss",
        kind: PairKind::Match,
        params: &["a", "b", "c"],
        default_point: "a=1/2,b=1/4,c=3/2",
        description: "q-Gauss with q^a, q^b, q^c to Gauss's 2F1(1) sum",
        family: h1_family,
        classical_value: gauss_value,
    },
    LimitPair {
        id: "K2:D2",
        q_identity: "K2",
        classical: "D2",
        kind: PairKind::Match,
        params: &["a", "b"],
        default_point: "a=5/2,b=1/2",
        description: "6φ5 variant with q^a, q^b to the 4F3(-1) sum at c = (a-1)/2",
        family: k2_family,
        classical_value: d2_value,
    },
    LimitPair {
        id: "K3:D2",
        q_identity: "K3",
        classical: "D2",
        kind: PairKind::Match,
        params: &["a", "b"],
        default_point: "a=5/2,b=1/2",
        description: "first 4φ3 variant with q^a, q^b to the 4F3(-1) sum at c = (a-1)/2",
        family: k3_family,
        classical_value: d2_value,
    },
    LimitPair {
        id: "K4:D2",
        q_identity: "K4",
        classical: "D2",
        kind: PairKind::Match,
        params: &["a", "b"],
        default_point: "a=5/2,b=1/2",
        description: "second 4φ3 variant with q^a, q^b to the 4F3(-1) sum at c = (a-1)/2",
        family: k4_family,
        classical_value: d2_value,
    },
    LimitPair {
        id: "C2:C1",
        q_identity: "C2",
        classical: "C1",
        kind: PairKind::Ratio,
        params: &[],
        default_point: "",
        description: "both sides of the q-Cantarini identity against Cantarini's series",
        family: c2_family,
        classical_value: c1_value,
    },
    LimitPair {
        id: "G1:G1",
        q_identity: "G1",
        classical: "G1",
        kind: PairKind::Match,
        params: &["a", "b"],
        default_point: "a=3,b=2",
        description: "Gosper's sum against itself",
        family: g1_self,
        classical_value: g1_value,
    },
];

pub fn limit_pairs() -> &'static [LimitPair] {
    &LIMIT_PAIRS
}

pub fn find_pair(id: &str) -> Result<&'static LimitPair> {
    LIMIT_PAIRS
        .iter()
        .find(|p| p.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::Unknown(format!("limit pair {id}")))
}

/// Limit of one side of the q-identity against the classical value.
#[derive(Debug, Clone)]
pub struct SideLimit {
    pub side: &'static str,
    pub limit: LimitEstimate,
    /// `limit - classical` for matches, `limit / classical` for ratios.
    pub comparison: Scalar,
}

#[derive(Debug, Clone)]
pub struct LimitReport {
    pub pair: &'static str,
    pub kind: PairKind,
    pub params: Point,
    pub classical: Scalar,
    pub sides: Vec<SideLimit>,
    pub tolerance: f64,
    /// Spread between the two side ratios, for ratio pairs.
    pub spread: Option<f64>,
    /// For C2:C1, the limit of the right-side series over the companion
    /// sum, and the constant it was expected to approach.
    pub companion: Option<(Scalar, Scalar)>,
    pub pass: bool,
}

impl LimitReport {
    /// The stabilized multiple, for ratio pairs.
    pub fn scalar(&self) -> Option<&Scalar> {
        match self.kind {
            PairKind::Ratio => self.sides.first().map(|s| &s.comparison),
            PairKind::Match => None,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pair": self.pair,
            "kind": match self.kind { PairKind::Match => "match", PairKind::Ratio => "ratio" },
            "params": self.params.to_json(),
            "classical": self.classical.to_decimal_string(),
            "sides": self.sides.iter().map(|s| json!({
                "side": s.side,
                "limit": s.limit.to_json(),
                "comparison": s.comparison.to_decimal_string(),
            })).collect::<Vec<_>>(),
            "tolerance": format!("{:.3e}", self.tolerance),
            "spread": self.spread.map(|s| format!("{s:.3e}")),
            "companion": self.companion.as_ref().map(|(v, k)| json!({
                "ratio": v.to_decimal_string(),
                "expected": k.to_decimal_string(),
            })),
            "pass": self.pass,
        })
    }
}

/// Extrapolates the pair's q-side at classical parameters `point` and
/// compares with the classical value. Match pairs pass when the two agree
/// within the extrapolation estimate plus `tolerance`; ratio pairs pass when
/// the ratios from both sides agree to `tolerance` and each is resolved to
/// that accuracy.
pub fn check_limit_pair(
    pair: &'static LimitPair,
    point: &Point,
    schedule: &LimitSchedule,
    tolerance: f64,
) -> Result<LimitReport> {
    for name in pair.params {
        param(point, name)?;
    }
    let policy =
        PrecisionPolicy::new(LimitSchedule::bits_at(schedule.j1)).with_target(schedule.target)?;
    let classical = (pair.classical_value)(point, &policy)?;
    let family_for =
        |lhs: bool| move |q: &Rational, pol: &PrecisionPolicy| (pair.family)(point, lhs, q, pol);

    match pair.kind {
        PairKind::Match => {
            let limit = q_limit(&family_for(true), schedule)?;
            let diff = &limit.value - &classical;
            let scale = classical.abs().to_f64().max(1.0);
            let pass = diff.abs().to_f64() <= limit.error + tolerance * scale;
            Ok(LimitReport {
                pair: pair.id,
                kind: pair.kind,
                params: point.clone(),
                classical,
                sides: vec![SideLimit {
                    side: "lhs",
                    limit,
                    comparison: diff,
                }],
                tolerance,
                spread: None,
                companion: None,
                pass,
            })
        }
        PairKind::Ratio => {
            let lhs = q_limit(&family_for(true), schedule)?;
            let rhs = q_limit(&family_for(false), schedule)?;
            let rl = &lhs.value / &classical;
            let rr = &rhs.value / &classical;
            let spread = (&rl - &rr).abs().to_f64();
            let c = classical.abs().to_f64();
            let resolved = lhs.error / c <= tolerance && rhs.error / c <= tolerance;
            let companion = companion_ratio(&rhs.value, &policy)?;
            Ok(LimitReport {
                pair: pair.id,
                kind: pair.kind,
                params: point.clone(),
                classical,
                sides: vec![
                    SideLimit {
                        side: "lhs",
                        limit: lhs,
                        comparison: rl,
                    },
                    SideLimit {
                        side: "rhs",
                        limit: rhs,
                        comparison: rr,
                    },
                ],
                tolerance,
                spread: Some(spread),
                companion: Some(companion),
                pass: spread <= tolerance && resolved,
            })
        }
    }
}

/// `(lim rhs - c)/D` against `κ₂`, where `D` is the companion sum and `c`,
/// `κ₂` come from the expansion of the weights.
fn companion_ratio(rhs_limit: &Scalar, policy: &PrecisionPolicy) -> Result<(Scalar, Scalar)> {
    let s = cantarini::limit_scalars()?;
    let bits = policy.guarded_bits();
    let d = side("C3", true, &Point::default(), policy)?;
    let c = Scalar::from_rational(&s.constant, bits);
    Ok((
        (rhs_limit - &c) / d,
        Scalar::from_rational(&s.kappa_rhs, bits),
    ))
}

/// [`check_limit_pair`] at the pair's default parameters.
pub fn check_default(id: &str, schedule: &LimitSchedule, tolerance: f64) -> Result<LimitReport> {
    let pair = find_pair(id)?;
    check_limit_pair(
        pair,
        &Point::parse(pair.default_point)?,
        schedule,
        tolerance,
    )
}
