//! The identity registry: each record carries its parameter domain, its
//! admissibility constraints and evaluators for both sides, and the
//! functions here sample admissible points and compare the two sides.

pub mod cantarini;
mod catalog;
pub mod expr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Rational;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mpreal::{format_rational, PrecisionPolicy, Scalar};
use crate::poly::is_negligible_at;

pub use catalog::CATALOG;
pub(crate) use catalog::{g3_factors, h2_d};

/// Rejections tolerated before the sampler gives up.
pub const MAX_REJECTIONS: usize = 10_000;

/// Precision at which constraints are checked.
const CONSTRAINT_BITS: u32 = 256;

/// Relative slack the sampler keeps from every constraint boundary.
const SAMPLING_MARGIN: f64 = 1e-2;

/// Named parameter values, exact and in declaration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Point {
    pub values: Vec<(String, Rational)>,
}

impl Point {
    pub fn new(values: Vec<(String, Rational)>) -> Self {
        Point { values }
    }

    /// Parses `a=1/2,q=0.3` style assignments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected name=value, got `{part}`")))?;
            values.push((
                name.trim().to_string(),
                crate::mpreal::parse_rational(value)?,
            ));
        }
        Ok(Point { values })
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn scalar(&self, name: &str, bits: u32) -> Result<Scalar> {
        self.get(name)
            .map(|r| Scalar::from_rational(r, bits))
            .ok_or_else(|| Error::Unknown(format!("parameter {name}")))
    }

    pub fn set(&mut self, name: &str, value: Rational) {
        match self.values.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.values.push((name.to_string(), value)),
        }
    }

    /// `name=value` pairs, values rendered exactly.
    pub fn display(&self) -> String {
        self.values
            .iter()
            .map(|(n, v)| format!("{n}={}", format_rational(v)))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = self
            .values
            .iter()
            .map(|(n, v)| (n.clone(), Value::String(format_rational(v))))
            .collect();
        Value::Object(map)
    }
}

/// A free parameter and its sampling interval.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub lo: &'static str,
    pub hi: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub enum Constraint {
    /// A comparison in the expression grammar.
    Compare(&'static str),
    /// No listed expression equals `q^n` for an integer `n ≥ 0`, or `q^-n`
    /// when `inverse` is set. `text` is the human-readable form.
    Lattice {
        text: &'static str,
        exprs: &'static [&'static str],
        inverse: bool,
    },
}

impl Constraint {
    pub fn text(&self) -> &'static str {
        match self {
            Constraint::Compare(t) => t,
            Constraint::Lattice { text, .. } => text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Classical,
    Basic,
    Constant,
}

/// One evaluated side of an identity.
#[derive(Debug, Clone)]
pub struct Side {
    pub value: Scalar,
    pub terms: usize,
    pub escalations: u32,
}

impl Side {
    pub fn closed(value: Scalar) -> Self {
        Side {
            value,
            terms: 0,
            escalations: 0,
        }
    }
}

impl From<crate::hyper::SeriesResult> for Side {
    fn from(r: crate::hyper::SeriesResult) -> Self {
        Side {
            value: r.value,
            terms: r.terms_used,
            escalations: r.escalations,
        }
    }
}

pub type SideFn = fn(&Point, &PrecisionPolicy) -> Result<Side>;

pub struct IdentityRecord {
    pub id: &'static str,
    pub name: &'static str,
    pub kind: Kind,
    pub statement: &'static str,
    pub params: &'static [ParamSpec],
    /// `(name, expression)` pairs, evaluated in order after the parameters.
    pub derived: &'static [(&'static str, &'static str)],
    pub constraints: &'static [Constraint],
    /// Extra restrictions applied by the sampler only.
    pub sampling: &'static [&'static str],
    pub tolerance: f64,
    pub experimental: bool,
    pub lhs: SideFn,
    pub rhs: SideFn,
}

impl std::fmt::Debug for IdentityRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdentityRecord")
            .field("id", &self.id)
            .finish_non_exhaustive()
    }
}

impl IdentityRecord {
    pub fn is_parameterless(&self) -> bool {
        self.params.is_empty()
    }

    /// Parameter values and derived quantities at `bits`.
    pub fn environment(&self, point: &Point, bits: u32) -> Result<Vec<(String, Scalar)>> {
        let mut env: Vec<(String, Scalar)> = Vec::new();
        for p in self.params {
            env.push((p.name.to_string(), point.scalar(p.name, bits)?));
        }
        for (name, text) in self.derived {
            let e = expr::parse_expr(text)?;
            let v = expr::eval(&e, &lookup_in(&env), bits)
                .map_err(|_| Error::RejectedPoint(format!("{name} = {text} is undefined")))?;
            env.push((name.to_string(), v));
        }
        Ok(env)
    }

    /// Checks every constraint exactly as stated.
    pub fn check(&self, point: &Point) -> Result<()> {
        self.check_with(point, false)
    }

    fn check_with(&self, point: &Point, margin: bool) -> Result<()> {
        let env = self.environment(point, CONSTRAINT_BITS)?;
        let lookup = lookup_in(&env);
        for c in self.constraints {
            let ok = match c {
                Constraint::Compare(text) => compare(text, &lookup, margin)?,
                Constraint::Lattice { exprs, inverse, .. } => {
                    let q = lookup("q").ok_or_else(|| Error::Unknown("parameter q".into()))?;
                    let mut ok = true;
                    for text in exprs.iter() {
                        ok &= off_lattice(text, &lookup, &q, *inverse, margin)?;
                    }
                    ok
                }
            };
            if !ok {
                return Err(Error::RejectedPoint(c.text().to_string()));
            }
        }
        if margin {
            for text in self.sampling {
                if !compare(text, &lookup, true)? {
                    return Err(Error::RejectedPoint(text.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> Value {
        json!({
            "id": self.id,
            "name": self.name,
            "kind": match self.kind {
                Kind::Classical => "classical",
                Kind::Basic => "basic",
                Kind::Constant => "constant",
            },
            "statement": self.statement,
            "parameters": self.params.iter().map(|p| json!({"name": p.name, "lo": p.lo, "hi": p.hi})).collect::<Vec<_>>(),
            "derived": self.derived.iter().map(|(n, e)| json!({"name": n, "expr": e})).collect::<Vec<_>>(),
            "constraints": self.constraints.iter().map(|c| c.text()).collect::<Vec<_>>(),
            "tolerance": format!("{:e}", self.tolerance),
            "experimental": self.experimental,
        })
    }
}

fn lookup_in(env: &[(String, Scalar)]) -> impl Fn(&str) -> Option<Scalar> + '_ {
    move |name| env.iter().find(|(n, _)| n == name).map(|(_, v)| v.clone())
}

fn compare(text: &str, env: &dyn Fn(&str) -> Option<Scalar>, margin: bool) -> Result<bool> {
    use expr::CmpOp;
    let c = expr::parse_comparison(text)?;
    let (l, r) = match (
        expr::eval(&c.lhs, env, CONSTRAINT_BITS),
        expr::eval(&c.rhs, env, CONSTRAINT_BITS),
    ) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(Error::Unknown(n)), _) | (_, Err(Error::Unknown(n))) => return Err(Error::Unknown(n)),
        _ => return Ok(false),
    };
    let scale = l.abs().max_of(&r.abs());
    let slack = if margin {
        Scalar::from_f64(SAMPLING_MARGIN, CONSTRAINT_BITS) * r.abs().max_of(&Scalar::one(64))
    } else {
        Scalar::zero(64)
    };
    Ok(match c.op {
        CmpOp::Lt => l < &r - &slack,
        CmpOp::Le => l <= &r - &slack,
        CmpOp::Gt => l > &r + &slack,
        CmpOp::Ge => l >= &r + &slack,
        CmpOp::Ne => {
            let diff = (&l - &r).abs();
            if margin {
                diff > Scalar::from_f64(SAMPLING_MARGIN / 10.0, CONSTRAINT_BITS) * scale
            } else {
                !is_negligible_at(&diff, &scale, CONSTRAINT_BITS - 64)
            }
        }
    })
}

/// Whether `value` (or its reciprocal) stays away from `{q^n : n ≥ 0}`.
fn off_lattice(
    text: &str,
    env: &dyn Fn(&str) -> Option<Scalar>,
    q: &Scalar,
    inverse: bool,
    margin: bool,
) -> Result<bool> {
    let v = match expr::eval(&expr::parse_expr(text)?, env, CONSTRAINT_BITS) {
        Ok(v) => v,
        // An expression with a vanishing denominator has no finite value to
        // land on the lattice.
        Err(Error::Domain(_)) => return Ok(true),
        Err(e) => return Err(e),
    };
    if v.is_zero() {
        return Ok(true);
    }
    let w = if inverse { v.recip() } else { v };
    if !(w > 0i64 && w <= 1i64) {
        return Ok(true);
    }
    let n = w.ln()?.to_f64() / q.ln()?.to_f64();
    let k = n.round();
    if margin {
        return Ok((n - k).abs() > 2.0 * SAMPLING_MARGIN);
    }
    let qk = q.powi(k as i64);
    Ok(!is_negligible_at(
        &(&qk - &w),
        &Scalar::one(64),
        CONSTRAINT_BITS - 64,
    ))
}

/// All registered identities.
pub fn registry() -> &'static [IdentityRecord] {
    &CATALOG
}

/// Case-insensitive lookup by identifier.
pub fn find(id: &str) -> Result<&'static IdentityRecord> {
    CATALOG
        .iter()
        .find(|r| r.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::Unknown(id.to_string()))
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Uniform draw in `[lo, hi]` rounded to four decimals.
fn draw(rng: &mut ChaCha8Rng, lo: &Rational, hi: &Rational) -> Rational {
    if lo == hi {
        return lo.clone();
    }
    let (l, h) = (lo.to_f64(), hi.to_f64());
    let v = rng.gen_range(l..=h);
    let mut k = (v * 1e4).round() as i64;
    let q = |k: i64| Rational::from((k, 10_000));
    while q(k) < *lo {
        k += 1;
    }
    while q(k) > *hi {
        k -= 1;
    }
    q(k)
}

/// The first `count` admissible points of the record's deterministic
/// stream for `seed`. Parameterless records yield one empty point.
pub fn sample_points(record: &IdentityRecord, seed: u64, count: usize) -> Result<Vec<Point>> {
    if record.is_parameterless() {
        return Ok(vec![Point::default()]);
    }
    let bounds: Vec<(Rational, Rational)> = record
        .params
        .iter()
        .map(|p| {
            Ok((
                crate::mpreal::parse_rational(p.lo)?,
                crate::mpreal::parse_rational(p.hi)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(record.id));
    let mut out = Vec::with_capacity(count);
    let mut rejections = 0usize;
    while out.len() < count {
        let values = record
            .params
            .iter()
            .zip(&bounds)
            .map(|(p, (lo, hi))| (p.name.to_string(), draw(&mut rng, lo, hi)))
            .collect();
        let point = Point::new(values);
        match record.check_with(&point, true) {
            Ok(()) => {
                out.push(point);
                rejections = 0;
            }
            Err(Error::RejectedPoint(_)) => {
                rejections += 1;
                if rejections >= MAX_REJECTIONS {
                    return Err(Error::SamplerStarvation {
                        id: record.id.to_string(),
                        attempts: rejections,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One admissible point for `id`, deterministic in `seed`.
pub fn sample_point(id: &str, seed: u64) -> Result<Point> {
    let record = find(id)?;
    Ok(sample_points(record, seed, 1)?.remove(0))
}

/// Comparison of both sides at one point.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub id: String,
    pub params: Point,
    pub lhs: Scalar,
    pub rhs: Scalar,
    pub rel_error: f64,
    pub terms_lhs: usize,
    pub terms_rhs: usize,
    /// Highest precision either side was evaluated at.
    pub bits: u32,
    pub tolerance: f64,
    pub pass: bool,
}

/// Relative-error floor at a working precision.
pub fn error_floor(bits: u32) -> f64 {
    10f64.powf(-(bits as f64) / 3.0)
}

/// Evaluates both sides of `record` at `point`, optionally scaling the
/// right side by `rhs_factor` (a negative control).
pub fn evaluate(
    record: &IdentityRecord,
    point: &Point,
    policy: &PrecisionPolicy,
    tolerance: f64,
    rhs_factor: Option<f64>,
) -> Result<VerificationReport> {
    record.check(point)?;
    let lhs = (record.lhs)(point, policy)?;
    let mut rhs = (record.rhs)(point, policy)?;
    if let Some(f) = rhs_factor {
        let bits = rhs.value.precision();
        rhs.value *= Scalar::parse(&format!("{f:e}"), bits)?;
    }
    let rel_error = Scalar::rel_diff(&lhs.value, &rhs.value, error_floor(policy.working_bits));
    Ok(VerificationReport {
        id: record.id.to_string(),
        params: point.clone(),
        bits: policy.working_bits << lhs.escalations.max(rhs.escalations),
        lhs: lhs.value,
        rhs: rhs.value,
        rel_error,
        terms_lhs: lhs.terms,
        terms_rhs: rhs.terms,
        tolerance,
        pass: rel_error <= tolerance,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub bits: u32,
    /// Overrides the record's own tolerance.
    pub tolerance: Option<f64>,
    pub max_escalations: u32,
    pub workers: usize,
    pub rhs_factor: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: 25,
            seed: 0,
            bits: 192,
            tolerance: None,
            max_escalations: 3,
            workers: 0,
            rhs_factor: None,
        }
    }
}

impl VerifyOptions {
    /// The policy for a record: the summation target sits three orders
    /// below the acceptance tolerance.
    pub fn policy_for(&self, record: &IdentityRecord) -> Result<PrecisionPolicy> {
        let tol = self.tolerance_for(record);
        Ok(PrecisionPolicy::new(self.bits)
            .with_target(tol * 1e-3)?
            .with_max_escalations(self.max_escalations))
    }

    pub fn tolerance_for(&self, record: &IdentityRecord) -> f64 {
        self.tolerance.unwrap_or(record.tolerance)
    }
}

/// Outcome at one sampled point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub params: Point,
    pub result: Result<VerificationReport>,
}

impl PointOutcome {
    pub fn pass(&self) -> bool {
        matches!(&self.result, Ok(r) if r.pass)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyRun {
    pub id: String,
    pub experimental: bool,
    pub tolerance: f64,
    pub points: Vec<PointOutcome>,
}

impl VerifyRun {
    pub fn pass(&self) -> bool {
        self.points.iter().all(PointOutcome::pass)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.points
            .iter()
            .map(|p| {
                p.result
                    .as_ref()
                    .map(|r| r.rel_error)
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    /// True when some point failed for numerical rather than mathematical
    /// reasons.
    pub fn numerical_failure(&self) -> bool {
        self.points
            .iter()
            .any(|p| matches!(&p.result, Err(e) if e.is_numerical()))
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

/// Evaluates `points` in parallel, preserving their order.
pub fn verify_points(
    record: &IdentityRecord,
    points: Vec<Point>,
    opts: &VerifyOptions,
) -> Result<VerifyRun> {
    let policy = opts.policy_for(record)?;
    let tolerance = opts.tolerance_for(record);
    let points = pool(opts.workers)?.install(|| {
        points
            .into_par_iter()
            .map(|p| {
                let result = evaluate(record, &p, &policy, tolerance, opts.rhs_factor);
                PointOutcome { params: p, result }
            })
            .collect()
    });
    Ok(VerifyRun {
        id: record.id.to_string(),
        experimental: record.experimental,
        tolerance,
        points,
    })
}

/// Samples `opts.samples` admissible points and compares both sides at
/// each.
pub fn verify(id: &str, opts: &VerifyOptions) -> Result<VerifyRun> {
    let record = find(id)?;
    let points = sample_points(record, opts.seed, opts.samples)?;
    verify_points(record, points, opts)
}
