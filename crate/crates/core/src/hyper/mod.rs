//! Classical and basic hypergeometric series, optionally multiplied by a
//! rational weight, summed term by term from their term ratios.

mod sum;

pub(crate) use sum::sum_direct as sum_stream;
pub use sum::{Acceleration, Grouping, SeriesResult, SumOptions, MAX_TERMS};

use crate::error::{Error, Result};
use crate::mpreal::{escalate, PrecisionPolicy, Scalar};
use crate::poly::{is_negligible_at, RationalFn};
use crate::qcore::QContext;

/// `rFs[a_1..a_r; b_1..b_s; x] = Σ (a_1)_n...(a_r)_n / ((b_1)_n...(b_s)_n n!) x^n`.
#[derive(Debug, Clone)]
pub struct ClassicalSeriesSpec {
    pub upper: Vec<Scalar>,
    pub lower: Vec<Scalar>,
    pub argument: Scalar,
}

impl ClassicalSeriesSpec {
    pub fn new(upper: Vec<Scalar>, lower: Vec<Scalar>, argument: Scalar) -> Self {
        ClassicalSeriesSpec {
            upper,
            lower,
            argument,
        }
    }
}

/// `rφs[a; b; q, x] = Σ (a_1;q)_n...(a_r;q)_n / ((b_1;q)_n...(b_s;q)_n (q;q)_n) x^n`.
#[derive(Debug, Clone)]
pub struct BasicSeriesSpec {
    pub upper: Vec<Scalar>,
    pub lower: Vec<Scalar>,
    pub argument: Scalar,
    pub ctx: QContext,
}

impl BasicSeriesSpec {
    pub fn new(upper: Vec<Scalar>, lower: Vec<Scalar>, argument: Scalar, ctx: QContext) -> Self {
        BasicSeriesSpec {
            upper,
            lower,
            argument,
            ctx,
        }
    }
}

/// `Σ [a_1..a_r; b_1..b_s; Q]_n x^n`, a bracket-ratio series with no implicit
/// `(Q;Q)_n`; the base is the context's `q`.
#[derive(Debug, Clone)]
pub struct BracketSeries {
    pub numerators: Vec<Scalar>,
    pub denominators: Vec<Scalar>,
    pub argument: Scalar,
    pub ctx: QContext,
}

impl BracketSeries {
    pub fn new(
        numerators: Vec<Scalar>,
        denominators: Vec<Scalar>,
        argument: Scalar,
        ctx: QContext,
    ) -> Self {
        BracketSeries {
            numerators,
            denominators,
            argument,
            ctx,
        }
    }
}

/// The hypergeometric part of a weighted series.
#[derive(Debug, Clone)]
pub enum Base {
    Classical(ClassicalSeriesSpec),
    Basic(BasicSeriesSpec),
    Bracket(BracketSeries),
}

/// Non-hypergeometric factor multiplying the n-th base term.
#[derive(Debug, Clone)]
pub enum Weight {
    Unit,
    /// `f(base^n)`, times `(-1)^n` when alternating.
    QRational {
        f: RationalFn,
        base: Scalar,
        alternating: bool,
    },
    /// `f(n)`, times `(-1)^n` when alternating.
    NRational {
        f: RationalFn,
        alternating: bool,
    },
}

/// Sums a classical series, with Levin acceleration on the unit circle.
pub fn eval_classical(
    spec: &ClassicalSeriesSpec,
    policy: &PrecisionPolicy,
) -> Result<SeriesResult> {
    eval_weighted_series(
        &Weight::Unit,
        &Base::Classical(spec.clone()),
        policy,
        &SumOptions::default(),
    )
}

/// Sums a basic series under its context's policy.
pub fn eval_basic(spec: &BasicSeriesSpec) -> Result<SeriesResult> {
    let policy = spec.ctx.policy;
    eval_weighted_series(
        &Weight::Unit,
        &Base::Basic(spec.clone()),
        &policy,
        &SumOptions::default(),
    )
}

/// Sums `Σ weight(n) base_n`, escalating precision until two runs agree.
pub fn eval_weighted_series(
    weight: &Weight,
    base: &Base,
    policy: &PrecisionPolicy,
    options: &SumOptions,
) -> Result<SeriesResult> {
    let check_bits = policy.working_bits;
    let (mut result, steps) = escalate(
        policy,
        |bits| {
            sum_once(
                weight,
                base,
                policy.target_rel_error,
                options,
                bits,
                check_bits,
            )
        },
        |r| &r.value,
    )?;
    result.escalations = steps;
    Ok(result)
}

/// The first `count` terms of `Σ weight(n) base_n` at `bits` (fewer if the
/// series terminates).
pub fn series_terms(weight: &Weight, base: &Base, count: usize, bits: u32) -> Result<Vec<Scalar>> {
    let mut stream = Stream::new(weight, base, bits, bits);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        match stream.next_term()? {
            Some(t) => out.push(t),
            None => break,
        }
    }
    Ok(out)
}

fn sum_once(
    weight: &Weight,
    base: &Base,
    target: f64,
    options: &SumOptions,
    bits: u32,
    check_bits: u32,
) -> Result<SeriesResult> {
    let levin = match options.acceleration {
        Acceleration::Levin => true,
        Acceleration::None => false,
        Acceleration::Auto => {
            options.grouping == Grouping::Single
                && matches!(base, Base::Classical(s) if s.argument.abs() == 1i64)
        }
    };
    if levin {
        let internal = 2 * bits + 64;
        let mut stream = Stream::new(weight, base, internal, check_bits);
        sum::sum_levin(&mut || stream.next_term(), target, internal)
    } else {
        let internal = bits + 32;
        let mut stream = Stream::new(weight, base, internal, check_bits);
        sum::sum_direct(
            &mut || stream.next_term(),
            options.grouping,
            target,
            options.max_terms,
            internal,
        )
    }
}

/// Base parameters lifted to the summation precision.
enum Ratio {
    Classical {
        upper: Vec<Scalar>,
        lower: Vec<Scalar>,
        x: Scalar,
    },
    /// `Π(1 - a t) / Π(1 - b t) x` with `t = q^n`; a basic series carries
    /// `q` as an extra lower parameter.
    Q {
        upper: Vec<Scalar>,
        lower: Vec<Scalar>,
        x: Scalar,
        q: Scalar,
        t: Scalar,
        implicit: usize,
    },
}

enum WeightState {
    Unit,
    Q {
        f: RationalFn,
        base: Scalar,
        t: Scalar,
        alternating: bool,
    },
    N {
        f: RationalFn,
        alternating: bool,
    },
}

struct Stream {
    ratio: Ratio,
    weight: WeightState,
    term: Scalar,
    n: usize,
    done: bool,
    bits: u32,
    check_bits: u32,
}

fn lift(values: &[Scalar], bits: u32) -> Vec<Scalar> {
    values
        .iter()
        .map(|v| v.with_precision(bits.max(v.precision())))
        .collect()
}

impl Stream {
    fn new(weight: &Weight, base: &Base, bits: u32, check_bits: u32) -> Self {
        let ratio = match base {
            Base::Classical(s) => Ratio::Classical {
                upper: lift(&s.upper, bits),
                lower: lift(&s.lower, bits),
                x: s.argument.with_precision(bits),
            },
            Base::Basic(s) => {
                let q = s.ctx.q().with_precision(bits);
                let mut lower = lift(&s.lower, bits);
                lower.push(q.clone());
                Ratio::Q {
                    upper: lift(&s.upper, bits),
                    lower,
                    x: s.argument.with_precision(bits),
                    q,
                    t: Scalar::one(bits),
                    implicit: 1,
                }
            }
            Base::Bracket(s) => Ratio::Q {
                upper: lift(&s.numerators, bits),
                lower: lift(&s.denominators, bits),
                x: s.argument.with_precision(bits),
                q: s.ctx.q().with_precision(bits),
                t: Scalar::one(bits),
                implicit: 0,
            },
        };
        let weight = match weight {
            Weight::Unit => WeightState::Unit,
            Weight::QRational {
                f,
                base,
                alternating,
            } => WeightState::Q {
                f: f.clone(),
                base: base.with_precision(bits),
                t: Scalar::one(bits),
                alternating: *alternating,
            },
            Weight::NRational { f, alternating } => WeightState::N {
                f: f.clone(),
                alternating: *alternating,
            },
        };
        Stream {
            ratio,
            weight,
            term: Scalar::one(bits),
            n: 0,
            done: false,
            bits,
            check_bits,
        }
    }

    fn next_term(&mut self) -> Result<Option<Scalar>> {
        if self.done {
            return Ok(None);
        }
        let n = self.n;
        let value = self.weighted(n)?;
        match self.step(n)? {
            Some(r) if !r.is_zero() => self.term *= r,
            _ => self.done = true,
        }
        self.n += 1;
        Ok(Some(value))
    }

    fn weighted(&mut self, n: usize) -> Result<Scalar> {
        let singular = || Error::SingularParameter {
            param: "weight".into(),
            index: n,
        };
        let (w, alternating) = match &mut self.weight {
            WeightState::Unit => return Ok(self.term.clone()),
            WeightState::Q {
                f,
                base,
                t,
                alternating,
            } => {
                let w = f.eval_at(t, self.check_bits).ok_or_else(singular)?;
                *t *= &*base;
                (w, *alternating)
            }
            WeightState::N { f, alternating } => {
                let nn = Scalar::from_i64(n as i64, self.bits);
                (
                    f.eval_at(&nn, self.check_bits).ok_or_else(singular)?,
                    *alternating,
                )
            }
        };
        let v = w * &self.term;
        Ok(if alternating && n % 2 == 1 { -v } else { v })
    }

    /// `term(n+1) / term(n)`, or `None` when term `n+1` and all later terms
    /// vanish.
    fn step(&mut self, n: usize) -> Result<Option<Scalar>> {
        let bits = self.bits;
        let check = self.check_bits;
        match &mut self.ratio {
            Ratio::Classical { upper, lower, x } => {
                let nn = Scalar::from_i64(n as i64, bits);
                let mut num = x.clone();
                for a in upper.iter() {
                    let f = a + &nn;
                    if is_negligible_at(&f, &a.abs().max_of(&nn), check) {
                        return Ok(None);
                    }
                    num *= f;
                }
                let mut den = Scalar::from_i64(n as i64 + 1, bits);
                for (j, b) in lower.iter().enumerate() {
                    let f = b + &nn;
                    if is_negligible_at(&f, &b.abs().max_of(&nn), check) {
                        return Err(Error::SingularParameter {
                            param: format!("lower[{j}]"),
                            index: n,
                        });
                    }
                    den *= f;
                }
                Ok(Some(num / den))
            }
            Ratio::Q {
                upper,
                lower,
                x,
                q,
                t,
                implicit,
            } => {
                let one = Scalar::one(bits);
                let mut num = x.clone();
                for a in upper.iter() {
                    let at = a * &*t;
                    let f = &one - &at;
                    if is_negligible_at(&f, &one.max_of(&at.abs()), check) {
                        return Ok(None);
                    }
                    num *= f;
                }
                let mut den = one.clone();
                let explicit = lower.len() - *implicit;
                for (j, b) in lower.iter().enumerate() {
                    let bt = b * &*t;
                    let f = &one - &bt;
                    if j < explicit && is_negligible_at(&f, &one.max_of(&bt.abs()), check) {
                        return Err(Error::SingularParameter {
                            param: format!("lower[{j}]"),
                            index: n,
                        });
                    }
                    den *= f;
                }
                *t *= &*q;
                Ok(Some(num / den))
            }
        }
    }
}

#[cfg(test)]
mod tests;
