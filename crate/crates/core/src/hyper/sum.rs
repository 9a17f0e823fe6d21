//! Adaptive summation of a stream of terms.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mpreal::Scalar;

/// Hard cap on the number of terms any series may consume.
pub const MAX_TERMS: usize = 1_000_000;

const CONSECUTIVE_SMALL: usize = 3;
const WINDOW: usize = 256;
const PROBATION: usize = 4096;
const RISING_WINDOWS: usize = 8;
const LEVIN_MIN_ORDER: usize = 10;
const LEVIN_STEP: usize = 5;
pub(crate) const LEVIN_MAX_ORDER: usize = 300;

/// How terms are bundled before the stopping rule looks at them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Grouping {
    /// Every term is its own group.
    #[default]
    Single,
    /// Term 0, then the pairs (1, 2), (3, 4), ...: the value is the limit of
    /// the partial sums ending at an even index.
    EvenPartialSums,
}

/// Convergence acceleration applied to the partial sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Acceleration {
    /// Levin for classical series on the unit circle, plain summation otherwise.
    #[default]
    Auto,
    None,
    Levin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumOptions {
    pub grouping: Grouping,
    pub acceleration: Acceleration,
    pub max_terms: usize,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions {
            grouping: Grouping::Single,
            acceleration: Acceleration::Auto,
            max_terms: MAX_TERMS,
        }
    }
}

impl SumOptions {
    pub fn grouped(grouping: Grouping) -> Self {
        SumOptions {
            grouping,
            ..Self::default()
        }
    }
}

/// Value of a summed series with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub value: Scalar,
    pub terms_used: usize,
    /// Magnitude of the last group of terms added.
    pub last_term_magnitude: Scalar,
    pub escalations: u32,
}

enum Verdict {
    Continue,
    Converged,
    Diverging,
}

/// Watches group magnitudes against the running sum.
///
/// A sum is accepted once three consecutive groups fall below
/// `target * |sum|` and the geometric tail implied by the largest of the
/// last three group ratios is below the same threshold. Divergence is
/// declared once, past a probation period, the per-window maximum of the
/// group magnitude has failed to decrease for eight windows running.
struct Tracker {
    log2_target: f64,
    small_run: usize,
    ratios: VecDeque<f64>,
    prev: f64,
    groups: usize,
    window_max: f64,
    window_fill: usize,
    maxima: VecDeque<f64>,
}

impl Tracker {
    fn new(target: f64) -> Self {
        Tracker {
            log2_target: target.log2(),
            small_run: 0,
            ratios: VecDeque::with_capacity(CONSECUTIVE_SMALL),
            prev: f64::NAN,
            groups: 0,
            window_max: f64::NEG_INFINITY,
            window_fill: 0,
            maxima: VecDeque::with_capacity(RISING_WINDOWS + 1),
        }
    }

    fn observe(&mut self, group: &Scalar, sum: &Scalar) -> Verdict {
        let lg = group.log2_abs();
        if lg == f64::INFINITY {
            return Verdict::Diverging;
        }
        self.groups += 1;
        let rel = if group.is_zero() {
            f64::NEG_INFINITY
        } else {
            lg - sum.log2_abs()
        };
        if rel <= self.log2_target {
            self.small_run += 1;
        } else {
            self.small_run = 0;
        }

        let ratio = lg - self.prev;
        let ratio = if ratio.is_nan() {
            f64::NEG_INFINITY
        } else {
            ratio
        };
        if self.ratios.len() == CONSECUTIVE_SMALL {
            self.ratios.pop_front();
        }
        self.ratios.push_back(ratio);
        self.prev = lg;

        self.window_max = self.window_max.max(lg);
        self.window_fill += 1;
        if self.window_fill == WINDOW {
            if self.maxima.len() == RISING_WINDOWS + 1 {
                self.maxima.pop_front();
            }
            self.maxima.push_back(self.window_max);
            self.window_max = f64::NEG_INFINITY;
            self.window_fill = 0;
        }

        if self.small_run >= CONSECUTIVE_SMALL && self.groups > CONSECUTIVE_SMALL {
            let worst = self
                .ratios
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if worst < 0.0 {
                let tail = rel + worst - (1.0 - worst.exp2()).log2();
                if tail <= self.log2_target {
                    return Verdict::Converged;
                }
            }
        }
        if self.groups >= PROBATION
            && self.maxima.len() == RISING_WINDOWS + 1
            && self
                .maxima
                .iter()
                .zip(self.maxima.iter().skip(1))
                .all(|(a, b)| b >= a)
        {
            return Verdict::Diverging;
        }
        Verdict::Continue
    }
}

pub(crate) type TermSource<'a> = dyn FnMut() -> Result<Option<Scalar>> + 'a;

/// Plain summation of `next()` until the tracker accepts. `None` from the
/// source means every remaining term is zero, so the sum is exact.
pub(crate) fn sum_direct(
    next: &mut TermSource<'_>,
    grouping: Grouping,
    target: f64,
    max_terms: usize,
    bits: u32,
) -> Result<SeriesResult> {
    let mut tracker = Tracker::new(target);
    let mut sum = Scalar::zero(bits);
    let mut terms = 0usize;
    loop {
        let need = match grouping {
            Grouping::EvenPartialSums if terms > 0 => 2,
            _ => 1,
        };
        let mut group = Scalar::zero(bits);
        let mut ended = false;
        for _ in 0..need {
            match next()? {
                Some(t) => {
                    group += t;
                    terms += 1;
                }
                None => {
                    ended = true;
                    break;
                }
            }
        }
        sum += &group;
        if ended {
            return Ok(finish(sum, terms, group));
        }
        match tracker.observe(&group, &sum) {
            Verdict::Converged => return Ok(finish(sum, terms, group)),
            Verdict::Diverging => return Err(Error::Divergence { terms }),
            Verdict::Continue if terms >= max_terms => return Err(Error::NotConverged { terms }),
            Verdict::Continue => {}
        }
    }
}

/// Levin u-transform of the partial sums, retried every few orders until
/// three consecutive estimates agree. Falls back to the plain sum if the
/// series converges fast enough on its own or terminates.
pub(crate) fn sum_levin(next: &mut TermSource<'_>, target: f64, bits: u32) -> Result<SeriesResult> {
    let mut tracker = Tracker::new(target);
    let mut terms: Vec<Scalar> = Vec::new();
    let mut partials: Vec<Scalar> = Vec::new();
    let mut sum = Scalar::zero(bits);
    let mut history: Vec<Scalar> = Vec::new();
    loop {
        let Some(t) = next()? else {
            let last = terms
                .last()
                .map(Scalar::abs)
                .unwrap_or_else(|| Scalar::zero(bits));
            return Ok(finish(sum, terms.len(), last));
        };
        sum += &t;
        if let Verdict::Converged = tracker.observe(&t, &sum) {
            return Ok(finish(sum, terms.len() + 1, t.abs()));
        }
        terms.push(t);
        partials.push(sum.clone());

        let k = terms.len() - 1;
        if k >= LEVIN_MIN_ORDER && k.is_multiple_of(LEVIN_STEP) {
            match levin_u(&terms, &partials, k) {
                Some(estimate) => history.push(estimate),
                None => history.clear(),
            }
            if let [.., older, old, latest] = history.as_slice() {
                if Scalar::rel_diff(latest, old, 0.0) <= target
                    && Scalar::rel_diff(latest, older, 0.0) <= target
                {
                    return Ok(finish(latest.clone(), k + 1, terms[k].abs()));
                }
            }
        }
        if k >= LEVIN_MAX_ORDER {
            return Err(Error::NotConverged { terms: k + 1 });
        }
    }
}

fn finish(value: Scalar, terms_used: usize, last: Scalar) -> SeriesResult {
    SeriesResult {
        value,
        terms_used,
        last_term_magnitude: last.abs(),
        escalations: 0,
    }
}

/// Levin's u-transform `L_k` with `β = 1` and remainder estimates
/// `ω_j = (j + 1) a_j`.
fn levin_u(terms: &[Scalar], partials: &[Scalar], k: usize) -> Option<Scalar> {
    let bits = terms[0].precision();
    let mut num = Scalar::zero(bits);
    let mut den = Scalar::zero(bits);
    let mut binom = Scalar::one(bits);
    for j in 0..=k {
        if terms[j].is_zero() {
            return None;
        }
        let omega = &terms[j] * (j as i64 + 1);
        let scale = Scalar::from_ratio(j as i64 + 1, k as i64 + 1, bits).powi(k as i64 - 1);
        let mut c = &binom * &scale / &omega;
        if j % 2 == 1 {
            c = -c;
        }
        num += &c * &partials[j];
        den += c;
        binom = binom * (k - j) as i64 / (j as i64 + 1);
    }
    if den.is_zero() {
        None
    } else {
        Some(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(ratio: f64, bits: u32) -> impl FnMut() -> Result<Option<Scalar>> {
        let r = Scalar::from_f64(ratio, bits);
        let mut t = Scalar::one(bits);
        move || {
            let out = t.clone();
            t *= &r;
            Ok(Some(out))
        }
    }

    #[test]
    fn geometric_series_stops_within_target() {
        let mut src = geometric(0.5, 256);
        let r = sum_direct(&mut src, Grouping::Single, 1e-40, MAX_TERMS, 256).unwrap();
        assert!((r.value.to_f64() - 2.0).abs() < 1e-15);
        assert!(Scalar::rel_diff(&r.value, &Scalar::from_i64(2, 256), 0.0) < 1e-40);
        assert!(r.terms_used < 200);
    }

    #[test]
    fn growing_terms_are_divergent() {
        let mut src = geometric(1.01, 128);
        match sum_direct(&mut src, Grouping::Single, 1e-20, MAX_TERMS, 128) {
            Err(Error::Divergence { terms }) => assert!(terms < 10_000),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn exhausted_source_is_exact() {
        let mut n = 0;
        let mut src = || {
            n += 1;
            Ok(if n <= 3 {
                Some(Scalar::from_i64(n, 64))
            } else {
                None
            })
        };
        let r = sum_direct(&mut src, Grouping::Single, 1e-10, MAX_TERMS, 64).unwrap();
        assert_eq!(r.value, 6i64);
        assert_eq!(r.terms_used, 3);
    }

    #[test]
    fn even_grouping_sums_oscillating_tail() {
        // t_0 = 1, then (-1)^n (1 + 2^-n): raw terms do not decay but pairs do.
        let bits = 192;
        let mut n = 0i64;
        let mut src = || {
            let t = if n == 0 {
                Scalar::one(bits)
            } else {
                let v = Scalar::one(bits) + Scalar::from_ratio(1, 2, bits).powi(n);
                if n % 2 == 1 {
                    -v
                } else {
                    v
                }
            };
            n += 1;
            Ok(Some(t))
        };
        let r = sum_direct(&mut src, Grouping::EvenPartialSums, 1e-30, MAX_TERMS, bits).unwrap();
        // 1 + Σ_{n≥1} (-1/2)^n = 1 - 1/3.
        assert!(Scalar::rel_diff(&r.value, &Scalar::from_ratio(2, 3, bits), 0.0) < 1e-30);
    }

    #[test]
    fn levin_accelerates_alternating_harmonic() {
        let bits = 448;
        let mut n = 0i64;
        let mut src = || {
            n += 1;
            let t = Scalar::from_ratio(1, n, bits);
            Ok(Some(if n % 2 == 0 { -t } else { t }))
        };
        let r = sum_levin(&mut src, 1e-40, bits).unwrap();
        let ln2 = Scalar::from_i64(2, bits).ln().unwrap();
        assert!(Scalar::rel_diff(&r.value, &ln2, 0.0) < 1e-40);
        assert!(r.terms_used < 120);
    }
}
