//! Certified brackets for `C_f = Σ_{n≥1} f(n)/(n(n+1))`.
//!
//! The partial sum over `n ≤ N` is accumulated in outward-rounded interval
//! arithmetic. The remainder is bounded above by
//!
//! * Λ: `Σ_{n>N} log n / n² ≤ (log N + 1)/N + log(N+1)/(N+1)²`, valid because
//!   `log t / t²` decreases for `t ≥ 2`;
//! * τ_k: `Σ_{n>N} τ_k(n)/n² = ζ(2)^k − Σ_{n≤N} τ_k(n)/n²`.
//!
//! Terms are summed per segment first so that large early partial sums do
//! not inflate the per-operation widening of the small late terms.

use serde::Serialize;

use crate::interval::Interval;
use crate::sieve::{isqrt, primes_in_segment, primes_up_to, ArithKind, SegmentSieve};
use crate::summation::chunk_bounds;
use crate::{Error, Result};
use rayon::prelude::*;

const SEGMENT: u64 = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantBracket {
    pub kind: ArithKind,
    pub terms_used: u64,
    pub lo: f64,
    pub hi: f64,
}

impl ConstantBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn to_record(&self) -> ConstantRecord {
        ConstantRecord {
            kind: match self.kind {
                ArithKind::Lambda => "lambda",
                ArithKind::Mu => "mu",
                ArithKind::TauK(_) => "tau",
            }
            .into(),
            k: self.kind.order(),
            terms: self.terms_used,
            lo: self.lo,
            hi: self.hi,
        }
    }
}

/// JSON shape `{kind, k, terms, lo, hi}`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ConstantRecord {
    pub kind: String,
    pub k: u32,
    pub terms: u64,
    pub lo: f64,
    pub hi: f64,
}

/// Order in which the partial sum is reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumOrder {
    /// One running interval sum over `n = 1, 2, …`.
    Ascending,
    /// Per-segment interval sums combined left to right.
    Blockwise,
}

/// `1/(n(n+1))`.
fn reciprocal_pronic(n: u64) -> Interval {
    let one = Interval::point(1.0);
    (one / Interval::from_u64(n)) / Interval::from_u64(n + 1)
}

fn reciprocal_square(n: u64) -> Interval {
    let inv = Interval::point(1.0) / Interval::from_u64(n);
    inv * inv
}

/// Upper bound on `Σ_{n>N} log n / n²`.
pub fn lambda_tail_bound(n: u64) -> f64 {
    let nn = Interval::from_u64(n);
    let n1 = Interval::from_u64(n + 1);
    let first = (Interval::ln_u64(n) + Interval::point(1.0)) / nn;
    let second = Interval::ln_u64(n + 1) / (n1 * n1);
    (first + second).hi
}

/// Encloses `ζ(2)^k = (π²/6)^k`.
pub fn zeta2_power(k: u32) -> Interval {
    Interval::zeta2().powi(k)
}

/// Partial sums of Λ(n)/(n(n+1)) over prime powers in `[lo, hi)`.
fn lambda_segment(start: Interval, lo: u64, hi: u64, base_primes: &[u64], limit: u64) -> Interval {
    let mut acc = start;
    for p in primes_in_segment(lo, hi, base_primes) {
        let logp = Interval::ln_u64(p);
        let mut pa = p;
        loop {
            acc = acc + logp * reciprocal_pronic(pa);
            match pa.checked_mul(p) {
                Some(next) if next <= limit => pa = next,
                _ => break,
            }
        }
    }
    acc
}

/// Partial sums `(Σ τ_k(n)/(n(n+1)), Σ τ_k(n)/n²)` over `[lo, hi)`.
fn tau_segment(
    start: (Interval, Interval),
    sieve: &SegmentSieve,
    lo: u64,
    hi: u64,
) -> Result<(Interval, Interval)> {
    let values = sieve.segment(lo, hi)?;
    let (mut pronic, mut square) = start;
    for (i, &t) in values.iter().enumerate() {
        let n = lo + i as u64;
        let t = Interval::from_u64(t as u64);
        pronic = pronic + t * reciprocal_pronic(n);
        square = square + t * reciprocal_square(n);
    }
    Ok((pronic, square))
}

/// Ascending threads one running sum through the segments in order;
/// blockwise sums each segment from zero in parallel and adds the partials.
fn reduce_segments<T, F>(segments: &[(u64, u64)], order: SumOrder, zero: T, add: impl Fn(T, T) -> T, f: F) -> Result<T>
where
    T: Copy + Send + Sync,
    F: Fn(T, u64, u64) -> Result<T> + Sync + Send,
{
    match order {
        SumOrder::Ascending => segments.iter().try_fold(zero, |acc, &(a, b)| f(acc, a, b)),
        SumOrder::Blockwise => {
            let parts: Vec<T> = segments
                .par_iter()
                .map(|&(a, b)| f(zero, a, b))
                .collect::<Result<_>>()?;
            Ok(parts.into_iter().fold(zero, add))
        }
    }
}

pub fn main_constant(kind: ArithKind, n_terms: u64) -> Result<ConstantBracket> {
    main_constant_with_order(kind, n_terms, SumOrder::Blockwise)
}

pub fn main_constant_with_order(
    kind: ArithKind,
    n_terms: u64,
    order: SumOrder,
) -> Result<ConstantBracket> {
    let kind = kind.validate()?;
    if n_terms < 10 {
        return Err(Error::Domain(format!(
            "need at least 10 terms for a certified tail, got {n_terms}"
        )));
    }
    let segments = chunk_bounds(1, n_terms + 1, SEGMENT);
    match kind {
        ArithKind::Lambda => {
            let base = primes_up_to(isqrt(n_terms));
            let partial = reduce_segments(&segments, order, Interval::ZERO, |a, b| a + b, |acc, a, b| {
                Ok(lambda_segment(acc, a, b, &base, n_terms))
            })?;
            let tail = lambda_tail_bound(n_terms);
            Ok(ConstantBracket {
                kind,
                terms_used: n_terms,
                lo: partial.lo,
                hi: (partial.hi + tail).next_up(),
            })
        }
        ArithKind::TauK(k) => {
            let sieve = SegmentSieve::new(kind, n_terms + 1)?;
            let (pronic, square) = reduce_segments(
                &segments,
                order,
                (Interval::ZERO, Interval::ZERO),
                |a, b| (a.0 + b.0, a.1 + b.1),
                |acc, a, b| tau_segment(acc, &sieve, a, b),
            )?;
            let tail = (zeta2_power(k) - square).hi.max(0.0);
            Ok(ConstantBracket {
                kind,
                terms_used: n_terms,
                lo: pronic.lo,
                hi: (pronic.hi + tail).next_up(),
            })
        }
        ArithKind::Mu => Err(Error::Domain(
            "main-term constants are defined for Λ and τ_k only".into(),
        )),
    }
}

/// Encloses `Σ_{n≤N} τ_k(n)/n²`, which increases to `ζ(2)^k`.
pub fn tau_dirichlet_partial(k: u32, n_terms: u64) -> Result<Interval> {
    let kind = ArithKind::TauK(k).validate()?;
    let sieve = SegmentSieve::new(kind, n_terms + 1)?;
    let (_, square) = reduce_segments(
        &chunk_bounds(1, n_terms + 1, SEGMENT),
        SumOrder::Blockwise,
        (Interval::ZERO, Interval::ZERO),
        |a, b| (a.0 + b.0, a.1 + b.1),
        |acc, a, b| tau_segment(acc, &sieve, a, b),
    )?;
    Ok(square)
}
