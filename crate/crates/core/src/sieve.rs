//! Segmented sieves and pointwise evaluators for Λ, μ and τ_k.
//!
//! Λ is stored through its prime base `b(n)` (`b(p^a) = p`, otherwise 1),
//! so `Λ(n) = log b(n)` and no rounding happens at table level.
//!
//! Segments are sieved by stripping each prime `p ≤ √hi` out of a working
//! copy of `n`; whatever remains afterwards is 1 or a single prime above
//! `√hi`. Every segment is independent, which is what makes segmented and
//! one-shot execution agree entry for entry.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::factor::factorize;
use crate::summation::chunk_bounds;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithKind {
    /// von Mangoldt, stored as the prime base.
    Lambda,
    /// Möbius.
    Mu,
    /// k-fold divisor function, `k ≥ 2`.
    TauK(u32),
}

impl ArithKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            ArithKind::TauK(k) if k < 2 => Err(Error::InvalidOrder(k)),
            other => Ok(other),
        }
    }

    /// The divisor order, or 0 for the other kinds.
    pub fn order(self) -> u32 {
        match self {
            ArithKind::TauK(k) => k,
            _ => 0,
        }
    }

    pub fn name(self) -> String {
        match self {
            ArithKind::Lambda => "lambda".into(),
            ArithKind::Mu => "mu".into(),
            ArithKind::TauK(k) => format!("tau{k}"),
        }
    }
}

impl std::str::FromStr for ArithKind {
    type Err = Error;

    /// Accepts `lambda`, `mu`, `tau` (k = 2) and `tauK`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "lambda" | "vonmangoldt" => Ok(ArithKind::Lambda),
            "mu" | "moebius" | "mobius" => Ok(ArithKind::Mu),
            "tau" => Ok(ArithKind::TauK(2)),
            _ => {
                let k = lower
                    .strip_prefix("tau")
                    .and_then(|rest| rest.trim_start_matches('_').parse::<u32>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown arithmetic function `{s}`")))?;
                ArithKind::TauK(k).validate()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SieveOptions {
    pub segment_len: u64,
    /// Largest number of entries a single table may hold.
    pub max_entries: u64,
}

impl Default for SieveOptions {
    fn default() -> Self {
        SieveOptions {
            segment_len: 1 << 18,
            max_entries: 1 << 27,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithmeticTable {
    pub kind: ArithKind,
    pub lo: u64,
    pub hi: u64,
    /// Entry `i` belongs to `n = lo + i`.
    pub values: Vec<i64>,
}

impl ArithmeticTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: u64) -> Option<i64> {
        if n < self.lo || n >= self.hi {
            return None;
        }
        Some(self.values[(n - self.lo) as usize])
    }

    /// Concatenates tables over adjacent ranges of the same kind.
    pub fn concat(parts: Vec<ArithmeticTable>) -> Result<ArithmeticTable> {
        let mut iter = parts.into_iter();
        let mut acc = iter
            .next()
            .ok_or_else(|| Error::InvalidArgument("no tables to concatenate".into()))?;
        for t in iter {
            if t.kind != acc.kind || t.lo != acc.hi {
                return Err(Error::InvalidArgument(format!(
                    "table [{}, {}) does not continue [{}, {})",
                    t.lo, t.hi, acc.lo, acc.hi
                )));
            }
            acc.hi = t.hi;
            acc.values.extend(t.values);
        }
        Ok(acc)
    }
}

/// `log b` for a stored Λ prime base (0 when `b = 1`).
#[inline]
pub fn lambda_from_base(base: i64) -> f64 {
    if base <= 1 {
        0.0
    } else {
        (base as f64).ln()
    }
}

/// All primes `≤ limit`.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i.saturating_mul(i);
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes in `[lo, hi)` given every prime up to `√hi`.
pub fn primes_in_segment(lo: u64, hi: u64, base_primes: &[u64]) -> Vec<u64> {
    let lo = lo.max(2);
    if lo >= hi {
        return Vec::new();
    }
    let len = (hi - lo) as usize;
    let mut composite = vec![false; len];
    for &p in base_primes {
        if p.saturating_mul(p) >= hi {
            break;
        }
        let start = (p * p).max(lo.div_ceil(p) * p);
        let mut m = start;
        while m < hi {
            composite[(m - lo) as usize] = true;
            m += p;
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| lo + i as u64)
        .collect()
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

/// `C(a + k - 1, k - 1)`, the value of τ_k at a prime power `p^a`.
pub fn tau_k_prime_power(k: u32, a: u32) -> Option<u64> {
    let mut acc: u128 = 1;
    for i in 1..=(k as u128 - 1) {
        acc = acc * (a as u128 + i) / i;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Sieves arbitrary segments of one arithmetic function.
#[derive(Clone, Debug)]
pub struct SegmentSieve {
    kind: ArithKind,
    primes: Vec<u64>,
    /// τ_k at `p^a`, indexed by `a`.
    tau_powers: Vec<Option<u64>>,
}

impl SegmentSieve {
    /// Prepares to sieve any segment below `hi_max`.
    pub fn new(kind: ArithKind, hi_max: u64) -> Result<Self> {
        let kind = kind.validate()?;
        let tau_powers = match kind {
            ArithKind::TauK(k) => (0..64).map(|a| tau_k_prime_power(k, a)).collect(),
            _ => Vec::new(),
        };
        Ok(SegmentSieve {
            kind,
            primes: primes_up_to(isqrt(hi_max.saturating_sub(1))),
            tau_powers,
        })
    }

    pub fn kind(&self) -> ArithKind {
        self.kind
    }

    /// Entries for `n ∈ [lo, hi)`; `hi` must not exceed the `hi_max` given at
    /// construction.
    pub fn segment(&self, lo: u64, hi: u64) -> Result<Vec<i64>> {
        debug_assert!(lo >= 1 && lo <= hi);
        let len = (hi - lo) as usize;
        let mut rem: Vec<u64> = (lo..hi).collect();
        let mut acc: Vec<i64> = match self.kind {
            // 0: no prime seen yet, p > 0: only p seen, -1: two distinct primes
            ArithKind::Lambda => vec![0; len],
            ArithKind::Mu | ArithKind::TauK(_) => vec![1; len],
        };
        let mut overflow = false;
        for &p in &self.primes {
            if p * p >= hi {
                break;
            }
            let mut m = lo.div_ceil(p) * p;
            while m < hi {
                let i = (m - lo) as usize;
                let mut r = rem[i] / p;
                let mut e = 1u32;
                while r % p == 0 {
                    r /= p;
                    e += 1;
                }
                rem[i] = r;
                match self.kind {
                    ArithKind::Lambda => {
                        acc[i] = if acc[i] == 0 { p as i64 } else { -1 };
                    }
                    ArithKind::Mu => {
                        acc[i] = if e > 1 { 0 } else { -acc[i] };
                    }
                    ArithKind::TauK(_) => match self.tau_powers[e as usize]
                        .and_then(|f| acc[i].checked_mul(f as i64))
                    {
                        Some(v) => acc[i] = v,
                        None => overflow = true,
                    },
                }
                m += p;
            }
        }
        if overflow {
            return Err(Error::Overflow("tau_k sieve"));
        }
        for (i, a) in acc.iter_mut().enumerate() {
            let r = rem[i];
            match self.kind {
                ArithKind::Lambda => {
                    *a = match (*a, r > 1) {
                        (0, true) => r as i64,
                        (p, false) if p > 0 => p,
                        _ => 1,
                    };
                }
                ArithKind::Mu => {
                    if r > 1 {
                        *a = -*a;
                    }
                }
                ArithKind::TauK(k) => {
                    if r > 1 {
                        *a = a.checked_mul(k as i64).ok_or(Error::Overflow("tau_k sieve"))?;
                    }
                }
            }
        }
        Ok(acc)
    }
}

pub fn sieve_table(kind: ArithKind, lo: u64, hi: u64) -> Result<ArithmeticTable> {
    sieve_table_with(kind, lo, hi, &SieveOptions::default())
}

pub fn sieve_table_with(
    kind: ArithKind,
    lo: u64,
    hi: u64,
    opts: &SieveOptions,
) -> Result<ArithmeticTable> {
    if lo == 0 || lo >= hi {
        return Err(Error::EmptyRange { lo, hi });
    }
    let kind = kind.validate()?;
    if hi - lo > opts.max_entries {
        return Err(Error::BudgetExceeded {
            what: "sieve table entries",
            needed: hi - lo,
            limit: opts.max_entries,
        });
    }
    let sieve = SegmentSieve::new(kind, hi)?;
    let parts: Vec<Vec<i64>> = chunk_bounds(lo, hi, opts.segment_len.max(1))
        .into_par_iter()
        .map(|(a, b)| sieve.segment(a, b))
        .collect::<Result<_>>()?;
    Ok(ArithmeticTable {
        kind,
        lo,
        hi,
        values: parts.concat(),
    })
}

/// Value at a single `n` through its factorization.
pub fn point_value(kind: ArithKind, n: u64) -> Result<i64> {
    let kind = kind.validate()?;
    let f = factorize(n)?;
    Ok(match kind {
        ArithKind::Lambda => f.prime_base() as i64,
        ArithKind::Mu => {
            if f.factors.iter().any(|&(_, e)| e > 1) {
                0
            } else if f.factors.len() % 2 == 0 {
                1
            } else {
                -1
            }
        }
        ArithKind::TauK(k) => {
            let mut acc: i64 = 1;
            for &(_, e) in &f.factors {
                let t = tau_k_prime_power(k, e).ok_or(Error::Overflow("tau_k"))?;
                acc = acc
                    .checked_mul(i64::try_from(t).map_err(|_| Error::Overflow("tau_k"))?)
                    .ok_or(Error::Overflow("tau_k"))?;
            }
            acc
        }
    })
}

/// τ_k on `[0, limit]` by `k - 1` Dirichlet convolutions with the constant
/// function 1, starting from τ_1 = 1. Index 0 is unused.
pub fn tau_k_by_convolution(limit: u64, k: u32) -> Result<Vec<u64>> {
    if k < 2 {
        return Err(Error::InvalidOrder(k));
    }
    let n = limit as usize;
    let mut cur = vec![1u64; n + 1];
    cur[0] = 0;
    for _ in 1..k {
        let mut next = vec![0u64; n + 1];
        for d in 1..=n {
            let v = cur[d];
            let mut m = d;
            while m <= n {
                next[m] += v;
                m += d;
            }
        }
        cur = next;
    }
    Ok(cur)
}
