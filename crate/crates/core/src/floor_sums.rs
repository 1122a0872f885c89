//! Floor-quotient sums `S_f(x) = Σ_{n≤x} f(⌊x/n⌋)`.
//!
//! Two independent evaluation paths are provided: a literal loop over `n`
//! backed by a sieved table, and a walk over the `O(√x)` blocks on which
//! `⌊x/n⌋` is constant, backed by pointwise factorization. The dual form
//! splits the sum at `n = N` and rewrites the tail through the sawtooth
//! `ψ(t) = t − ⌊t⌋ − 1/2`.
//!
//! Λ-sums are real and use compensated accumulation; μ and τ_k sums are
//! exact `i128`.

use std::io::Write;

use serde::Serialize;

use crate::constants::ConstantBracket;
use crate::rational::{q, qi, Q};
use crate::sieve::{lambda_from_base, point_value, sieve_table, ArithKind, ArithmeticTable};
use crate::summation::{par_chunked, NeumaierSum};
use crate::{Error, Result};

const DIRECT_CHUNK: u64 = 1 << 16;
const BLOCK_CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    /// Common value of `⌊x/n⌋` on the block.
    pub q: u64,
    pub n_lo: u64,
    pub n_hi: u64,
}

impl Block {
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        self.n_hi - self.n_lo + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockDecomposition {
    pub x: u64,
    /// Ordered by increasing `n`, hence strictly decreasing `q`.
    pub blocks: Vec<Block>,
}

pub fn distinct_quotients(x: u64) -> Result<BlockDecomposition> {
    if x == 0 {
        return Err(Error::ZeroArgument("x"));
    }
    let mut blocks = Vec::with_capacity(2 * crate::sieve::isqrt(x) as usize + 1);
    let mut n = 1;
    while n <= x {
        let q = x / n;
        let n_hi = x / q;
        blocks.push(Block { q, n_lo: n, n_hi });
        n = n_hi + 1;
    }
    Ok(BlockDecomposition { x, blocks })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SumValue {
    Exact(i128),
    Real(f64),
}

impl SumValue {
    pub fn as_f64(&self) -> f64 {
        match *self {
            SumValue::Exact(v) => v as f64,
            SumValue::Real(v) => v,
        }
    }

    pub fn exact(&self) -> Option<i128> {
        match *self {
            SumValue::Exact(v) => Some(v),
            SumValue::Real(_) => None,
        }
    }

    /// Exact kinds compare for equality; real ones by relative difference.
    pub fn agrees_with(&self, other: &SumValue, rel_tol: f64) -> bool {
        match (self, other) {
            (SumValue::Exact(a), SumValue::Exact(b)) => a == b,
            _ => {
                let (a, b) = (self.as_f64(), other.as_f64());
                (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
            }
        }
    }
}

impl std::fmt::Display for SumValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SumValue::Exact(v) => write!(f, "{v}"),
            SumValue::Real(v) => write!(f, "{v:.12}"),
        }
    }
}

fn is_real(kind: ArithKind) -> bool {
    matches!(kind, ArithKind::Lambda)
}

/// Accumulates `count · f(q)` terms for one kind.
#[derive(Clone, Copy, Debug)]
enum Acc {
    Exact(i128),
    Real(NeumaierSum),
}

impl Acc {
    fn new(kind: ArithKind) -> Self {
        if is_real(kind) {
            Acc::Real(NeumaierSum::new())
        } else {
            Acc::Exact(0)
        }
    }

    /// `raw` is the stored table value (prime base for Λ).
    #[inline]
    fn add(&mut self, raw: i64, count: u64) {
        match self {
            Acc::Exact(s) => *s += raw as i128 * count as i128,
            Acc::Real(s) => {
                if raw > 1 {
                    s.add(lambda_from_base(raw) * count as f64);
                }
            }
        }
    }

    fn merge(&mut self, other: Acc) {
        match (self, other) {
            (Acc::Exact(a), Acc::Exact(b)) => *a += b,
            (Acc::Real(a), Acc::Real(b)) => a.merge(&b),
            _ => unreachable!("mixed accumulators"),
        }
    }

    fn finish(self) -> SumValue {
        match self {
            Acc::Exact(v) => SumValue::Exact(v),
            Acc::Real(s) => SumValue::Real(s.value()),
        }
    }
}

fn check_summand(kind: ArithKind) -> Result<ArithKind> {
    kind.validate()
}

/// Direct evaluator holding a sieved table of `f` on `[1, limit)`.
#[derive(Clone, Debug)]
pub struct DirectEvaluator {
    table: ArithmeticTable,
}

impl DirectEvaluator {
    pub fn new(kind: ArithKind, limit: u64) -> Result<Self> {
        let kind = check_summand(kind)?;
        Ok(DirectEvaluator {
            table: sieve_table(kind, 1, limit.max(2))?,
        })
    }

    pub fn from_table(table: ArithmeticTable) -> Result<Self> {
        if table.lo != 1 {
            return Err(Error::InvalidArgument("direct table must start at 1".into()));
        }
        Ok(DirectEvaluator { table })
    }

    pub fn kind(&self) -> ArithKind {
        self.table.kind
    }

    /// Largest `x` this evaluator can sum.
    pub fn max_x(&self) -> u64 {
        self.table.hi - 1
    }

    /// Literal loop `Σ_{n≤x} f(⌊x/n⌋)`.
    pub fn sum(&self, x: u64) -> Result<SumValue> {
        if x == 0 {
            return Err(Error::ZeroArgument("x"));
        }
        if x > self.max_x() {
            return Err(Error::BudgetExceeded {
                what: "direct-sum table entries",
                needed: x + 1,
                limit: self.table.hi,
            });
        }
        let kind = self.kind();
        let values = &self.table.values;
        let acc = par_chunked(
            1,
            x + 1,
            DIRECT_CHUNK,
            |a, b| {
                let mut acc = Acc::new(kind);
                for n in a..b {
                    acc.add(values[(x / n - 1) as usize], 1);
                }
                acc
            },
            |acc, p| acc.merge(p),
        )
        .expect("x >= 1 gives a nonempty range");
        Ok(acc.finish())
    }
}

pub fn sum_direct(kind: ArithKind, x: u64) -> Result<SumValue> {
    if x == 0 {
        return Err(Error::ZeroArgument("x"));
    }
    DirectEvaluator::new(kind, x + 1)?.sum(x)
}

/// `Σ_blocks f(q)·(n_hi − n_lo + 1)` with `f(q)` from factorization.
pub fn sum_blocked(kind: ArithKind, x: u64) -> Result<SumValue> {
    let kind = check_summand(kind)?;
    let dec = distinct_quotients(x)?;
    let chunks: Vec<&[Block]> = dec.blocks.chunks(BLOCK_CHUNK).collect();
    let acc = par_chunked(
        0,
        chunks.len() as u64,
        1,
        |i, _| -> Result<Acc> {
            let mut acc = Acc::new(kind);
            for b in chunks[i as usize] {
                acc.add(point_value(kind, b.q)?, b.len());
            }
            Ok(acc)
        },
        |acc, p| {
            if let (Ok(a), Ok(b)) = (acc.as_mut(), p.as_ref()) {
                a.merge(*b);
            } else if acc.is_ok() {
                *acc = p;
            }
        },
    )
    .expect("at least one block")?;
    Ok(acc.finish())
}

/// `t − ⌊t⌋ − 1/2`, in `[−1/2, 1/2)`.
pub fn psi(t: f64) -> f64 {
    t - t.floor() - 0.5
}

pub fn psi_q(t: &Q) -> Q {
    t - t.floor() - q(1, 2)
}

/// `⌊x/m⌋` written as `x/m − ψ(x/m) − 1/2`.
pub fn floor_via_psi(x: u64, m: u64) -> Q {
    let t = Q::new((x as i64).into(), (m as i64).into());
    &t - psi_q(&t) - q(1, 2)
}

/// `#{n : ⌊x/n⌋ = d}` written as `x/d − x/(d+1) − ψ(x/d) + ψ(x/(d+1))`.
pub fn count_via_psi(x: u64, d: u64) -> Q {
    let a = Q::new((x as i64).into(), (d as i64).into());
    let b = Q::new((x as i64).into(), (d as i64 + 1).into());
    &a - &b - psi_q(&a) + psi_q(&b)
}

#[derive(Clone, Debug, Serialize)]
pub struct DualSum {
    pub x: u64,
    pub split: u64,
    /// `Σ_{n≤N} f(⌊x/n⌋)`.
    pub s1: SumValue,
    /// `Σ_{N<n≤x} f(⌊x/n⌋)`, evaluated as a sum over `d = ⌊x/n⌋`.
    pub s2: SumValue,
    pub total: SumValue,
    /// Number of `d` values in the tail, i.e. `⌊x/(N+1)⌋`.
    pub tail_terms: u64,
    /// Largest tail `d` when its `n`-interval straddles `N`.
    pub straddling_d: Option<u64>,
    /// Tail rows whose ψ-form differs from the integer count (always 0).
    pub psi_form_mismatches: u64,
    /// Smooth part of the tail, `Σ f(d)(x/d − x/(d+1))` plus the boundary row.
    pub smooth_part: f64,
    /// Sawtooth part of the tail, `Σ f(d)(ψ(x/(d+1)) − ψ(x/d))` plus the boundary row.
    pub psi_part: f64,
}

/// Splits `S_f(x)` at `n = split` and evaluates the tail through the count of
/// each quotient value.
///
/// `{n : ⌊x/n⌋ = d}` is `(⌊x/(d+1)⌋, ⌊x/d⌋]`; the tail keeps the part with
/// `n > N`, so `d` runs over `1..=⌊x/(N+1)⌋` and only the last `d` can have
/// its interval cut by `N`.
pub fn sum_dual(kind: ArithKind, x: u64, split: u64) -> Result<DualSum> {
    let kind = check_summand(kind)?;
    if x == 0 || split == 0 {
        return Err(Error::ZeroArgument("x and N"));
    }
    if split > x {
        return Err(Error::Domain(format!("split N = {split} exceeds x = {x}")));
    }
    let mut s1 = Acc::new(kind);
    for n in 1..=split {
        s1.add(point_value(kind, x / n)?, 1);
    }

    let d_max = x / (split + 1);
    let mut s2 = Acc::new(kind);
    let mut smooth = NeumaierSum::new();
    let mut sawtooth = NeumaierSum::new();
    let mut mismatches = 0;
    let mut straddling = None;
    if d_max > 0 {
        let table = sieve_table(kind, 1, d_max + 1)?;
        let split_q = qi(split as i64);
        for d in 1..=d_max {
            let raw = table.values[(d - 1) as usize];
            let next_lo = x / (d + 1);
            let (count, psi_form, smooth_term, psi_term) = if next_lo >= split {
                let count = x / d - next_lo;
                let xd = x as f64 / d as f64;
                let xd1 = x as f64 / (d + 1) as f64;
                (
                    count,
                    count_via_psi(x, d),
                    xd - xd1,
                    psi(xd1) - psi(xd),
                )
            } else {
                straddling = Some(d);
                let count = x / d - split;
                let xd = x as f64 / d as f64;
                (
                    count,
                    floor_via_psi(x, d) - &split_q,
                    xd - split as f64 - 0.5,
                    -psi(xd),
                )
            };
            if psi_form != qi(count as i64) {
                mismatches += 1;
            }
            s2.add(raw, count);
            let weight = match kind {
                ArithKind::Lambda => lambda_from_base(raw),
                _ => raw as f64,
            };
            if weight != 0.0 {
                smooth.add(weight * smooth_term);
                sawtooth.add(weight * psi_term);
            }
        }
    }
    let mut total = s1;
    total.merge(s2);
    Ok(DualSum {
        x,
        split,
        s1: s1.finish(),
        s2: s2.finish(),
        total: total.finish(),
        tail_terms: d_max,
        straddling_d: straddling,
        psi_form_mismatches: mismatches,
        smooth_part: smooth.value(),
        psi_part: sawtooth.value(),
    })
}

/// `⌊x^{num/den}⌋` computed exactly.
pub fn floor_root_power(x: u64, num: u32, den: u32) -> u64 {
    use num_bigint::BigUint;
    let target = BigUint::from(x).pow(num);
    let guess = (x as f64).powf(num as f64 / den as f64) as u64;
    let fits = |n: u64| BigUint::from(n).pow(den) <= target;
    let mut n = guess.saturating_sub(2);
    while !fits(n) {
        n -= 1;
    }
    while fits(n + 1) {
        n += 1;
    }
    n
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorRow {
    pub x: u64,
    pub s: SumValue,
    /// `S − C_mid·x`.
    pub e: f64,
    /// Range of `S − C·x` over the constant bracket.
    pub e_lo: f64,
    pub e_hi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorSeries {
    pub kind: ArithKind,
    pub c_lo: f64,
    pub c_hi: f64,
    pub rows: Vec<ErrorRow>,
}

impl ErrorSeries {
    pub fn c_mid(&self) -> f64 {
        0.5 * (self.c_lo + self.c_hi)
    }

    /// CSV with columns `x,S,E,C_lo,C_hi`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,S,E,C_lo,C_hi")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{:.6},{:.17e},{:.17e}",
                r.x, r.s, r.e, self.c_lo, self.c_hi
            )?;
        }
        Ok(())
    }
}

/// Geometric grid `lo, 2·lo, 4·lo, … ≤ hi`.
pub fn geometric_grid(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = lo.max(1);
    while x <= hi {
        out.push(x);
        x = match x.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    out
}

/// Tabulates `E(x) = S_f(x) − C_f·x` with `S_f` from [`sum_blocked`].
///
/// With `resolution` set, fails when the bracket width times `max(xs)`
/// exceeds it.
pub fn error_series(
    bracket: &ConstantBracket,
    xs: &[u64],
    resolution: Option<f64>,
) -> Result<ErrorSeries> {
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("x grid must be strictly increasing".into()));
    }
    if let (Some(res), Some(&x_max)) = (resolution, xs.last()) {
        let width = bracket.hi - bracket.lo;
        if width * x_max as f64 > res {
            return Err(Error::BracketTooWide {
                width,
                x: x_max,
                resolution: res,
            });
        }
    }
    let mid = 0.5 * (bracket.lo + bracket.hi);
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        let s = sum_blocked(bracket.kind, x)?;
        let sf = s.as_f64();
        let xf = x as f64;
        rows.push(ErrorRow {
            x,
            s,
            e: sf - mid * xf,
            e_lo: sf - bracket.hi * xf,
            e_hi: sf - bracket.lo * xf,
        });
    }
    Ok(ErrorSeries {
        kind: bracket.kind,
        c_lo: bracket.lo,
        c_hi: bracket.hi,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log–log fit.
    pub residual: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Least-squares line through `(log x, log |e|)`, skipping `|e| < 1`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, e)| *x > 0.0 && e.abs() >= 1.0)
        .map(|&(x, e)| (x.ln(), e.abs().ln()))
        .collect();
    let excluded = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(Error::InsufficientPoints {
            usable: usable.len(),
            excluded,
        });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all fit abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(ExponentFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        used: usable.len(),
        excluded,
    })
}

pub fn fit_exponent(series: &ErrorSeries) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = series.rows.iter().map(|r| (r.x as f64, r.e)).collect();
    fit_power_law(&pts)
}

/// `⌊x/n⌋` for all `n ≤ x` by a plain scan; test oracle for block counts.
pub fn distinct_quotients_by_scan(x: u64) -> usize {
    let mut count = 0;
    let mut prev = None;
    for n in 1..=x {
        let q = x / n;
        if prev != Some(q) {
            count += 1;
            prev = Some(q);
        }
    }
    count
}

impl DualSum {
    /// `smooth + psi` reconstructs `s2` up to rounding.
    pub fn psi_reconstruction(&self) -> f64 {
        self.smooth_part + self.psi_part
    }
}
