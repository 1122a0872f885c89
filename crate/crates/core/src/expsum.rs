//! Direct evaluation of the exponential sums that appear after the
//! Vaughan split, compared against the bound formulas of [`crate::exppair`],
//! plus the three-way classification of dyadic divisor factorizations.
//!
//! Every range is a dyadic block `(L, 2L]`. Phases are `e(h·x/(d + δ))`
//! with integer `x`, evaluated from the exact residue `h·x mod (d + δ)`.

use std::f64::consts::PI;
use std::io::Write;

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exppair::{eval_lwy_bound, eval_rs_bound, eval_vdc_bound, BoundEvaluation, BoundLemma, ExponentPair};
use crate::floor_sums::floor_root_power;
use crate::sieve::{isqrt, lambda_from_base, sieve_table, ArithKind};
use crate::summation::{par_chunked, ComplexSum, NeumaierSum};
use crate::vaughan::ComplexJson;
use crate::{Error, Result};

pub const DEFAULT_TERM_BUDGET: u64 = 1_000_000_000;
const CHUNK: u64 = 1 << 14;
const RATIO_FLAG: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// `Σ_{n~N} a_n e(hx/(n+δ))`.
    Monomial1D { n: u64 },
    /// `Σ_{m~M} Σ_{n~N} a_m b_n e(hx/(mn+δ))`.
    BilinearII { m: u64, n: u64 },
    /// `Σ_{h~H} Σ_{m~M} Σ_{n~N} a_n b_m e(hx/(mn+δ))`; `h` ranges over `(H, 2H]`
    /// instead of the scenario's fixed `h`.
    TripleHMN { h: u64, m: u64, n: u64 },
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Monomial1D { .. } => "monomial",
            Shape::BilinearII { .. } => "bilinear",
            Shape::TripleHMN { .. } => "triple",
        }
    }

    /// Lower ends of the dyadic ranges, outermost first.
    fn ranges(&self) -> Vec<(&'static str, u64)> {
        match *self {
            Shape::Monomial1D { n } => vec![("N", n)],
            Shape::BilinearII { m, n } => vec![("M", m), ("N", n)],
            Shape::TripleHMN { h, m, n } => vec![("H", h), ("M", m), ("N", n)],
        }
    }

    pub fn describe_ranges(&self) -> String {
        self.ranges()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficients {
    Unit,
    Mobius,
    /// `Λ(n)/log(2L)`, which stays in `[0, 1]` on `(L, 2L]`.
    Lambda,
    RandomUnimodular { seed: u64 },
}

impl Coefficients {
    pub fn parse(s: &str, seed: u64) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" | "1" => Ok(Coefficients::Unit),
            "mu" | "mobius" => Ok(Coefficients::Mobius),
            "lambda" => Ok(Coefficients::Lambda),
            "random" => Ok(Coefficients::RandomUnimodular { seed }),
            other => Err(Error::Parse(format!("unknown coefficient spec `{other}`"))),
        }
    }

    /// Values on `(lo, 2lo]`; `tag` separates the random streams of
    /// different variables.
    fn values(&self, lo: u64, tag: u64) -> Result<Vec<Complex64>> {
        let (a, b) = (lo + 1, 2 * lo + 1);
        Ok(match *self {
            Coefficients::Unit => vec![Complex64::new(1.0, 0.0); lo as usize],
            Coefficients::Mobius => sieve_table(ArithKind::Mu, a, b)?
                .values
                .into_iter()
                .map(|v| Complex64::new(v as f64, 0.0))
                .collect(),
            Coefficients::Lambda => {
                let norm = ((2 * lo) as f64).ln();
                sieve_table(ArithKind::Lambda, a, b)?
                    .values
                    .into_iter()
                    .map(|v| Complex64::new(lambda_from_base(v) / norm, 0.0))
                    .collect()
            }
            Coefficients::RandomUnimodular { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag);
                (0..lo)
                    .map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>()))
                    .collect()
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExpSumScenario {
    pub shape: Shape,
    pub x: u64,
    /// Frequency for the shapes without an `h` range.
    pub h: u64,
    pub delta: u8,
    pub coefficients: Coefficients,
}

impl ExpSumScenario {
    pub fn new(shape: Shape, x: u64, h: u64, delta: u8, coefficients: Coefficients) -> Result<Self> {
        if delta > 1 {
            return Err(Error::InvalidArgument(format!("delta must be 0 or 1, got {delta}")));
        }
        if h == 0 && !matches!(shape, Shape::TripleHMN { .. }) {
            return Err(Error::ZeroArgument("h"));
        }
        for (name, lo) in shape.ranges() {
            if lo == 0 {
                return Err(Error::InvalidArgument(format!("range {name} must have lower end ≥ 1")));
            }
            if lo > u32::MAX as u64 {
                return Err(Error::InvalidArgument(format!("range {name} = {lo} is too large")));
            }
        }
        Ok(ExpSumScenario {
            shape,
            x,
            h,
            delta,
            coefficients,
        })
    }

    pub fn terms(&self) -> Option<u64> {
        self.shape
            .ranges()
            .iter()
            .try_fold(1u64, |acc, (_, l)| acc.checked_mul(*l))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpSumResult {
    pub value: ComplexJson,
    pub modulus: f64,
    pub terms: u64,
    /// `Σ |coefficient product|`, the trivial bound.
    pub coefficient_mass: f64,
}

/// `e(num/den)` from an exact residue.
#[inline]
fn phase(num: u128, den: u128) -> Complex64 {
    let r = (num % den) as f64 / den as f64;
    let t = 2.0 * PI * r;
    Complex64::new(t.cos(), t.sin())
}

fn mass(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).collect::<NeumaierSum>().value()
}

pub fn compute_expsum(s: &ExpSumScenario) -> Result<ExpSumResult> {
    compute_expsum_with_budget(s, DEFAULT_TERM_BUDGET)
}

/// Sums in ascending index order within fixed chunks of the outermost
/// variable; chunk partials merge left to right.
pub fn compute_expsum_with_budget(s: &ExpSumScenario, budget: u64) -> Result<ExpSumResult> {
    let terms = s.terms().unwrap_or(u64::MAX);
    if terms > budget {
        return Err(Error::BudgetExceeded {
            what: "exponential sum terms",
            needed: terms,
            limit: budget,
        });
    }
    let x = s.x as u128;
    let delta = s.delta as u128;
    let merge = |a: &mut ComplexSum, b: ComplexSum| a.merge(&b);
    let (value, coefficient_mass) = match s.shape {
        Shape::Monomial1D { n } => {
            let a = s.coefficients.values(n, 1)?;
            let hx = s.h as u128 * x;
            let v = par_chunked(n + 1, 2 * n + 1, CHUNK, |lo, hi| {
                let mut acc = ComplexSum::new();
                for d in lo..hi {
                    acc.add(a[(d - n - 1) as usize] * phase(hx, d as u128 + delta));
                }
                acc
            }, merge);
            (v, mass(&a))
        }
        Shape::BilinearII { m, n } => {
            let a = s.coefficients.values(m, 1)?;
            let b = s.coefficients.values(n, 2)?;
            let hx = s.h as u128 * x;
            let rows = (CHUNK / n).max(1);
            let v = par_chunked(m + 1, 2 * m + 1, rows, |lo, hi| {
                let mut acc = ComplexSum::new();
                for mm in lo..hi {
                    let am = a[(mm - m - 1) as usize];
                    for nn in n + 1..=2 * n {
                        let den = mm as u128 * nn as u128 + delta;
                        acc.add(am * b[(nn - n - 1) as usize] * phase(hx, den));
                    }
                }
                acc
            }, merge);
            (v, mass(&a) * mass(&b))
        }
        Shape::TripleHMN { h, m, n } => {
            let a = s.coefficients.values(n, 2)?;
            let b = s.coefficients.values(m, 1)?;
            let v = par_chunked(h + 1, 2 * h + 1, 1, |lo, hi| {
                let mut acc = ComplexSum::new();
                for hh in lo..hi {
                    let hx = hh as u128 * x;
                    for mm in m + 1..=2 * m {
                        let bm = b[(mm - m - 1) as usize];
                        for nn in n + 1..=2 * n {
                            let den = mm as u128 * nn as u128 + delta;
                            acc.add(a[(nn - n - 1) as usize] * bm * phase(hx, den));
                        }
                    }
                }
                acc
            }, merge);
            (v, h as f64 * mass(&a) * mass(&b))
        }
    };
    let value = value.map(|acc| acc.value()).unwrap_or_default();
    Ok(ExpSumResult {
        value: value.into(),
        modulus: value.norm(),
        terms,
        coefficient_mass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundComparison {
    pub measured: f64,
    pub trivial_bound: f64,
    pub bound: BoundEvaluation,
    /// `measured / bound`; a report, not a claim that it is at most 1.
    pub ratio: f64,
    /// Set when `ratio > 10³`.
    pub flagged: bool,
}

/// Size of the phase `h·x/(d+δ)` at the bottom of the ranges, the `X`
/// (or `Y`) a lemma sees.
fn phase_size(s: &ExpSumScenario) -> f64 {
    match s.shape {
        Shape::Monomial1D { n } => s.h as f64 * s.x as f64 / n as f64,
        Shape::BilinearII { m, n } => s.h as f64 * s.x as f64 / (m as f64 * n as f64),
        Shape::TripleHMN { h, m, n } => h as f64 * s.x as f64 / (m as f64 * n as f64),
    }
}

pub fn bound_comparison(
    s: &ExpSumScenario,
    lemma: BoundLemma,
    pair: Option<&ExponentPair>,
) -> Result<BoundComparison> {
    let need_pair = || pair.ok_or_else(|| Error::MissingParameter("exponent pair".into()));
    let incompatible = || Error::IncompatibleShape {
        shape: s.shape.name(),
        bound: lemma.label(),
    };
    let big_x = phase_size(s);
    let bound = match (s.shape, lemma) {
        (Shape::Monomial1D { n }, BoundLemma::VanDerCorput) => eval_vdc_bound(need_pair()?, big_x, n as f64)?,
        (Shape::BilinearII { m, n }, BoundLemma::Trilinear) => {
            eval_lwy_bound(need_pair()?, big_x, 1.0, m as f64, n as f64)?
        }
        (Shape::TripleHMN { h, m, n }, BoundLemma::Trilinear) => {
            eval_lwy_bound(need_pair()?, big_x, h as f64, m as f64, n as f64)?
        }
        (Shape::BilinearII { m, n }, BoundLemma::TrilinearFixed) => {
            eval_rs_bound(big_x, 1.0, m as f64, n as f64)?
        }
        (Shape::TripleHMN { h, m, n }, BoundLemma::TrilinearFixed) => {
            eval_rs_bound(big_x, h as f64, m as f64, n as f64)?
        }
        _ => return Err(incompatible()),
    };
    let r = compute_expsum(s)?;
    let ratio = r.modulus / bound.value;
    Ok(BoundComparison {
        measured: r.modulus,
        trivial_bound: r.coefficient_mass,
        bound,
        ratio,
        flagged: ratio > RATIO_FLAG,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    /// `D_k > D^{2/3}`.
    I,
    /// `D^{1/3} ≤ D_k ≤ D^{2/3}`.
    II,
    /// `D_k < D^{1/3}`; factors are merged.
    III,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseSplit {
    pub k: usize,
    pub d: u64,
    pub factors: Vec<u64>,
    pub case: Case,
    /// 1-based least `t` with `(D_1⋯D_t)³ > D`, in case III.
    pub merge_index: Option<usize>,
    /// `D_1⋯D_t` and the product of the remaining factors, in case III.
    pub l1: Option<String>,
    pub l2: Option<String>,
}

fn cube(v: &BigUint) -> BigUint {
    v * v * v
}

/// Classifies `D_1 ≤ … ≤ D_k` with `D ≤ ΠD_i < 2^k D`. All comparisons are
/// exact integer comparisons of cubes against `D` and `D²`; ties go to
/// case II.
pub fn classify_factorization(k: usize, d: u64, factors: &[u64]) -> Result<CaseSplit> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if factors.len() != k {
        return Err(Error::InvalidArgument(format!(
            "expected {k} factors, got {}",
            factors.len()
        )));
    }
    if d == 0 || factors.contains(&0) {
        return Err(Error::ZeroArgument("factor"));
    }
    if factors.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("factors must be in nondecreasing order".into()));
    }
    let big_d = BigUint::from(d);
    let product: BigUint = factors.iter().map(|&f| BigUint::from(f)).product();
    let upper = &big_d << k;
    if product < big_d || product >= upper {
        return Err(Error::InvalidArgument(format!(
            "factor product {product} is outside [D, 2^k D) for D = {d}"
        )));
    }
    let dk3 = cube(&BigUint::from(factors[k - 1]));
    let d2 = &big_d * &big_d;
    let case = if dk3 > d2 {
        Case::I
    } else if dk3 >= big_d {
        Case::II
    } else {
        Case::III
    };
    let (mut merge_index, mut l1, mut l2) = (None, None, None);
    if case == Case::III {
        let mut acc = BigUint::from(1u32);
        for (i, &f) in factors.iter().enumerate() {
            acc *= f;
            if cube(&acc) > big_d {
                merge_index = Some(i + 1);
                let rest: BigUint = factors[i + 1..].iter().map(|&f| BigUint::from(f)).product();
                l1 = Some(acc.to_string());
                l2 = Some(rest.to_string());
                break;
            }
        }
    }
    Ok(CaseSplit {
        k,
        d,
        factors: factors.to_vec(),
        case,
        merge_index,
        l1,
        l2,
    })
}

/// The trilinear scenario at the balance point: `D = ⌊x^{8/15}⌋`,
/// `H = max(1, ⌊D²/x^{1−ϱ}⌋)` with `ϱ = 1/195`, and `M = N = ⌊√(D/2)⌋`
/// so that `mn` covers a block of size about `D`.
pub fn regime_scenario(x: u64, coefficients: Coefficients) -> Result<ExpSumScenario> {
    let d = floor_root_power(x, 8, 15);
    let rho = 1.0 / 195.0;
    let h = ((d as f64).powi(2) / (x as f64).powf(1.0 - rho)).floor().max(1.0) as u64;
    let mn = isqrt(d / 2).max(1);
    ExpSumScenario::new(Shape::TripleHMN { h, m: mn, n: mn }, x, 1, 0, coefficients)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub id: String,
    pub shape: &'static str,
    pub ranges: String,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub case: String,
}

impl ReportRow {
    pub fn new(id: impl Into<String>, s: &ExpSumScenario, cmp: &BoundComparison) -> Self {
        let case = match s.shape {
            Shape::BilinearII { m, n } | Shape::TripleHMN { m, n, .. } => {
                let (a, b) = (m.min(n), m.max(n));
                classify_factorization(2, a * b, &[a, b])
                    .map(|c| c.case.label().to_string())
                    .unwrap_or_else(|_| "-".into())
            }
            Shape::Monomial1D { .. } => "-".into(),
        };
        ReportRow {
            id: id.into(),
            shape: s.shape.name(),
            ranges: s.shape.describe_ranges(),
            measured: cmp.measured,
            bound: cmp.bound.value,
            ratio: cmp.ratio,
            case,
        }
    }
}

/// CSV with columns `id,shape,ranges,measured,bound,ratio,case`.
pub fn write_report_csv<W: Write>(rows: &[ReportRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "id,shape,ranges,measured,bound,ratio,case")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.12e},{:.12e},{:.12e},{}",
            r.id, r.shape, r.ranges, r.measured, r.bound, r.ratio, r.case
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn mono(n: u64, x: u64, delta: u8, c: Coefficients) -> ExpSumScenario {
        ExpSumScenario::new(Shape::Monomial1D { n }, x, 1, delta, c).unwrap()
    }

    #[test]
    fn zero_phase_counts_terms() {
        let r = compute_expsum(&mono(1000, 0, 0, Coefficients::Unit)).unwrap();
        assert!((r.value.re - 1000.0).abs() < 1e-9);
        assert!(r.value.im.abs() < 1e-9);
        let s = ExpSumScenario::new(Shape::BilinearII { m: 10, n: 20 }, 0, 3, 1, Coefficients::Unit).unwrap();
        assert!((compute_expsum(&s).unwrap().modulus - 200.0).abs() < 1e-9);
    }

    #[test]
    fn reordered_sum_agrees() {
        let s = mono(1000, 1_000_000, 0, Coefficients::Unit);
        let r = compute_expsum(&s).unwrap();
        assert!(r.modulus <= 1000.0);
        let (mut re, mut im) = (0.0, 0.0);
        for d in (1001..=2000u64).rev() {
            let t = 2.0 * PI * ((1_000_000 % d) as f64 / d as f64);
            re += t.cos();
            im += t.sin();
        }
        let z = Complex64::new(re, im);
        assert!((z.norm() - r.modulus).abs() <= 1e-9 * r.modulus.max(1.0));
    }

    #[test]
    fn random_coefficients_are_seeded() {
        let a = Coefficients::RandomUnimodular { seed: 7 }.values(50, 1).unwrap();
        let b = Coefficients::RandomUnimodular { seed: 7 }.values(50, 1).unwrap();
        let c = Coefficients::RandomUnimodular { seed: 8 }.values(50, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn lambda_coefficients_bounded() {
        let v = Coefficients::Lambda.values(1000, 1).unwrap();
        assert!(v.iter().all(|z| z.re >= 0.0 && z.re <= 1.0));
    }

    #[test]
    fn budget_is_enforced() {
        let s = ExpSumScenario::new(Shape::BilinearII { m: 1000, n: 1000 }, 5, 1, 0, Coefficients::Unit).unwrap();
        assert!(matches!(
            compute_expsum_with_budget(&s, 10_000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn shape_and_lemma_must_match() {
        let pair = ExponentPair::new(q(1, 6), q(2, 3)).unwrap();
        let s = mono(100, 10_000, 0, Coefficients::Unit);
        assert!(matches!(
            bound_comparison(&s, BoundLemma::Trilinear, Some(&pair)),
            Err(Error::IncompatibleShape { .. })
        ));
        assert!(matches!(
            bound_comparison(&s, BoundLemma::VanDerCorput, None),
            Err(Error::MissingParameter(_))
        ));
        let cmp = bound_comparison(&s, BoundLemma::VanDerCorput, Some(&pair)).unwrap();
        assert!(cmp.ratio.is_finite());
        assert!(cmp.measured <= cmp.trivial_bound + 1e-9);
    }

    #[test]
    fn classification_examples() {
        let c = classify_factorization(2, 1 << 20, &[1 << 6, 1 << 14]).unwrap();
        assert_eq!(c.case, Case::I);
        let c = classify_factorization(3, 1 << 21, &[1 << 7, 1 << 7, 1 << 7]).unwrap();
        assert_eq!(c.case, Case::II);
        let c = classify_factorization(4, 1 << 24, &[1 << 4, 1 << 5, 1 << 7, 1 << 8]).unwrap();
        assert_eq!(c.case, Case::II);
        let c = classify_factorization(4, 1 << 24, &[1 << 5, 1 << 6, 1 << 6, 1 << 7]).unwrap();
        assert_eq!(c.case, Case::III);
        assert_eq!(c.merge_index, Some(2));
        assert_eq!(c.l1.as_deref(), Some("2048"));
        assert_eq!(c.l2.as_deref(), Some("8192"));
    }

    #[test]
    fn classification_errors() {
        assert!(classify_factorization(2, 1 << 20, &[1 << 14, 1 << 6]).is_err());
        assert!(classify_factorization(3, 1 << 20, &[1 << 6, 1 << 14]).is_err());
        assert!(classify_factorization(2, 1 << 20, &[1 << 2, 1 << 3]).is_err());
        assert!(classify_factorization(1, 4, &[4]).is_err());
    }

    #[test]
    fn regime_row() {
        let s = regime_scenario(100_000_000, Coefficients::Mobius).unwrap();
        let Shape::TripleHMN { h, m, n } = s.shape else { panic!("shape") };
        assert!(h >= 1 && m == n && m > 10);
        let pair = ExponentPair::new(q(13, 84), q(55, 84)).unwrap();
        let cmp = bound_comparison(&s, BoundLemma::Trilinear, Some(&pair)).unwrap();
        let row = ReportRow::new("regime", &s, &cmp);
        assert_eq!(row.case, "II");
        let mut buf = Vec::new();
        write_report_csv(&[row], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("id,shape,ranges"));
    }
}
