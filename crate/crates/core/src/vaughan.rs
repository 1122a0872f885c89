//! A concrete Vaughan decomposition of `Σ_{D<d≤D₁} Λ(d) g(d)`.
//!
//! With `U = ⌊D^{1/3}⌋` and `n > U`,
//!
//! ```text
//! Λ(n) = (μ_{≤U} ∗ log)(n) − (μ_{≤U} ∗ Λ_{≤U} ∗ 1)(n) + (μ_{>U} ∗ Λ_{>U} ∗ 1)(n)
//! ```
//!
//! which gives three sums:
//!
//! * `T1 = Σ_{m≤U} μ(m) Σ_{D<mk≤D₁} log(k) g(mk)` (type I, with log),
//! * `T2 = Σ_{m≤U²} c(m) Σ_{D<mk≤D₁} g(mk)`, `c(m) = Σ_{ab=m, a,b≤U} μ(a)Λ(b)` (type I),
//! * `T3 = Σ_{m>U, k>U, D<mk≤D₁} μ(m) w(k) g(mk)`, `w(k) = Σ_{b|k, b>U} Λ(b)` (type II),
//!
//! and `T1 − T2 + T3 = Σ Λ(d) g(d)`. The coefficients `c` and `w` are kept
//! as integer combinations of `log p`, so logarithms are only taken when a
//! value is accumulated.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::factor::factorize;
use crate::sieve::{lambda_from_base, sieve_table, ArithKind};
use crate::summation::{ComplexSum, NeumaierSum};
use crate::{Error, Result};

/// `Σ coef · log p` over primes `p`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LogCombination {
    terms: BTreeMap<u64, i64>,
}

impl LogCombination {
    pub fn add(&mut self, p: u64, coef: i64) {
        let e = self.terms.entry(p).or_insert(0);
        *e += coef;
        if *e == 0 {
            self.terms.remove(&p);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.terms.iter().map(|(&p, &c)| (p, c))
    }

    pub fn value(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&p, &c)| c as f64 * (p as f64).ln())
            .collect::<NeumaierSum>()
            .value()
    }
}

pub fn cube_root_floor(n: u64) -> u64 {
    let mut r = (n as f64).cbrt() as u64;
    while r.checked_pow(3).is_none_or(|c| c > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(3).is_some_and(|c| c <= n) {
        r += 1;
    }
    r
}

/// `c(m)` for `m ≤ U²`, indexed by `m`.
pub fn type_one_coefficients(u: u64) -> Result<Vec<LogCombination>> {
    let mu = sieve_table(ArithKind::Mu, 1, u + 1)?;
    let base = sieve_table(ArithKind::Lambda, 1, u + 1)?;
    let mut c = vec![LogCombination::default(); (u * u + 1) as usize];
    for a in 1..=u {
        let mu_a = mu.values[(a - 1) as usize];
        if mu_a == 0 {
            continue;
        }
        for b in 2..=u {
            let p = base.values[(b - 1) as usize];
            if p > 1 {
                c[(a * b) as usize].add(p as u64, mu_a);
            }
        }
    }
    Ok(c)
}

/// `w(k) = Σ_{b|k, b>U} Λ(b)`.
pub fn type_two_weight(k: u64, u: u64) -> Result<LogCombination> {
    let mut w = LogCombination::default();
    for (p, e) in factorize(k)?.factors {
        let mut pj = 1u64;
        for _ in 0..e {
            pj *= p;
            if pj > u {
                w.add(p, 1);
            }
        }
    }
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

/// Coefficient tables of one decomposition.
#[derive(Clone, Debug)]
pub struct VaughanTables {
    pub d: u64,
    pub d_upper: u64,
    pub u: u64,
    /// μ(m) for `m ≤ D₁/(U+1)`, indexed by `m`.
    mu: Vec<i64>,
    /// `c(m)` for `m ≤ U²`.
    pub c: Vec<LogCombination>,
    /// `w(k)` for `U < k ≤ D₁/(U+1)`, indexed by `k`.
    w: Vec<LogCombination>,
    /// Prime bases on `(D, D₁]`, indexed by `d − D − 1`.
    bases: Vec<i64>,
}

impl VaughanTables {
    pub fn new(d: u64, d_upper: u64) -> Result<Self> {
        if d <= 100 {
            return Err(Error::Domain(format!("decomposition needs D > 100, got {d}")));
        }
        if d_upper <= d || d_upper > 2 * d {
            return Err(Error::Domain(format!(
                "upper limit D1 = {d_upper} must lie in (D, 2D] for D = {d}"
            )));
        }
        let u = cube_root_floor(d);
        let m_max = d_upper / (u + 1);
        let mu_table = sieve_table(ArithKind::Mu, 1, m_max.max(u) + 1)?;
        let mut mu = vec![0];
        mu.extend(mu_table.values);
        let mut w = vec![LogCombination::default(); (m_max + 1) as usize];
        for k in (u + 1)..=m_max {
            w[k as usize] = type_two_weight(k, u)?;
        }
        let bases = sieve_table(ArithKind::Lambda, d + 1, d_upper + 1)?.values;
        Ok(VaughanTables {
            d,
            d_upper,
            u,
            mu,
            c: type_one_coefficients(u)?,
            w,
            bases,
        })
    }

    pub fn mu(&self, m: u64) -> i64 {
        self.mu[m as usize]
    }

    pub fn w(&self, k: u64) -> &LogCombination {
        &self.w[k as usize]
    }

    /// `k` with `D < mk ≤ D₁`.
    fn k_range(&self, m: u64) -> std::ops::RangeInclusive<u64> {
        (self.d / m + 1)..=(self.d_upper / m)
    }

    /// Every `(m, k)` contributing to `T3`.
    pub fn type_two_pairs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let u = self.u;
        ((u + 1)..=(self.d_upper / (u + 1)))
            .filter(move |&m| self.mu(m) != 0)
            .flat_map(move |m| {
                let r = self.k_range(m);
                ((*r.start()).max(u + 1)..=*r.end())
                    .filter(move |&k| !self.w(k).is_zero())
                    .map(move |k| (m, k))
            })
    }

    /// Every `m` used by `T1`.
    pub fn type_one_moduli(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.u).filter(move |&m| self.mu(m) != 0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VaughanDecomposition {
    #[serde(rename = "D")]
    pub d: u64,
    #[serde(rename = "D1")]
    pub d_upper: u64,
    #[serde(rename = "U")]
    pub u: u64,
    #[serde(rename = "T1")]
    pub t1: ComplexJson,
    #[serde(rename = "T2")]
    pub t2: ComplexJson,
    #[serde(rename = "T3")]
    pub t3: ComplexJson,
    pub direct: ComplexJson,
    pub abs_err: f64,
    /// `abs_err / Σ |Λ(d) g(d)|` (0 when both vanish).
    pub rel_err: f64,
}

impl VaughanDecomposition {
    pub fn combined(&self) -> Complex64 {
        let c = |z: ComplexJson| Complex64::new(z.re, z.im);
        c(self.t1) - c(self.t2) + c(self.t3)
    }
}

pub fn decompose<G>(d: u64, g: G) -> Result<VaughanDecomposition>
where
    G: Fn(u64) -> Complex64,
{
    decompose_with_upper(d, 2 * d, g)
}

/// Same as [`decompose`] over `(D, D₁]` with `D < D₁ ≤ 2D`.
pub fn decompose_with_upper<G>(d: u64, d_upper: u64, g: G) -> Result<VaughanDecomposition>
where
    G: Fn(u64) -> Complex64,
{
    let tables = VaughanTables::new(d, d_upper)?;
    decompose_tables(&tables, g)
}

pub fn decompose_tables<G>(t: &VaughanTables, g: G) -> Result<VaughanDecomposition>
where
    G: Fn(u64) -> Complex64,
{
    let values: Vec<Complex64> = ((t.d + 1)..=t.d_upper).map(&g).collect();
    let gv = |n: u64| values[(n - t.d - 1) as usize];

    let mut t1 = ComplexSum::new();
    for m in t.type_one_moduli() {
        let mut inner = ComplexSum::new();
        for k in t.k_range(m) {
            inner.add(gv(m * k) * (k as f64).ln());
        }
        t1.add(inner.value() * t.mu(m) as f64);
    }

    let mut t2 = ComplexSum::new();
    for (m, c) in t.c.iter().enumerate().skip(1) {
        if c.is_zero() {
            continue;
        }
        let m = m as u64;
        let mut inner = ComplexSum::new();
        for k in t.k_range(m) {
            inner.add(gv(m * k));
        }
        t2.add(inner.value() * c.value());
    }

    let mut t3 = ComplexSum::new();
    for (m, k) in t.type_two_pairs() {
        t3.add(gv(m * k) * (t.mu(m) as f64 * t.w(k).value()));
    }

    let mut direct = ComplexSum::new();
    let mut scale = NeumaierSum::new();
    for (i, &b) in t.bases.iter().enumerate() {
        if b > 1 {
            let l = lambda_from_base(b);
            let z = values[i] * l;
            direct.add(z);
            scale.add(z.norm());
        }
    }
    let (t1, t2, t3, direct) = (t1.value(), t2.value(), t3.value(), direct.value());
    let abs_err = (t1 - t2 + t3 - direct).norm();
    let scale = scale.value();
    Ok(VaughanDecomposition {
        d: t.d,
        d_upper: t.d_upper,
        u: t.u,
        t1: t1.into(),
        t2: t2.into(),
        t3: t3.into(),
        direct: direct.into(),
        abs_err,
        rel_err: if scale > 0.0 { abs_err / scale } else { abs_err },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientReport {
    #[serde(rename = "D")]
    pub d: u64,
    #[serde(rename = "U")]
    pub u: u64,
    /// `max_{2≤m≤U²} |c(m)| / log m`.
    pub max_c_ratio: f64,
    pub argmax_c: u64,
    /// `max_k w(k) / log k` over the type-II range of `k`.
    pub max_w_ratio: f64,
    pub argmax_w: u64,
}

pub fn coefficient_bounds_report(d: u64) -> Result<CoefficientReport> {
    let t = VaughanTables::new(d, 2 * d)?;
    let mut max_c_ratio: f64 = 0.0;
    let mut argmax_c = 0;
    for (m, c) in t.c.iter().enumerate().skip(2) {
        let r = c.value().abs() / (m as f64).ln();
        if r > max_c_ratio {
            max_c_ratio = r;
            argmax_c = m as u64;
        }
    }
    let mut max_w_ratio: f64 = 0.0;
    let mut argmax_w = 0;
    for k in (t.u + 1)..=(t.d_upper / (t.u + 1)) {
        let r = t.w(k).value() / (k as f64).ln();
        if r > max_w_ratio {
            max_w_ratio = r;
            argmax_w = k;
        }
    }
    Ok(CoefficientReport {
        d,
        u: t.u,
        max_c_ratio,
        argmax_c,
        max_w_ratio,
        argmax_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_roots() {
        assert_eq!(cube_root_floor(1000), 10);
        assert_eq!(cube_root_floor(999), 9);
        assert_eq!(cube_root_floor(10_000), 21);
        assert_eq!(cube_root_floor(u64::MAX), 2_642_245);
    }

    #[test]
    fn small_coefficients() {
        let c = type_one_coefficients(10).unwrap();
        assert!(c[1].is_zero());
        for p in [2u64, 3, 5, 7] {
            assert_eq!(c[p as usize].terms().collect::<Vec<_>>(), vec![(p, 1)]);
        }
        // c(4) = Λ(4) + μ(2)Λ(2) = 0
        assert!(c[4].is_zero());
        // c(6) = μ(2)Λ(3) + μ(3)Λ(2) = −log 6
        assert!((c[6].value() + 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn weights_vanish_below_cutoff() {
        // 12 = 2²·3, all prime-power divisors ≤ 10
        assert!(type_two_weight(12, 10).unwrap().is_zero());
        // 22 = 2·11: only 11 exceeds 10
        let w = type_two_weight(22, 10).unwrap();
        assert_eq!(w.terms().collect::<Vec<_>>(), vec![(11, 1)]);
        // 32 = 2^5: divisors 16 and 32 exceed 10
        assert_eq!(type_two_weight(32, 10).unwrap().terms().collect::<Vec<_>>(), vec![(2, 2)]);
    }

    #[test]
    fn zero_g() {
        let r = decompose(1000, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(r.combined(), Complex64::new(0.0, 0.0));
        assert_eq!(r.t1, ComplexJson { re: 0.0, im: 0.0 });
        assert_eq!(r.rel_err, 0.0);
    }

    #[test]
    fn domain_checks() {
        assert!(matches!(decompose(100, |_| Complex64::new(1.0, 0.0)), Err(Error::Domain(_))));
        assert!(decompose_with_upper(1000, 2001, |_| Complex64::new(1.0, 0.0)).is_err());
        assert!(decompose_with_upper(1000, 1000, |_| Complex64::new(1.0, 0.0)).is_err());
    }
}
