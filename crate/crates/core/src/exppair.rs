//! Exponent pairs and the bound formulas built on them.
//!
//! Pairs are exact rationals with `0 ≤ κ ≤ 1/2 ≤ λ ≤ 1`. The processes are
//!
//! ```text
//! A(κ, λ) = (κ/(2κ+2), 1/2 + λ/(2κ+2))
//! B(κ, λ) = (λ − 1/2, κ + 1/2)
//! ```
//!
//! Words such as `BA^5` act right to left. Seeds are taken ε-free: a pair
//! written `(a + ε, b + ε)` is handled as `(a, b)`.

use serde::Serialize;

use crate::rational::{parse_q, q, qi, to_f64, RationalJson, Q};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentPair {
    kappa: Q,
    lambda: Q,
}

impl ExponentPair {
    pub fn new(kappa: Q, lambda: Q) -> Result<Self> {
        let half = q(1, 2);
        let ok = kappa >= qi(0) && kappa <= half && lambda >= half && lambda <= qi(1);
        if !ok {
            return Err(Error::InvalidPair(format!(
                "({}, {}) violates 0 ≤ κ ≤ 1/2 ≤ λ ≤ 1",
                kappa, lambda
            )));
        }
        Ok(ExponentPair { kappa, lambda })
    }

    /// The classical pair `(1/2, 1/2)`.
    pub fn half() -> Self {
        ExponentPair::new(q(1, 2), q(1, 2)).expect("valid")
    }

    /// The trivial pair `(0, 1)`.
    pub fn trivial() -> Self {
        ExponentPair::new(qi(0), qi(1)).expect("valid")
    }

    pub fn kappa(&self) -> &Q {
        &self.kappa
    }

    pub fn lambda(&self) -> &Q {
        &self.lambda
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (to_f64(&self.kappa), to_f64(&self.lambda))
    }

    /// Parses `"κ,λ"`, e.g. `"13/84,55/84"`, optionally parenthesised.
    pub fn parse(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("expected `kappa,lambda`, got `{s}`")))?;
        ExponentPair::new(parse_q(a)?, parse_q(b)?)
    }

    pub fn to_json(&self) -> PairJson {
        PairJson {
            kappa: (&self.kappa).into(),
            lambda: (&self.lambda).into(),
        }
    }
}

impl std::fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.kappa, self.lambda)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct PairJson {
    pub kappa: RationalJson,
    pub lambda: RationalJson,
}

pub fn a_process(p: &ExponentPair) -> Result<ExponentPair> {
    let denom = &p.kappa * qi(2) + qi(2);
    ExponentPair::new(&p.kappa / &denom, q(1, 2) + &p.lambda / &denom)
}

pub fn b_process(p: &ExponentPair) -> Result<ExponentPair> {
    if p.lambda < q(1, 2) {
        return Err(Error::InvalidPair(format!("B needs λ ≥ 1/2, got {p}")));
    }
    ExponentPair::new(&p.lambda - q(1, 2), &p.kappa + q(1, 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Process {
    A,
    B,
}

/// Parses words like `BA^5`, `ABA`, `A^2 B` into `(process, power)` runs,
/// leftmost first. The empty word is the identity.
pub fn parse_word(word: &str) -> Result<Vec<(Process, u32)>> {
    let mut out = Vec::new();
    let mut chars = word.chars().filter(|c| !c.is_whitespace()).peekable();
    while let Some(c) = chars.next() {
        let proc = match c.to_ascii_uppercase() {
            'A' => Process::A,
            'B' => Process::B,
            other => return Err(Error::Parse(format!("unexpected `{other}` in word `{word}`"))),
        };
        let mut power = 1u32;
        if chars.peek() == Some(&'^') {
            chars.next();
            let mut digits = String::new();
            while let Some(d) = chars.peek().copied().filter(char::is_ascii_digit) {
                digits.push(d);
                chars.next();
            }
            power = digits
                .parse()
                .map_err(|_| Error::Parse(format!("missing exponent after `^` in `{word}`")))?;
        }
        out.push((proc, power));
    }
    Ok(out)
}

/// Applies `word` to `base`, rightmost process first.
pub fn eval_word(word: &str, base: &ExponentPair) -> Result<ExponentPair> {
    let runs = parse_word(word)?;
    let mut p = base.clone();
    for &(proc, power) in runs.iter().rev() {
        for _ in 0..power {
            p = match proc {
                Process::A => a_process(&p)?,
                Process::B => b_process(&p)?,
            };
        }
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundLemma {
    /// `Y^κ X^λ + Y^{-1}` for one-dimensional sums.
    #[serde(rename = "VDC")]
    VanDerCorput,
    /// Trilinear bound parameterised by an exponent pair.
    #[serde(rename = "LWY")]
    Trilinear,
    /// Trilinear bound with fixed exponents.
    #[serde(rename = "RS")]
    TrilinearFixed,
    /// `(x² D⁷)^{1/12}` for Λ-weighted sawtooth sums.
    #[serde(rename = "FORMER")]
    SawtoothPrior,
}

impl BoundLemma {
    pub fn label(self) -> &'static str {
        match self {
            BoundLemma::VanDerCorput => "VDC",
            BoundLemma::Trilinear => "LWY",
            BoundLemma::TrilinearFixed => "RS",
            BoundLemma::SawtoothPrior => "FORMER",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEvaluation {
    pub lemma: BoundLemma,
    pub inputs: Vec<(String, f64)>,
    pub pair: Option<PairJson>,
    pub value: f64,
    pub terms: Vec<(String, f64)>,
    /// False when the inputs fall outside the lemma's stated range.
    pub in_domain: bool,
    pub note: Option<String>,
}

fn check_positive(inputs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in inputs {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

fn finish(
    lemma: BoundLemma,
    inputs: &[(&str, f64)],
    pair: Option<&ExponentPair>,
    terms: Vec<(&str, f64)>,
) -> BoundEvaluation {
    let value = terms.iter().map(|t| t.1).sum();
    BoundEvaluation {
        lemma,
        inputs: inputs.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        pair: pair.map(ExponentPair::to_json),
        value,
        terms: terms.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        in_domain: true,
        note: None,
    }
}

pub fn eval_vdc_bound(pair: &ExponentPair, y: f64, x: f64) -> Result<BoundEvaluation> {
    let inputs = [("Y", y), ("X", x)];
    check_positive(&inputs)?;
    if x <= 1.0 {
        return Err(Error::Domain(format!("X must exceed 1, got {x}")));
    }
    let (k, l) = pair.to_f64();
    Ok(finish(
        BoundLemma::VanDerCorput,
        &inputs,
        Some(pair),
        vec![("Y^k X^l", y.powf(k) * x.powf(l)), ("1/Y", 1.0 / y)],
    ))
}

pub fn eval_lwy_bound(pair: &ExponentPair, x: f64, h: f64, m: f64, n: f64) -> Result<BoundEvaluation> {
    let inputs = [("X", x), ("H", h), ("M", m), ("N", n)];
    check_positive(&inputs)?;
    if h < 1.0 || m < 1.0 || n < 1.0 {
        return Err(Error::Domain("H, M, N must be at least 1".into()));
    }
    let (k, l) = pair.to_f64();
    let main = (x.powf(k) * h.powf(2.0 + k) * m.powf(1.0 + k + l) * n.powf(2.0 + k))
        .powf(1.0 / (2.0 + 2.0 * k));
    Ok(finish(
        BoundLemma::Trilinear,
        &inputs,
        Some(pair),
        vec![
            ("(X^k H^(2+k) M^(1+k+l) N^(2+k))^(1/(2+2k))", main),
            ("H M^(1/2) N", h * m.sqrt() * n),
            ("H^(1/2) M N^(1/2)", h.sqrt() * m * n.sqrt()),
            ("X^(-1/2) H M N", h * m * n / x.sqrt()),
        ],
    ))
}

pub fn eval_rs_bound(x: f64, h: f64, m: f64, n: f64) -> Result<BoundEvaluation> {
    let inputs = [("X", x), ("H", h), ("M", m), ("N", n)];
    check_positive(&inputs)?;
    if h < 1.0 || m < 1.0 || n < 1.0 {
        return Err(Error::Domain("H, M, N must be at least 1".into()));
    }
    Ok(finish(
        BoundLemma::TrilinearFixed,
        &inputs,
        None,
        vec![
            ("(X M^2 N^3 H^3)^(1/4)", (x * m * m * n.powi(3) * h.powi(3)).powf(0.25)),
            ("M (HN)^(3/4)", m * (h * n).powf(0.75)),
            ("M^(1/2) H N", m.sqrt() * h * n),
            ("X^(-1/2) H N M", h * n * m / x.sqrt()),
        ],
    ))
}

/// `(x² D⁷)^{1/12}`; stated for `x^{6/13} ≤ D ≤ x^{2/3}`, which is reported
/// through `in_domain` rather than rejected. The `x^ε` factor is omitted.
pub fn eval_former_bound(x: f64, d: f64) -> Result<BoundEvaluation> {
    let inputs = [("x", x), ("D", d)];
    check_positive(&inputs)?;
    let mut eval = finish(
        BoundLemma::SawtoothPrior,
        &inputs,
        None,
        vec![("(x^2 D^7)^(1/12)", ((2.0 * x.ln() + 7.0 * d.ln()) / 12.0).exp())],
    );
    let theta = d.ln() / x.ln();
    eval.in_domain = x > 1.0 && theta >= 6.0 / 13.0 - 1e-12 && theta <= 2.0 / 3.0 + 1e-12;
    eval.note = Some(if eval.in_domain {
        "x^eps factor omitted".into()
    } else {
        format!("D = x^{theta:.6} lies outside [x^(6/13), x^(2/3)]; x^eps factor omitted")
    });
    Ok(eval)
}

/// Exponent of `x` in `(x² D⁷)^{1/12}` when `D = x^θ`: `(2 + 7θ)/12`.
pub fn former_bound_exponent(theta: &Q) -> Q {
    (qi(2) + qi(7) * theta) / qi(12)
}
