//! Exact min–max balancing of affine exponent forms.
//!
//! Minimising `max_i f_i(p)` over a box is the linear program
//! `min t` subject to `f_i(p) ≤ t` and the box constraints. With `d ≤ 3`
//! parameters every vertex is the solution of `d + 1` tight constraints,
//! so the optimum is found by solving all such subsystems exactly over the
//! rationals and keeping the feasible solution with the smallest `t`
//! (ties broken by the lexicographically smallest parameter vector).

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::rational::{fmt_q, parse_q, qi, RationalJson, Q};
use crate::{Error, Result};

pub const MAX_PARAMETERS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearExponentForm {
    pub label: String,
    pub constant: Q,
    pub coefficients: BTreeMap<String, Q>,
}

impl LinearExponentForm {
    pub fn new(label: impl Into<String>, constant: Q) -> Self {
        LinearExponentForm {
            label: label.into(),
            constant,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn with(mut self, param: &str, coef: Q) -> Self {
        self.coefficients.insert(param.to_string(), coef);
        self
    }

    pub fn coefficient(&self, param: &str) -> Q {
        self.coefficients.get(param).cloned().unwrap_or_else(Q::zero)
    }

    /// Parses expressions such as `7/15 + r`, `11/24 + (7/12)*w`,
    /// `1/2 - w - r` or `7/15+32r/45`. The label is the source text.
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let affine = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("trailing input in form `{src}`")));
        }
        let mut form = LinearExponentForm::new(src.trim(), affine.constant);
        for (k, v) in affine.coefs {
            if !v.is_zero() {
                form.coefficients.insert(k, v);
            }
        }
        Ok(form)
    }

    pub fn eval(&self, assignment: &BTreeMap<String, Q>) -> Result<Q> {
        let mut v = self.constant.clone();
        for (name, c) in &self.coefficients {
            let x = assignment
                .get(name)
                .ok_or_else(|| Error::MissingParameter(name.clone()))?;
            v += c * x;
        }
        Ok(v)
    }
}

impl std::fmt::Display for LinearExponentForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", fmt_q(&self.constant))?;
        for (k, c) in &self.coefficients {
            if c.is_negative() {
                write!(f, " - ({}){k}", fmt_q(&-c))?;
            } else {
                write!(f, " + ({}){k}", fmt_q(c))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(Q),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token::Num(parse_q(&s)?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected `{c}` in form `{src}`")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
struct Affine {
    constant: Q,
    coefs: BTreeMap<String, Q>,
}

impl Affine {
    fn constant(c: Q) -> Self {
        Affine {
            constant: c,
            coefs: BTreeMap::new(),
        }
    }

    fn is_constant(&self) -> bool {
        self.coefs.values().all(Zero::is_zero)
    }

    fn scale(mut self, s: &Q) -> Self {
        self.constant *= s;
        for v in self.coefs.values_mut() {
            *v *= s;
        }
        self
    }

    fn add(mut self, other: Affine, sign: &Q) -> Self {
        self.constant += &other.constant * sign;
        for (k, v) in other.coefs {
            *self.coefs.entry(k).or_insert_with(Q::zero) += v * sign;
        }
        self
    }

    fn mul(self, other: Affine) -> Result<Self> {
        if other.is_constant() {
            Ok(self.scale(&other.constant))
        } else if self.is_constant() {
            Ok(other.scale(&self.constant))
        } else {
            Err(Error::Parse("product of two parameters is not affine".into()))
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<Affine> {
        let mut acc = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            let sign = if op == '+' { Q::one() } else { -Q::one() };
            acc = acc.add(rhs, &sign);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Affine> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Op('*')) => {
                    self.pos += 1;
                    acc = acc.mul(self.unary()?)?;
                }
                Some(Token::Op('/')) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    if !rhs.is_constant() || rhs.constant.is_zero() {
                        return Err(Error::Parse("division by a parameter or by zero".into()));
                    }
                    acc = acc.scale(&(Q::one() / rhs.constant));
                }
                // implicit multiplication: `2r`, `(7/12)w`
                Some(Token::Num(_) | Token::Ident(_) | Token::Op('(')) => {
                    acc = acc.mul(self.unary()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Affine> {
        match self.peek().cloned() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(self.unary()?.scale(&-Q::one()))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Affine> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of form".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Affine::constant(v)),
            Token::Ident(name) => {
                let mut a = Affine::default();
                a.coefs.insert(name, Q::one());
                Ok(a)
            }
            Token::Op('(') => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::Op(')')) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::Parse("missing `)`".into())),
                }
            }
            Token::Op(c) => Err(Error::Parse(format!("unexpected `{c}`"))),
        }
    }
}

/// Closed interval constraint for one parameter; `None` means unbounded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamBox {
    pub lo: Option<Q>,
    pub hi: Option<Q>,
}

impl ParamBox {
    pub fn closed(lo: Q, hi: Q) -> Self {
        ParamBox {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn unit() -> Self {
        ParamBox::closed(qi(0), qi(1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceSolution {
    /// In the order the parameters were declared.
    pub assignment: Vec<(String, Q)>,
    pub value: Q,
    /// Labels of the forms attaining `value`.
    pub active: Vec<String>,
}

impl BalanceSolution {
    pub fn get(&self, param: &str) -> Option<&Q> {
        self.assignment.iter().find(|(k, _)| k == param).map(|(_, v)| v)
    }

    pub fn assignment_map(&self) -> BTreeMap<String, Q> {
        self.assignment.iter().cloned().collect()
    }

    pub fn to_json(&self) -> SolutionJson {
        SolutionJson {
            assignment: self
                .assignment
                .iter()
                .map(|(k, v)| (k.clone(), v.into()))
                .collect(),
            value: (&self.value).into(),
            active: self.active.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct SolutionJson {
    pub assignment: BTreeMap<String, RationalJson>,
    pub value: RationalJson,
    pub active: Vec<String>,
}

/// One linear constraint `a·v ≤ b` over `v = (p_1, …, p_d, t)`.
#[derive(Clone, Debug)]
struct Row {
    a: Vec<Q>,
    b: Q,
}

/// Solves the square system `rows` (as equalities); `None` if singular.
fn solve(rows: &[&Row]) -> Option<Vec<Q>> {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .map(|r| {
            let mut v = r.a.clone();
            v.push(r.b.clone());
            v
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = Q::one() / &m[col][col];
        for j in col..=n {
            m[col][j] = &m[col][j] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=n {
                    let delta = &f * &m[col][j];
                    m[r][j] -= delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn solve_boxed(forms: &[LinearExponentForm], params: &[String], boxes: &[(Q, Q)]) -> Option<(Vec<Q>, Q)> {
    let d = params.len();
    let mut rows = Vec::new();
    for f in forms {
        // f(p) − t ≤ 0
        let mut a: Vec<Q> = params.iter().map(|p| f.coefficient(p)).collect();
        a.push(-Q::one());
        rows.push(Row {
            a,
            b: -f.constant.clone(),
        });
    }
    for (i, (lo, hi)) in boxes.iter().enumerate() {
        let mut a = vec![Q::zero(); d + 1];
        a[i] = -Q::one();
        rows.push(Row { a: a.clone(), b: -lo.clone() });
        a[i] = Q::one();
        rows.push(Row { a, b: hi.clone() });
    }
    let feasible = |v: &[Q]| {
        rows.iter().all(|r| {
            let lhs: Q = r.a.iter().zip(v).map(|(a, x)| a * x).sum();
            lhs <= r.b
        })
    };
    let mut best: Option<Vec<Q>> = None;
    for subset in combinations(rows.len(), d + 1) {
        let chosen: Vec<&Row> = subset.iter().map(|&i| &rows[i]).collect();
        let Some(v) = solve(&chosen) else { continue };
        if !feasible(&v) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let (t_new, t_old) = (&v[d], &b[d]);
                t_new < t_old || (t_new == t_old && v[..d] < b[..d])
            }
        };
        if better {
            best = Some(v);
        }
    }
    best.map(|mut v| {
        let t = v.pop().expect("t component");
        (v, t)
    })
}

/// Minimises the maximum of `forms` over the box; `boxes[i]` constrains
/// `params[i]`.
pub fn minimize_max(
    forms: &[LinearExponentForm],
    params: &[String],
    boxes: &[ParamBox],
) -> Result<BalanceSolution> {
    if forms.is_empty() {
        return Err(Error::InvalidArgument("no forms to balance".into()));
    }
    if params.len() > MAX_PARAMETERS {
        return Err(Error::InvalidArgument(format!(
            "at most {MAX_PARAMETERS} parameters are supported, got {}",
            params.len()
        )));
    }
    if boxes.len() != params.len() {
        return Err(Error::InvalidArgument("one box per parameter is required".into()));
    }
    for f in forms {
        if let Some(p) = f.coefficients.keys().find(|k| !params.contains(k)) {
            return Err(Error::MissingParameter(p.clone()));
        }
    }
    for (p, b) in params.iter().zip(boxes) {
        if let (Some(lo), Some(hi)) = (&b.lo, &b.hi) {
            if lo > hi {
                return Err(Error::InfeasibleBox(p.clone()));
            }
        }
    }
    // Missing bounds become ±M; if the optimum moves when M doubles, the
    // program is unbounded below.
    let big = qi(1 << 20);
    let close = |m: &Q| -> Vec<(Q, Q)> {
        boxes
            .iter()
            .map(|b| {
                (
                    b.lo.clone().unwrap_or_else(|| -m.clone()),
                    b.hi.clone().unwrap_or_else(|| m.clone()),
                )
            })
            .collect()
    };
    let (point, value) =
        solve_boxed(forms, params, &close(&big)).ok_or(Error::Unbounded)?;
    let unbounded_box = boxes.iter().any(|b| b.lo.is_none() || b.hi.is_none());
    if unbounded_box {
        let (_, wider) =
            solve_boxed(forms, params, &close(&(&big * qi(2)))).ok_or(Error::Unbounded)?;
        if wider != value {
            return Err(Error::Unbounded);
        }
    }
    let assignment: Vec<(String, Q)> = params.iter().cloned().zip(point).collect();
    let map: BTreeMap<String, Q> = assignment.iter().cloned().collect();
    let mut active = Vec::new();
    for f in forms {
        if f.eval(&map)? == value {
            active.push(f.label.clone());
        }
    }
    Ok(BalanceSolution {
        assignment,
        value,
        active,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormValues {
    pub values: Vec<(String, Q)>,
    pub max: Q,
}

pub fn evaluate_at(forms: &[LinearExponentForm], assignment: &BTreeMap<String, Q>) -> Result<FormValues> {
    if forms.is_empty() {
        return Err(Error::InvalidArgument("no forms to evaluate".into()));
    }
    let values: Vec<(String, Q)> = forms
        .iter()
        .map(|f| Ok((f.label.clone(), f.eval(assignment)?)))
        .collect::<Result<_>>()?;
    let max = values
        .iter()
        .map(|(_, v)| v)
        .max()
        .cloned()
        .expect("nonempty");
    Ok(FormValues { values, max })
}

/// Error exponents of the floor-sum argument with parameters `r` (the
/// `H`-exponent shift) and `w` (the dyadic cut `x^{1/2+w}`).
pub fn lambda_error_forms() -> Vec<LinearExponentForm> {
    ["7/15 + r", "11/24 + (7/12)*w", "1/2 - w - r"]
        .iter()
        .map(|s| LinearExponentForm::parse(s).expect("static form"))
        .collect()
}

/// Variant in which the first exponent grows as `32r/45`.
pub fn refined_error_forms() -> Vec<LinearExponentForm> {
    ["7/15 + (32/45)*r", "11/24 + (7/12)*w", "1/2 - w - r"]
        .iter()
        .map(|s| LinearExponentForm::parse(s).expect("static form"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn rw() -> Vec<String> {
        vec!["r".into(), "w".into()]
    }

    #[test]
    fn parses_forms() {
        let f = LinearExponentForm::parse("11/24+(7/12)w").unwrap();
        assert_eq!(f.constant, q(11, 24));
        assert_eq!(f.coefficient("w"), q(7, 12));
        let f = LinearExponentForm::parse("7/15+32r/45").unwrap();
        assert_eq!(f.coefficient("r"), q(32, 45));
        let f = LinearExponentForm::parse("1/2 - w - r").unwrap();
        assert_eq!(f.coefficient("r"), qi(-1));
        assert_eq!(f.coefficient("w"), qi(-1));
        let f = LinearExponentForm::parse("-(r - 2)/4").unwrap();
        assert_eq!(f.constant, q(1, 2));
        assert_eq!(f.coefficient("r"), q(-1, 4));
        assert!(LinearExponentForm::parse("r*w").is_err());
        assert!(LinearExponentForm::parse("1/r").is_err());
        assert!(LinearExponentForm::parse("(1 + r").is_err());
        assert!(LinearExponentForm::parse("1 $ r").is_err());
    }

    #[test]
    fn balances_lambda_forms() {
        let sol = minimize_max(&lambda_error_forms(), &rw(), &[ParamBox::unit(), ParamBox::unit()]).unwrap();
        assert_eq!(sol.get("r"), Some(&q(1, 195)));
        assert_eq!(sol.get("w"), Some(&q(3, 130)));
        assert_eq!(sol.value, q(92, 195));
        assert_eq!(sol.value, q(7, 15) + q(1, 195));
        assert_eq!(sol.active.len(), 3);
    }

    #[test]
    fn balances_refined_forms() {
        let sol = minimize_max(&refined_error_forms(), &rw(), &[ParamBox::unit(), ParamBox::unit()]).unwrap();
        assert_eq!(sol.get("r"), Some(&q(6, 923)));
        assert_eq!(sol.get("w"), Some(&q(41, 1846)));
        assert_eq!(sol.value, q(435, 923));
        assert_eq!(sol.value, q(7, 15) + q(64, 13845));
        // the alternative w = 205/923 does not balance the forms
        let mut at = sol.assignment_map();
        at.insert("w".into(), q(205, 923));
        assert!(evaluate_at(&refined_error_forms(), &at).unwrap().max != sol.value);
    }

    #[test]
    fn single_constant_form() {
        let forms = vec![LinearExponentForm::new("c", q(2, 3))];
        let sol = minimize_max(&forms, &rw(), &[ParamBox::unit(), ParamBox::unit()]).unwrap();
        assert_eq!(sol.value, q(2, 3));
        assert_eq!(sol.get("r"), Some(&qi(0)));
        assert_eq!(sol.get("w"), Some(&qi(0)));
        let sol = minimize_max(&forms, &[], &[]).unwrap();
        assert_eq!(sol.value, q(2, 3));
    }

    #[test]
    fn evaluation() {
        let forms = lambda_error_forms();
        let mut at = BTreeMap::new();
        at.insert("r".to_string(), q(1, 195));
        at.insert("w".to_string(), q(3, 130));
        let v = evaluate_at(&forms, &at).unwrap();
        assert!(v.values.iter().all(|(_, x)| *x == q(92, 195)));
        at.insert("r".to_string(), qi(0));
        at.insert("w".to_string(), qi(0));
        assert_eq!(evaluate_at(&forms, &at).unwrap().max, q(1, 2));
        assert!(evaluate_at(&[], &at).is_err());
        at.remove("w");
        assert!(matches!(evaluate_at(&forms, &at), Err(Error::MissingParameter(_))));
    }

    #[test]
    fn error_paths() {
        let forms = lambda_error_forms();
        let bad = ParamBox::closed(qi(1), qi(0));
        assert!(matches!(
            minimize_max(&forms, &rw(), &[bad, ParamBox::unit()]),
            Err(Error::InfeasibleBox(_))
        ));
        // min of a single decreasing form with no lower bound on r
        let down = vec![LinearExponentForm::parse("1 - r").unwrap()];
        assert!(matches!(
            minimize_max(&down, &["r".into()], &[ParamBox::default()]),
            Err(Error::Unbounded)
        ));
        // bounded optimum found even with open boxes
        let v = vec![
            LinearExponentForm::parse("r").unwrap(),
            LinearExponentForm::parse("1 - r").unwrap(),
        ];
        let sol = minimize_max(&v, &["r".into()], &[ParamBox::default()]).unwrap();
        assert_eq!(sol.value, q(1, 2));
        assert!(matches!(
            minimize_max(&forms, &["r".into()], &[ParamBox::unit()]),
            Err(Error::MissingParameter(_))
        ));
        assert!(minimize_max(&[], &rw(), &[ParamBox::unit(), ParamBox::unit()]).is_err());
    }
}
