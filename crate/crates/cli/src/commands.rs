use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use floorsum_core::balance::{evaluate_at, minimize_max, LinearExponentForm, ParamBox};
use floorsum_core::cache::sieve_table_cached;
use floorsum_core::constants::main_constant;
use floorsum_core::exppair::{eval_word, BoundLemma, ExponentPair};
use floorsum_core::expsum::{
    bound_comparison, classify_factorization, compute_expsum_with_budget, regime_scenario, write_report_csv,
    Coefficients, ExpSumScenario, ReportRow, Shape,
};
use floorsum_core::floor_sums::{
    error_series, fit_exponent, floor_root_power, geometric_grid, sum_blocked, sum_direct, sum_dual,
};
use floorsum_core::rational::{fmt_q, parse_q, RationalJson, Q};
use floorsum_core::sieve::{lambda_from_base, ArithKind, SieveOptions};
use floorsum_core::vaaler::{check_vaaler_inequality, test_grid};
use floorsum_core::vaughan::{coefficient_bounds_report, decompose_with_upper};
use floorsum_core::{Error, Result};

use crate::{Cli, Command, Format, LemmaArg, Method, ShapeArg};

fn kind(s: &str) -> Result<ArithKind> {
    s.parse::<ArithKind>()?.validate()
}

fn emit_json<W: Write, T: Serialize>(out: &mut W, v: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn check_terms(needed: u64, limit: u64, what: &'static str) -> Result<()> {
    if needed > limit {
        return Err(Error::BudgetExceeded { what, needed, limit });
    }
    Ok(())
}

pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    let g = &cli.global;
    let fmt = g.format;
    match &cli.command {
        Command::Sieve { f, lo, hi } => {
            let kind = kind(f)?;
            let opts = SieveOptions {
                max_entries: g.max_entries,
                ..SieveOptions::default()
            };
            let t = sieve_table_cached(g.cache_dir.as_deref(), kind, *lo, *hi, &opts)?;
            let shown = |v: i64| -> serde_json::Value {
                match kind {
                    ArithKind::Lambda => json!(lambda_from_base(v)),
                    _ => json!(v),
                }
            };
            match fmt {
                Format::Csv => {
                    writeln!(out, "n,value")?;
                    for (i, &v) in t.values.iter().enumerate() {
                        writeln!(out, "{},{}", t.lo + i as u64, shown(v))?;
                    }
                }
                Format::Json => {
                    let values: Vec<_> = t.values.iter().map(|&v| shown(v)).collect();
                    emit_json(out, &json!({"kind": kind.name(), "lo": t.lo, "hi": t.hi, "values": values}))?;
                }
            }
        }
        Command::Floorsum { f, x, method, split } => {
            let kind = kind(f)?;
            match method {
                Method::Direct => {
                    check_terms(*x, g.max_entries.min(g.max_terms), "direct floor-sum terms")?;
                    let v = sum_direct(kind, *x)?;
                    match fmt {
                        Format::Csv => writeln!(out, "f,x,method,value\n{},{x},direct,{v}", kind.name())?,
                        Format::Json => emit_json(
                            out,
                            &json!({"f": kind.name(), "x": x, "method": "direct", "value": v}),
                        )?,
                    }
                }
                Method::Blocked => {
                    let v = sum_blocked(kind, *x)?;
                    match fmt {
                        Format::Csv => writeln!(out, "f,x,method,value\n{},{x},blocked,{v}", kind.name())?,
                        Format::Json => emit_json(
                            out,
                            &json!({"f": kind.name(), "x": x, "method": "blocked", "value": v}),
                        )?,
                    }
                }
                Method::Dual => {
                    let n = split.unwrap_or_else(|| floor_root_power(*x, 7, 15));
                    check_terms(n.saturating_add(*x / (n + 1)), g.max_terms, "dual floor-sum terms")?;
                    let d = sum_dual(kind, *x, n)?;
                    match fmt {
                        Format::Csv => {
                            writeln!(out, "f,x,method,value,split,s1,s2,tail_terms,straddling_d")?;
                            writeln!(
                                out,
                                "{},{},dual,{},{},{},{},{},{}",
                                kind.name(),
                                d.x,
                                d.total,
                                d.split,
                                d.s1,
                                d.s2,
                                d.tail_terms,
                                d.straddling_d.map(|v| v.to_string()).unwrap_or_default()
                            )?;
                        }
                        Format::Json => emit_json(
                            out,
                            &json!({"f": kind.name(), "x": x, "method": "dual", "value": d.total, "detail": d}),
                        )?,
                    }
                }
            }
        }
        Command::Constant { f, terms } => {
            let kind = kind(f)?;
            check_terms(*terms, g.max_terms, "constant terms")?;
            let rec = main_constant(kind, *terms)?.to_record();
            match fmt {
                Format::Csv => writeln!(
                    out,
                    "kind,k,terms,lo,hi\n{},{},{},{:.17e},{:.17e}",
                    rec.kind, rec.k, rec.terms, rec.lo, rec.hi
                )?,
                Format::Json => emit_json(out, &rec)?,
            }
        }
        Command::Errfit { f, lo, hi, terms } => {
            let kind = kind(f)?;
            check_terms(*terms, g.max_terms, "constant terms")?;
            let bracket = main_constant(kind, *terms)?;
            let series = error_series(&bracket, &geometric_grid(*lo, *hi), None)?;
            let fit = fit_exponent(&series)?;
            match fmt {
                Format::Csv => {
                    series.write_csv(&mut *out)?;
                    writeln!(out, "# fit slope={:.6} intercept={:.6} residual={:.6}", fit.slope, fit.intercept, fit.residual)?;
                    writeln!(out, "# fit used={} excluded={}", fit.used, fit.excluded)?;
                }
                Format::Json => emit_json(out, &json!({"series": series, "fit": fit}))?,
            }
        }
        Command::VaalerCheck { h, points, max_den, lo, hi } => {
            if !(lo < hi) {
                return Err(Error::Domain(format!("empty grid [{lo}, {hi}]")));
            }
            let grid = test_grid(*lo, *hi, *points, *max_den);
            let reports = h
                .iter()
                .map(|&hh| check_vaaler_inequality(hh, &grid))
                .collect::<Result<Vec<_>>>()?;
            match fmt {
                Format::Csv => {
                    writeln!(out, "h,points,max_violation,worst_x,min_delta,max_abs_error,mean_abs_error")?;
                    for r in &reports {
                        writeln!(
                            out,
                            "{},{},{:.6e},{},{:.6e},{:.6e},{:.6e}",
                            r.h, r.points, r.max_violation, r.worst_x, r.min_delta, r.max_abs_error, r.mean_abs_error
                        )?;
                    }
                }
                Format::Json => emit_json(out, &reports)?,
            }
        }
        Command::VaughanCheck { d, d1, samples } => {
            let upper = d1.unwrap_or(2 * d);
            let mut rows = Vec::new();
            for s in 0..*samples {
                let mut rng = ChaCha8Rng::seed_from_u64(g.seed ^ ((s as u64) << 32));
                let thetas: Vec<f64> = (0..upper.saturating_sub(*d)).map(|_| rng.gen::<f64>()).collect();
                let base = d + 1;
                let dec = decompose_with_upper(*d, upper, |n| {
                    Complex64::from_polar(1.0, 2.0 * PI * thetas[(n - base) as usize])
                })?;
                rows.push(dec);
            }
            let coef = coefficient_bounds_report(*d)?;
            match fmt {
                Format::Csv => {
                    writeln!(out, "sample,D,D1,U,abs_err,rel_err")?;
                    for (i, r) in rows.iter().enumerate() {
                        writeln!(out, "{i},{},{},{},{:.3e},{:.3e}", r.d, r.d_upper, r.u, r.abs_err, r.rel_err)?;
                    }
                }
                Format::Json => emit_json(out, &json!({"samples": rows, "coefficients": coef}))?,
            }
        }
        Command::Exppair { word, base } => {
            let p = eval_word(word, &ExponentPair::parse(base)?)?;
            match fmt {
                Format::Csv => writeln!(out, "kappa,lambda\n{},{}", fmt_q(p.kappa()), fmt_q(p.lambda()))?,
                Format::Json => emit_json(out, &p.to_json())?,
            }
        }
        Command::Balance { params, forms, bounds, at } => {
            let forms = forms
                .iter()
                .map(|s| LinearExponentForm::parse(s))
                .collect::<Result<Vec<_>>>()?;
            if !at.is_empty() {
                let mut assignment = BTreeMap::new();
                for a in at {
                    let (k, v) = split_kv(a)?;
                    assignment.insert(k.to_string(), parse_q(v)?);
                }
                let vals = evaluate_at(&forms, &assignment)?;
                match fmt {
                    Format::Csv => {
                        writeln!(out, "item,name,value")?;
                        for (label, v) in &vals.values {
                            writeln!(out, "form,\"{label}\",{}", fmt_q(v))?;
                        }
                        writeln!(out, "max,,{}", fmt_q(&vals.max))?;
                    }
                    Format::Json => {
                        let values: Vec<_> = vals
                            .values
                            .iter()
                            .map(|(l, v)| json!({"label": l, "value": RationalJson::from(v)}))
                            .collect();
                        emit_json(out, &json!({"values": values, "max": RationalJson::from(&vals.max)}))?;
                    }
                }
                return Ok(());
            }
            let mut boxes: BTreeMap<&str, ParamBox> = BTreeMap::new();
            for b in bounds {
                let (k, v) = split_kv(b)?;
                if !params.iter().any(|p| p == k) {
                    return Err(Error::InvalidArgument(format!("bound for undeclared parameter `{k}`")));
                }
                let (lo, hi) = v
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bound `{b}` must look like name=lo:hi")))?;
                let end = |s: &str| -> Result<Option<Q>> {
                    if s.trim().is_empty() {
                        Ok(None)
                    } else {
                        parse_q(s).map(Some)
                    }
                };
                boxes.insert(k, ParamBox { lo: end(lo)?, hi: end(hi)? });
            }
            let boxes: Vec<ParamBox> = params
                .iter()
                .map(|p| boxes.remove(p.as_str()).unwrap_or_else(ParamBox::unit))
                .collect();
            let sol = minimize_max(&forms, params, &boxes)?;
            match fmt {
                Format::Csv => {
                    writeln!(out, "item,name,value")?;
                    for (k, v) in &sol.assignment {
                        writeln!(out, "param,{k},{}", fmt_q(v))?;
                    }
                    writeln!(out, "value,,{}", fmt_q(&sol.value))?;
                    for a in &sol.active {
                        writeln!(out, "active,\"{a}\",")?;
                    }
                }
                Format::Json => emit_json(out, &sol.to_json())?,
            }
        }
        Command::Expsum {
            shape,
            h_range,
            m,
            n,
            x,
            h,
            delta,
            coef,
            lemma,
            pair,
            regime,
        } => {
            let coefficients = Coefficients::parse(coef, g.seed)?;
            let scenario = if *regime {
                regime_scenario(*x, coefficients)?
            } else {
                let shape = match shape {
                    ShapeArg::Monomial => Shape::Monomial1D { n: *n },
                    ShapeArg::Bilinear => Shape::BilinearII { m: *m, n: *n },
                    ShapeArg::Triple => Shape::TripleHMN { h: *h_range, m: *m, n: *n },
                };
                ExpSumScenario::new(shape, *x, *h, *delta, coefficients)?
            };
            // fail early on the budget before any bound evaluation
            compute_expsum_with_budget(&scenario, g.max_terms)?;
            let lemma = match (regime, lemma) {
                (true, _) => BoundLemma::Trilinear,
                (false, LemmaArg::Vdc) => BoundLemma::VanDerCorput,
                (false, LemmaArg::Lwy) => BoundLemma::Trilinear,
                (false, LemmaArg::Rs) => BoundLemma::TrilinearFixed,
            };
            let pair = ExponentPair::parse(pair)?;
            let cmp = bound_comparison(&scenario, lemma, Some(&pair))?;
            let id = if *regime { "regime".to_string() } else { format!("{}-{}", scenario.shape.name(), g.seed) };
            let row = ReportRow::new(id, &scenario, &cmp);
            match fmt {
                Format::Csv => write_report_csv(&[row], &mut *out)?,
                Format::Json => emit_json(out, &json!({"scenario": scenario, "row": row, "comparison": cmp}))?,
            }
        }
        Command::Classify { k, d, factors } => {
            let c = classify_factorization(*k, *d, factors)?;
            match fmt {
                Format::Csv => {
                    let fs: Vec<String> = c.factors.iter().map(u64::to_string).collect();
                    writeln!(out, "k,D,factors,case,t,L1,L2")?;
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        c.k,
                        c.d,
                        fs.join(" "),
                        c.case.label(),
                        c.merge_index.map(|t| t.to_string()).unwrap_or_default(),
                        c.l1.clone().unwrap_or_default(),
                        c.l2.clone().unwrap_or_default()
                    )?;
                }
                Format::Json => emit_json(out, &c)?,
            }
        }
    }
    Ok(())
}

fn split_kv(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Parse(format!("expected name=value, got `{s}`")))
}
