//! Acceptance checks. Each test prints one `PASS`/`FAIL` line to the real
//! stdout (not the captured test output) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use floorsum_core::balance::{lambda_error_forms, minimize_max, refined_error_forms, ParamBox};
use floorsum_core::constants::{main_constant, zeta2_power, tau_dirichlet_partial, ConstantBracket};
use floorsum_core::exppair::{eval_word, ExponentPair};
use floorsum_core::expsum::{classify_factorization, Case};
use floorsum_core::floor_sums::{
    distinct_quotients, error_series, fit_exponent, floor_root_power, geometric_grid, sum_blocked, sum_dual,
    DirectEvaluator,
};
use floorsum_core::rational::{fmt_q, q};
use floorsum_core::sieve::ArithKind;
use floorsum_core::vaaler::{check_vaaler_inequality, test_grid};
use floorsum_core::vaughan::{coefficient_bounds_report, decompose};

fn report(id: &str, name: &str, ok: bool, detail: impl AsRef<str>) {
    let line = format!(
        "\ncriterion {id:<3} {:<4} {name}: {}\n",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "criterion {id} ({name}) failed: {}", detail.as_ref());
}

fn median_time<F: FnMut()>(runs: usize, mut f: F) -> Duration {
    f();
    let mut times: Vec<Duration> = (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .collect();
    times.sort();
    times[runs / 2]
}

#[test]
fn c01_exponent_pair_regression() {
    let base = ExponentPair::new(q(13, 84), q(55, 84)).unwrap();
    let p = eval_word("BA^5", &base).unwrap();
    let exact = *p.kappa() == q(1653, 3494) && *p.lambda() == q(1760, 3494);
    let t = median_time(101, || {
        eval_word("BA^5", &base).unwrap();
    });
    report(
        "1",
        "exponent pair BA^5 (13/84, 55/84)",
        exact && t < Duration::from_millis(1),
        format!("({}, {}) in {t:?}", fmt_q(p.kappa()), fmt_q(p.lambda())),
    );
}

#[test]
fn c02_balancing_regression() {
    let params = vec!["r".to_string(), "w".to_string()];
    let unit = [ParamBox::unit(), ParamBox::unit()];
    let forms = lambda_error_forms();
    let refined = refined_error_forms();
    let t = Instant::now();
    let sol = minimize_max(&forms, &params, &unit).unwrap();
    let alt = minimize_max(&refined, &params, &unit).unwrap();
    let elapsed = t.elapsed();
    let main_ok = sol.get("r") == Some(&q(1, 195))
        && sol.get("w") == Some(&q(3, 130))
        && sol.value == q(92, 195)
        && sol.value == q(7, 15) + q(1, 195)
        && sol.active.len() == 3;
    let alt_ok = alt.get("r") == Some(&q(6, 923))
        && alt.value == q(435, 923)
        && alt.value == q(7, 15) + q(64, 13845);
    let w_alt = alt.get("w").unwrap();
    report(
        "2",
        "exponent balancing",
        main_ok && alt_ok && elapsed < Duration::from_millis(10),
        format!(
            "r={} w={} value={}; variant r={} value={} w={} (printed alternative 205/923, {}); {elapsed:?}",
            fmt_q(sol.get("r").unwrap()),
            fmt_q(sol.get("w").unwrap()),
            fmt_q(&sol.value),
            fmt_q(alt.get("r").unwrap()),
            fmt_q(&alt.value),
            fmt_q(w_alt),
            if *w_alt == q(205, 923) { "agrees" } else { "differs" }
        ),
    );
}

#[test]
fn c03_oracle_equivalence() {
    let t = Instant::now();
    let kinds = [ArithKind::TauK(2), ArithKind::TauK(3), ArithKind::Lambda];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let random_x: Vec<u64> = (0..200).map(|_| rng.gen_range(1..=10_000_000)).collect();
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for kind in kinds {
        let tol = if kind == ArithKind::Lambda { 1e-9 } else { 0.0 };
        let direct = DirectEvaluator::new(kind, 10_000_000).unwrap();
        for x in (1..=10_000u64).chain(random_x.iter().copied()) {
            let a = direct.sum(x).unwrap();
            let b = sum_blocked(kind, x).unwrap();
            checked += 1;
            if !a.agrees_with(&b, tol) {
                failures.push(format!("{} x={x}: {a} vs {b}", kind.name()));
            }
        }
        let xs = [1u64, 2, 10, 100, 997, 10_000, 123_456, 1_000_000, 9_999_991];
        for &x in &xs {
            let root = floor_root_power(x, 7, 15);
            let mut splits = if x <= 100_000 {
                vec![1, root, root + 1, x / 2, x.saturating_sub(1), x]
            } else {
                vec![root.saturating_sub(1), root, root + 1, floorsum_core::sieve::isqrt(x)]
            };
            splits.retain(|&n| n >= 1 && n <= x);
            splits.sort_unstable();
            splits.dedup();
            let expect = direct.sum(x).unwrap();
            for n in splits {
                let d = sum_dual(kind, x, n).unwrap();
                checked += 1;
                if !d.total.agrees_with(&expect, tol.max(1e-12)) || d.psi_form_mismatches != 0 {
                    failures.push(format!("{} dual x={x} N={n}: {} vs {expect}", kind.name(), d.total));
                }
            }
        }
    }
    let elapsed = t.elapsed();
    report(
        "3",
        "blocked/direct/dual agreement",
        failures.is_empty() && elapsed < Duration::from_secs(300),
        format!("{checked} comparisons, {} mismatches {:?}, {elapsed:?}", failures.len(), failures.first()),
    );
}

#[test]
fn c04_block_count_bound() {
    let mut bad = Vec::new();
    for x in 1..=10_000u64 {
        let dec = distinct_quotients(x).unwrap();
        let limit = 2.0 * (x as f64).sqrt() + 1.0;
        let mut next = 1;
        let mut ok = (dec.blocks.len() as f64) <= limit;
        for b in &dec.blocks {
            ok &= b.n_lo == next && b.n_hi >= b.n_lo && x / b.n_lo == b.q && x / b.n_hi == b.q;
            ok &= b.n_hi == x || x / (b.n_hi + 1) != b.q;
            next = b.n_hi + 1;
        }
        ok &= next == x + 1;
        if !ok {
            bad.push(x);
        }
    }
    let at100 = distinct_quotients(100).unwrap().blocks.len();
    report(
        "4",
        "quotient blocks",
        bad.is_empty() && at100 == 19,
        format!("violations {}, x=100 gives {at100} blocks", bad.len()),
    );
}

#[test]
fn c05_vaaler_inequality() {
    let t = Instant::now();
    let grid = test_grid(-2.0, 2.0, 10_000, 12);
    let mut worst = f64::NEG_INFINITY;
    let mut min_delta = f64::INFINITY;
    let mut integers_ok = true;
    for h in [1, 5, 10, 50] {
        let rep = check_vaaler_inequality(h, &grid).unwrap();
        worst = worst.max(rep.max_violation);
        min_delta = min_delta.min(rep.min_delta);
        for r in rep.rows.iter().filter(|r| r.x.fract() == 0.0) {
            integers_ok &= (r.delta - 0.5).abs() < 1e-12 && ((r.psi_star - r.psi).abs() - 0.5).abs() < 1e-12;
        }
    }
    let elapsed = t.elapsed();
    report(
        "5",
        "sawtooth approximation inequality",
        worst <= 1e-12 && min_delta >= -1e-12 && integers_ok && elapsed < Duration::from_secs(30),
        format!(
            "{} points, max(|psi*-psi|-delta)={worst:.3e}, min delta={min_delta:.3e}, equality at integers {integers_ok}, {elapsed:?}",
            grid.len()
        ),
    );
}

#[test]
fn c06_vaughan_identity() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut coef_ratio: f64 = 0.0;
    for d in [200u64, 1_000, 10_000] {
        for _ in 0..50 {
            let thetas: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            let dec = decompose(d, |n| {
                Complex64::from_polar(1.0, std::f64::consts::TAU * thetas[(n - d - 1) as usize])
            })
            .unwrap();
            worst = worst.max(dec.rel_err);
        }
        coef_ratio = coef_ratio.max(coefficient_bounds_report(d).unwrap().max_c_ratio);
    }
    let elapsed = t.elapsed();
    report(
        "6",
        "Vaughan identity",
        worst <= 1e-9 && coef_ratio <= 1.0 + 1e-12 && elapsed < Duration::from_secs(120),
        format!("max relative error {worst:.3e}, max |c(m)|/log m = {coef_ratio:.6}, {elapsed:?}"),
    );
}

#[test]
fn c07_main_term_constants() {
    let ns = [10_000u64, 100_000, 1_000_000, 10_000_000, 100_000_000];
    let brackets: Vec<ConstantBracket> = ns
        .iter()
        .map(|&n| main_constant(ArithKind::Lambda, n).unwrap())
        .collect();
    let shrinking = brackets.windows(2).all(|w| w[1].width() < w[0].width());
    let nested = brackets.windows(2).all(|w| w[1].lo <= w[0].hi && w[0].lo <= w[1].hi);
    let last = brackets.last().unwrap().width();

    let mut tau_ok = true;
    let mut tau_detail = String::new();
    for k in [2u32, 3] {
        let zeta = zeta2_power(k);
        let taus: Vec<ConstantBracket> = ns[..4]
            .iter()
            .map(|&n| main_constant(ArithKind::TauK(k), n).unwrap())
            .collect();
        tau_ok &= taus.windows(2).all(|w| w[1].width() < w[0].width());
        tau_ok &= taus.windows(2).all(|w| w[1].lo <= w[0].hi && w[0].lo <= w[1].hi);
        // the Dirichlet partial sums approach zeta(2)^k from below
        let partial = tau_dirichlet_partial(k, 1_000_000).unwrap();
        tau_ok &= partial.hi <= zeta.hi && zeta.lo - partial.hi < 1e-3 * k as f64;
        tau_detail.push_str(&format!(
            " tau{k} width@1e7={:.2e} zeta2^{k}-partial={:.2e};",
            taus[3].width(),
            zeta.mid() - partial.mid()
        ));
    }
    report(
        "7",
        "main-term constant brackets",
        shrinking && nested && last < 4e-7 && tau_ok,
        format!("lambda width@1e8={last:.3e}, shrinking {shrinking}, overlapping {nested};{tau_detail}"),
    );
}

fn error_criterion(id: &str, kind: ArithKind, terms: u64) {
    let t = Instant::now();
    let bracket = main_constant(kind, terms).unwrap();
    let xs = geometric_grid(10_000, 100_000_000);
    let series = error_series(&bracket, &xs, None).unwrap();
    let fit = fit_exponent(&series).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_x = 0;
    for r in &series.rows {
        let e = r.e_lo.abs().max(r.e_hi.abs());
        let ratio = e / (r.x as f64).powf(0.55);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_x = r.x;
        }
    }
    let elapsed = t.elapsed();
    report(
        id,
        &format!("{} error term within x^0.55", kind.name()),
        bracket.width() <= 1e-7 && worst_ratio <= 1.0 && elapsed < Duration::from_secs(600),
        format!(
            "C in [{:.10}, {:.10}] (width {:.2e}); max |E|/x^0.55 = {worst_ratio:.3} at x={worst_x}; fitted slope {:.4}, residual {:.4}; {elapsed:?}",
            bracket.lo,
            bracket.hi,
            bracket.width(),
            fit.slope,
            fit.residual
        ),
    );
}

#[test]
fn c08a_lambda_error_term() {
    error_criterion("8a", ArithKind::Lambda, 250_000_000);
}

#[test]
fn c08b_tau2_error_term() {
    error_criterion("8b", ArithKind::TauK(2), 250_000_000);
}

#[test]
fn c09_blocked_performance_and_determinism() {
    let mut values = Vec::new();
    let mut slowest = Duration::ZERO;
    for threads in [1, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let t = Instant::now();
        let v = pool.install(|| sum_blocked(ArithKind::Lambda, 100_000_000).unwrap());
        slowest = slowest.max(t.elapsed());
        values.push(v.as_f64());
    }
    let identical = values.iter().all(|v| v.to_bits() == values[0].to_bits());
    report(
        "9",
        "blocked evaluation at 1e8",
        identical && slowest < Duration::from_secs(10),
        format!("S = {:.6} at 1/2/8 threads, bitwise identical {identical}, slowest {slowest:?}", values[0]),
    );
}

#[test]
fn c10_case_classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut counts = [0usize; 3];
    let mut errors = Vec::new();
    for _ in 0..10_000 {
        let k = rng.gen_range(2..=6usize);
        let mut exps: Vec<u32> = (0..k).map(|_| rng.gen_range(0..=10)).collect();
        exps.sort_unstable();
        let factors: Vec<u64> = exps.iter().map(|&e| 1u64 << e).collect();
        let product: u64 = factors.iter().product();
        // any D with D ≤ product < 2^k D
        let d_min = (product >> k) + 1;
        let d = rng.gen_range(d_min.max(1)..=product);
        let c = classify_factorization(k, d, &factors).unwrap();
        let big_d = BigUint::from(d);
        let cube = |v: u64| BigUint::from(v).pow(3);
        let dk3 = cube(factors[k - 1]);
        let in_i = dk3 > &big_d * &big_d;
        let in_ii = dk3 >= big_d && dk3 <= &big_d * &big_d;
        let in_iii = dk3 < big_d;
        if [in_i, in_ii, in_iii].iter().filter(|&&b| b).count() != 1 {
            errors.push(format!("overlap or gap for D={d} {factors:?}"));
        }
        let expected = if in_i { Case::I } else if in_ii { Case::II } else { Case::III };
        if c.case != expected {
            errors.push(format!("D={d} {factors:?}: {:?} vs {expected:?}", c.case));
        }
        counts[match c.case {
            Case::I => 0,
            Case::II => 1,
            Case::III => 2,
        }] += 1;
        if c.case == Case::III {
            let l1: BigUint = c.l1.as_ref().unwrap().parse().unwrap();
            let l1c = l1.pow(3);
            if !(l1c >= big_d && l1c <= &big_d * &big_d) {
                errors.push(format!("merge out of range for D={d} {factors:?}: L1={l1}"));
            }
        }
    }
    report(
        "10",
        "dyadic case classification",
        errors.is_empty() && counts.iter().all(|&c| c > 0),
        format!("I/II/III = {}/{}/{}, {} problems {:?}", counts[0], counts[1], counts[2], errors.len(), errors.first()),
    );
}
