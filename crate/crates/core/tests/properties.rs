use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::One;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use floorsum_core::balance::{evaluate_at, lambda_error_forms, minimize_max, ParamBox};
use floorsum_core::exppair::{eval_word, ExponentPair};
use floorsum_core::expsum::{classify_factorization, compute_expsum, Case, Coefficients, ExpSumScenario, Shape};
use floorsum_core::floor_sums::{sum_direct, sum_dual};
use floorsum_core::rational::{q, qi, Q};
use floorsum_core::sieve::{
    lambda_from_base, point_value, sieve_table, sieve_table_with, tau_k_by_convolution, ArithKind, SieveOptions,
};
use floorsum_core::vaughan::decompose;

fn kinds() -> impl Strategy<Value = ArithKind> {
    prop_oneof![
        Just(ArithKind::Lambda),
        Just(ArithKind::Mu),
        (2u32..=5).prop_map(ArithKind::TauK),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segments_partition_the_range(kind in kinds(), lo in 1u64..50_000, len in 1u64..5_000, cut in 0u64..5_000, seg in 1u64..700) {
        let hi = lo + len;
        let mid = lo + cut % len;
        let whole = sieve_table(kind, lo, hi).unwrap();
        let small = SieveOptions { segment_len: seg, ..SieveOptions::default() };
        prop_assert_eq!(&sieve_table_with(kind, lo, hi, &small).unwrap(), &whole);
        if mid > lo {
            let left = sieve_table(kind, lo, mid).unwrap();
            let right = sieve_table(kind, mid, hi).unwrap();
            let mut joined = left.values.clone();
            joined.extend(right.values);
            prop_assert_eq!(joined, whole.values);
        }
    }

    #[test]
    fn pointwise_matches_sieve(kind in kinds(), n in 1u64..=100_000) {
        let t = sieve_table(kind, n, n + 1).unwrap();
        prop_assert_eq!(t.values[0], point_value(kind, n).unwrap());
    }

    #[test]
    fn random_words_give_valid_pairs(word in proptest::collection::vec(prop_oneof![Just('A'), Just('B')], 0..12)) {
        let w: String = word.into_iter().collect();
        let p = eval_word(&w, &ExponentPair::half()).unwrap();
        prop_assert!(*p.kappa() >= qi(0) && *p.kappa() <= q(1, 2));
        prop_assert!(*p.lambda() >= q(1, 2) && *p.lambda() <= qi(1));
    }

    #[test]
    fn dual_matches_direct(kind in prop_oneof![Just(ArithKind::Lambda), (2u32..=3).prop_map(ArithKind::TauK)],
                           x in 1u64..200_000, frac in 0.0f64..1.0) {
        let n = ((x as f64 * frac) as u64).clamp(1, x);
        let d = sum_dual(kind, x, n).unwrap();
        let direct = sum_direct(kind, x).unwrap();
        prop_assert!(d.total.agrees_with(&direct, 1e-12));
        prop_assert_eq!(d.psi_form_mismatches, 0);
        let recon = d.psi_reconstruction();
        prop_assert!((recon - d.s2.as_f64()).abs() <= 1e-8 * d.s2.as_f64().abs().max(1.0));
    }

    #[test]
    fn classification_is_a_partition(k in 2usize..=5, exps in proptest::collection::vec(0u32..=11, 5), pick in 0.0f64..1.0) {
        let mut e = exps[..k].to_vec();
        e.sort_unstable();
        let factors: Vec<u64> = e.iter().map(|&v| 1u64 << v).collect();
        let product: u64 = factors.iter().product();
        let d_min = (product >> k) + 1;
        let d = d_min + ((product - d_min) as f64 * pick) as u64;
        let c = classify_factorization(k, d, &factors).unwrap();
        let dk = factors[k - 1] as u128;
        let (d, cube) = (d as u128, dk * dk * dk);
        let expected = if cube > d * d { Case::I } else if cube >= d { Case::II } else { Case::III };
        prop_assert_eq!(c.case, expected);
        if c.case == Case::III {
            let l1: u128 = c.l1.unwrap().parse().unwrap();
            prop_assert!(l1 * l1 * l1 >= d && l1 * l1 * l1 <= d * d);
            // every factor is below D^{1/3} in case III
            prop_assert!(factors.iter().all(|&f| (f as u128).pow(3) < d));
        }
    }
}

#[test]
fn dirichlet_identities() {
    let limit = 20_000u64;
    let mu = sieve_table(ArithKind::Mu, 1, limit + 1).unwrap();
    let lam = sieve_table(ArithKind::Lambda, 1, limit + 1).unwrap();
    let mut mu_sum = vec![0i64; limit as usize + 1];
    let mut lam_sum = vec![0f64; limit as usize + 1];
    for d in 1..=limit {
        let (m, l) = (mu.values[d as usize - 1], lambda_from_base(lam.values[d as usize - 1]));
        let mut n = d;
        while n <= limit {
            mu_sum[n as usize] += m;
            lam_sum[n as usize] += l;
            n += d;
        }
    }
    for n in 1..=limit as usize {
        assert_eq!(mu_sum[n], (n == 1) as i64, "sum of mu over divisors of {n}");
        assert!((lam_sum[n] - (n as f64).ln()).abs() < 1e-9, "sum of Lambda over divisors of {n}");
    }
    for k in 2..=4 {
        let conv = tau_k_by_convolution(limit, k).unwrap();
        let sieved = sieve_table(ArithKind::TauK(k), 1, limit + 1).unwrap();
        for n in 1..=limit as usize {
            assert_eq!(conv[n] as i64, sieved.values[n - 1], "tau_{k}({n})");
        }
    }
}

#[test]
fn vaughan_identity_random_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let d = rng.gen_range(101..3_000u64);
        let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
        let dec = decompose(d, |n| {
            let t = a * n as f64 + b * (n as f64).sqrt();
            Complex64::from_polar(1.0, std::f64::consts::TAU * t)
        })
        .unwrap();
        assert!(dec.rel_err <= 1e-9, "D={d}: {}", dec.rel_err);
    }
}

#[test]
fn balance_solution_is_optimal() {
    let forms = lambda_error_forms();
    let params = vec!["r".to_string(), "w".to_string()];
    let sol = minimize_max(&forms, &params, &[ParamBox::unit(), ParamBox::unit()]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let mut at = BTreeMap::new();
        for p in &params {
            let v: Q = sol.get(p).unwrap() + q(rng.gen_range(-1000..=1000), 100_000);
            at.insert(p.clone(), v.clamp(qi(0), qi(1)));
        }
        assert!(evaluate_at(&forms, &at).unwrap().max >= sol.value);
    }
    for v in sol.assignment.iter().map(|(_, v)| v).chain([&sol.value]) {
        assert!(v.numer().gcd(v.denom()).is_one());
    }
}

#[test]
fn expsum_is_thread_independent_and_trivially_bounded() {
    let scenarios = [
        ExpSumScenario::new(Shape::Monomial1D { n: 50_000 }, 1_000_000_007, 3, 1, Coefficients::Lambda).unwrap(),
        ExpSumScenario::new(Shape::BilinearII { m: 300, n: 200 }, 123_456_789, 1, 0, Coefficients::Mobius).unwrap(),
        ExpSumScenario::new(
            Shape::TripleHMN { h: 4, m: 40, n: 60 },
            987_654_321,
            1,
            1,
            Coefficients::RandomUnimodular { seed: 5 },
        )
        .unwrap(),
    ];
    for s in &scenarios {
        let mut values = Vec::new();
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            values.push(pool.install(|| compute_expsum(s).unwrap()));
        }
        for v in &values[1..] {
            assert!((v.modulus - values[0].modulus).abs() <= 1e-9 * values[0].modulus.max(1.0));
        }
        assert!(values[0].modulus <= values[0].coefficient_mass + 1e-9);
    }
}
