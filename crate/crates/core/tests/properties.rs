use proptest::prelude::*;
use stable_regen::combinatorics::{
    count_overlap_pairs, enumerate_tuples, product_uniform_cdf, TupleDomain,
};
use stable_regen::empirics::{
    empirical_supmeasure, extremal_index_blocks, ks_distance, BlockScheme,
};
use stable_regen::experiments::seed_stream;
use stable_regen::intersection::intersect_paths;
use stable_regen::model::{elementary_symmetric, evaluate_path, sample_environment};
use stable_regen::renewal::sample_conditioned_renewal;
use stable_regen::{ModelParams, RenewalLaw, RenewalTables, TailIndex};

fn brute_force(p: usize, x: u64, cap: Option<u64>) -> Vec<Vec<u64>> {
    fn rec(
        p: usize,
        x: u64,
        top: u64,
        start: u64,
        prod: u64,
        cur: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for v in start..=top {
            if prod * v > x {
                break;
            }
            cur.push(v);
            rec(p, x, top, v + 1, prod * v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    let top = cap.unwrap_or(x).min(x);
    rec(p, x, top, 1, 1, &mut Vec::new(), &mut out);
    out
}

fn subsets(v: &[f64], p: usize) -> f64 {
    fn rec(v: &[f64], p: usize, start: usize, prod: f64) -> f64 {
        if p == 0 {
            return prod;
        }
        (start..v.len()).map(|i| rec(v, p - 1, i + 1, prod * v[i])).sum()
    }
    rec(v, p, 0, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_brute_force(p in 1usize..=4, x in 0u64..=10_000, cap in proptest::option::of(1u64..200)) {
        let d = TupleDomain::new(p as u32, x as f64, cap).unwrap();
        let fast = enumerate_tuples(&d).unwrap();
        let slow = brute_force(p, x, cap);
        prop_assert_eq!(d.count(), slow.len() as u64);
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn domain_grows_with_bound(p in 1u32..=3, x in 0.0f64..2000.0, k1 in 0.0f64..4.0, k2 in 0.0f64..4.0) {
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let a = TupleDomain::new(p, lo * x, Some(40)).unwrap();
        let b = TupleDomain::new(p, hi * x, Some(40)).unwrap();
        prop_assert!(a.count() <= b.count());
        for t in enumerate_tuples(&a).unwrap() {
            prop_assert!(b.contains(&t));
        }
    }

    #[test]
    fn overlap_pairs_match_brute_force(p in 1u32..=3, x in 1.0f64..300.0, r in 0usize..=3) {
        let d = TupleDomain::new(p, x, None).unwrap();
        let ts = enumerate_tuples(&d).unwrap();
        let mut slow = 0u64;
        for a in &ts {
            for b in &ts {
                if a.iter().filter(|v| b.contains(v)).count() == r {
                    slow += 1;
                }
            }
        }
        prop_assert_eq!(count_overlap_pairs(&ts, r).unwrap(), slow);
    }

    #[test]
    fn product_uniform_cdf_is_monotone(s1 in 1e-9f64..1.0, s2 in 1e-9f64..1.0, p in 1u32..=6) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let a = product_uniform_cdf(lo, p).unwrap();
        let b = product_uniform_cdf(hi, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= b * (1.0 + 1e-12));
        prop_assert!(product_uniform_cdf(lo, p + 1).unwrap() >= a);
    }

    #[test]
    fn tail_index_round_trip(num in 1u64..1000, den in 2u64..1000) {
        prop_assume!(num < den);
        let b: TailIndex = format!("{num}/{den}").parse().unwrap();
        let again: TailIndex = b.to_string().parse().unwrap();
        prop_assert_eq!(b, again);
        prop_assert!((b.value() - num as f64 / den as f64).abs() < 1e-15);
    }

    #[test]
    fn beta_index_is_affine(b in 0.01f64..0.99, q in 1u32..8) {
        let t = TailIndex::new(b).unwrap();
        prop_assert!((t.beta_q(q) - (q as f64 * b - q as f64 + 1.0)).abs() < 1e-12);
        prop_assert!(t.beta_q(t.p_prime()) > 0.0);
        prop_assert!(t.beta_q(t.p_prime() + 1) <= 0.0);
    }

    #[test]
    fn ks_distance_is_a_probability(xs in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let d = ks_distance(&xs, |x| 1.0 / (1.0 + (-x).exp()));
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-12);
    }

    #[test]
    fn supmeasure_of_union_is_max(xs in prop::collection::vec(-10.0f64..10.0, 1..100), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let mut e = [a, b, c];
        e.sort_by(f64::total_cmp);
        let m = empirical_supmeasure(&xs, &[(e[0], e[1]), (e[1], e[2]), (e[0], e[2])]);
        prop_assert_eq!(m[2], m[0].max(m[1]));
    }

    #[test]
    fn extremal_index_is_in_unit_interval(xs in prop::collection::vec(0.0f64..100.0, 16..400), d in 1u64..16, q in 0.5f64..0.99) {
        let n = xs.len() as u64;
        prop_assume!(d <= n);
        let scheme = BlockScheme::new(n, d).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let u = sorted[(q * n as f64) as usize];
        if let Some(est) = extremal_index_blocks(&xs, &scheme, u) {
            prop_assert!(est.theta > 0.0 && est.theta <= 1.0);
            let cubed: Vec<f64> = xs.iter().map(|x| x.powi(3) + 1.0).collect();
            let again = extremal_index_blocks(&cubed, &scheme, u.powi(3) + 1.0).unwrap();
            prop_assert_eq!(est.theta, again.theta);
        }
    }

    #[test]
    fn elementary_symmetric_matches_subsets(v in prop::collection::vec(-2.0f64..2.0, 0..10), p in 1usize..5) {
        let fast = elementary_symmetric(&v, p);
        let slow = subsets(&v, p);
        let scale: f64 = subsets(&v.iter().map(|x| x.abs()).collect::<Vec<_>>(), p).max(1e-300);
        prop_assert!((fast - slow).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn intersection_is_common_subset(seed in any::<u64>(), n in 1usize..300) {
        let law = RenewalLaw::default_law(0.5).unwrap();
        let tables = RenewalTables::stationary(&law, n).unwrap();
        let mut rng = seed_stream(seed, 0);
        let paths: Vec<Vec<u64>> = (0..3)
            .map(|_| sample_conditioned_renewal(&law, &tables, n, &mut rng).hits)
            .collect();
        for p in &paths {
            prop_assert!(!p.is_empty());
            prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(*p.last().unwrap() as usize <= n);
        }
        let common = intersect_paths(&paths);
        for k in &common {
            prop_assert!(paths.iter().all(|p| p.binary_search(k).is_ok()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn paths_are_reproducible_and_symmetric(seed in any::<u64>(), stream in any::<u64>(), p in 1u32..=3) {
        let law = RenewalLaw::default_law(0.6).unwrap();
        let n = 512u64;
        let tables = RenewalTables::stationary(&law, n as usize).unwrap();
        let params = ModelParams::new(1.3, TailIndex::new(0.6).unwrap(), p, n, 40, seed).unwrap();
        let env = sample_environment(&params, &law, &tables, &mut seed_stream(seed, stream)).unwrap();
        let again = sample_environment(&params, &law, &tables, &mut seed_stream(seed, stream)).unwrap();
        let x = evaluate_path(&env, &params, &tables).unwrap();
        prop_assert_eq!(&x.values, &evaluate_path(&again, &params, &tables).unwrap().values);
        let mut flipped = env.clone();
        for (w, s) in flipped.weights.iter_mut().zip(flipped.signs.iter_mut()) {
            *w = -*w;
            *s = -*s;
        }
        let y = evaluate_path(&flipped, &params, &tables).unwrap();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        for (a, b) in x.values.iter().zip(&y.values) {
            prop_assert!((a - sign * b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
