use stable_regen::experiments::seed_stream;
use stable_regen::limit::sample_z;
use stable_regen::model::{
    default_truncation, evaluate_path, recommend_truncation, sample_environment,
    truncation_sweep,
};
use stable_regen::{ModelParams, RenewalLaw, RenewalTables, TailIndex};

// E|S_k| = L/W_n at every k, including both ends of the window.
#[test]
fn coverage_is_shift_invariant() {
    let n = 2000u64;
    let law = RenewalLaw::default_law(0.5).unwrap();
    let tables = RenewalTables::stationary(&law, n as usize).unwrap();
    let l = 60;
    let params = ModelParams::new(1.0, TailIndex::new(0.5).unwrap(), 2, n, l, 3).unwrap();
    let reps = 400;
    let mut counts = [0usize; 3];
    let ks = [1, n / 2, n];
    for r in 0..reps {
        let env = sample_environment(&params, &law, &tables, &mut seed_stream(3, r)).unwrap();
        let x = evaluate_path(&env, &params, &tables).unwrap();
        for (c, &k) in counts.iter_mut().zip(&ks) {
            *c += x.coverage(k).len();
        }
    }
    let expect = reps as f64 * l as f64 / tables.first_hit_mass(n as usize);
    for c in counts {
        // Poisson-like count; 5 standard deviations.
        assert!((c as f64 - expect).abs() < 5.0 * expect.sqrt(), "{c} vs {expect}");
    }
}

#[test]
fn limit_variable_is_positive_and_rarely_truncation_sensitive() {
    let beta = TailIndex::new(0.75).unwrap();
    let draws = 500;
    let mut flagged = 0;
    for r in 0..draws {
        let s = sample_z(1.0, beta, 2, 64, &mut seed_stream(8, r)).unwrap();
        assert!(s.z > 0.0 && s.z.is_finite());
        assert!(s.z >= s.z_half);
        flagged += s.truncation_sensitive as usize;
    }
    assert!(flagged * 100 < draws as usize, "{flagged} of {draws} flagged");
}

#[test]
fn truncation_sweep_reaches_small_gap_for_p1() {
    let n = 1u64 << 14;
    let law = RenewalLaw::default_law(0.6).unwrap();
    let tables = RenewalTables::stationary(&law, n as usize).unwrap();
    let params = ModelParams::new(1.0, TailIndex::new(0.6).unwrap(), 1, n, 64, 21).unwrap();
    let grid: Vec<usize> = (0..8).map(|j| 64 << j).collect();
    let reports = truncation_sweep(&params, &law, &tables, 100, &grid).unwrap();
    let medians: Vec<f64> = reports.iter().map(|r| r.median).collect();
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
    let q90: Vec<f64> = reports.iter().map(|r| r.q90).collect();
    assert!(q90.windows(2).all(|w| w[1] <= w[0]), "{q90:?}");
    assert!(recommend_truncation(&reports, 0.01).is_some(), "{medians:?}");
}

fn marginals_at(p: u32, reps: usize, ks: [u64; 3]) -> Vec<Vec<f64>> {
    let n = ks[2];
    let law = RenewalLaw::default_law(0.6).unwrap();
    let tables = RenewalTables::stationary(&law, n as usize).unwrap();
    let l = default_truncation(&tables, n);
    let params = ModelParams::new(1.0, TailIndex::new(0.6).unwrap(), p, n, l, 17).unwrap();
    let mut values = vec![Vec::with_capacity(reps); 3];
    for r in 0..reps {
        let env = sample_environment(&params, &law, &tables, &mut seed_stream(17, r as u64)).unwrap();
        let x = evaluate_path(&env, &params, &tables).unwrap();
        for (v, &k) in values.iter_mut().zip(&ks) {
            v.push(x.value(k));
        }
    }
    values
}

// For p = 1 the marginal is symmetric. For p ≥ 2 it is not (e_2 of three
// equal-size weights is 3 or −1), so only stationarity is checked there.
#[test]
fn p1_marginals_are_symmetric() {
    for v in marginals_at(1, 600, [1, 2048, 4096]) {
        let nonzero: Vec<f64> = v.into_iter().filter(|x| *x != 0.0).collect();
        let mean_sign = nonzero.iter().map(|x| x.signum()).sum::<f64>() / nonzero.len() as f64;
        let se = 1.0 / (nonzero.len() as f64).sqrt();
        assert!(mean_sign.abs() < 3.0 * se, "mean sign {mean_sign} (se {se})");
    }
}

#[test]
fn tail_probabilities_are_stationary_in_k() {
    let reps = 600;
    let values = marginals_at(2, reps, [1, 2048, 4096]);
    let mut all: Vec<f64> = values.concat().iter().map(|x| x.abs()).collect();
    all.sort_by(f64::total_cmp);
    let threshold = all[all.len() / 2];
    let tails: Vec<f64> = values
        .iter()
        .map(|v| v.iter().filter(|x| x.abs() > threshold).count() as f64 / reps as f64)
        .collect();
    let se = (0.25 / reps as f64).sqrt();
    for t in &tails {
        assert!((t - tails[0]).abs() < 4.0 * se * 2f64.sqrt(), "{tails:?}");
    }
}
