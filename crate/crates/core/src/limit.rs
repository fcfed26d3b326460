//! Limit laws for the normalized maxima: regime-dependent normalizations
//! `c_n`, the constant `𝔠_{F,p}`, the Fréchet marginal of the independently
//! scattered sup-measure, and the super-critical limit variable
//!
//! ```text
//! Z_{α,β,p} = sup_{J ∈ 𝒥_{p,p′}} Σ_{i ∈ J} [ε_i] / [Γ_i]^{1/α}.
//! ```

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::intersection::{
    shape_constant, terminating_prob, Regime, RegimeReport, TailIndex, TerminatingProb,
};
use crate::renewal::{renewal_mass, RenewalLaw, RenewalTables};
use crate::special::{binomial_u128, factorial, gamma_reflection_pair, quantile_sorted};
use crate::{Error, Result};

/// Default truncation of the renewal mass series behind `𝔮_{F,p}`.
pub const DEFAULT_Q_TRUNCATION: usize = 100_000;

/// Default number of Poisson arrivals kept in the `Z` sampler.
pub const DEFAULT_L_CAP: usize = 64;

/// Guard on the number of aggregations visited by [`sample_z`] and
/// [`enumerate_aggregations`].
pub const AGGREGATION_GUARD: u128 = 5_000_000;

/// Smallest `n` accepted by the critical normalization.
pub const CRITICAL_MIN_N: u64 = 16;

/// `c_n`: `n^{(1−β_p)/α}` (super-critical),
/// `(n (log log n)^{p−1} / log n)^{1/α}` (critical),
/// `(n log^{p−1} n)^{1/α}` (sub-critical).
pub fn normalization(alpha: f64, beta: TailIndex, p: u32, n: u64) -> Result<f64> {
    let nf = n as f64;
    match beta.regime(p) {
        Regime::SuperCritical => Ok(nf.powf((1.0 - beta.beta_q(p)) / alpha)),
        Regime::Critical => {
            if n < CRITICAL_MIN_N {
                return Err(Error::invalid(
                    "n",
                    format!("critical normalization needs n >= {CRITICAL_MIN_N}, got {n}"),
                ));
            }
            let ln = nf.ln();
            Ok((nf * ln.ln().powi(p as i32 - 1) / ln).powf(1.0 / alpha))
        }
        Regime::SubCritical => {
            if p > 1 && n < 2 {
                return Err(Error::invalid("n", "sub-critical normalization needs n >= 2"));
            }
            Ok((nf * nf.ln().powi(p as i32 - 1)).powf(1.0 / alpha))
        }
    }
}

/// `𝔠_{F,p}` with, in the sub-critical regime, the bracket inherited from
/// the truncated `𝔮_{F,p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitConstant {
    pub regime: Regime,
    pub value: f64,
    pub bracket: Option<(f64, f64)>,
    pub terminating: Option<TerminatingProb>,
    pub shape: Option<f64>,
}

/// `p!(p−1)!`.
pub fn factorial_weight(p: u32) -> f64 {
    factorial(p) * factorial(p - 1)
}

/// Limit constant; builds a renewal mass table of length `n_trunc` when the
/// regime is sub-critical.
pub fn limit_constant(
    beta: TailIndex,
    p: u32,
    law: &RenewalLaw,
    n_trunc: usize,
) -> Result<LimitConstant> {
    if beta.regime(p) == Regime::SubCritical {
        let tables = renewal_mass(law, n_trunc)?;
        limit_constant_with(beta, p, law, &tables, n_trunc)
    } else {
        limit_constant_with(beta, p, law, &RenewalTables::stationary(law, 0)?, 0)
    }
}

/// As [`limit_constant`] with a caller-supplied mass table.
///
/// * super-critical: `(C_F/(1−β))^p`;
/// * critical: `½ (C_F Γ(β)Γ(1−β))^p / (p!(p−1)!)`;
/// * sub-critical: `𝔮_{F,p} 𝔇_{β,p} / (2 p!(p−1)!)`.
pub fn limit_constant_with(
    beta: TailIndex,
    p: u32,
    law: &RenewalLaw,
    tables: &RenewalTables,
    n_trunc: usize,
) -> Result<LimitConstant> {
    let regime = beta.regime(p);
    let c_f = law.c_f();
    let b = beta.value();
    Ok(match regime {
        Regime::SuperCritical => LimitConstant {
            regime,
            value: (c_f / (1.0 - b)).powi(p as i32),
            bracket: None,
            terminating: None,
            shape: None,
        },
        Regime::Critical => LimitConstant {
            regime,
            value: 0.5 * (c_f * gamma_reflection_pair(b)).powi(p as i32) / factorial_weight(p),
            bracket: None,
            terminating: None,
            shape: None,
        },
        Regime::SubCritical => {
            let q = terminating_prob(tables, law, beta, p, n_trunc)?;
            let d = shape_constant(beta, p)?.value;
            let w = 2.0 * factorial_weight(p);
            LimitConstant {
                regime,
                value: q.estimate * d / w,
                bracket: Some((q.lower * d / w, q.upper * d / w)),
                terminating: Some(q),
                shape: Some(d),
            }
        }
    })
}

/// Assembles the [`RegimeReport`] for a parameter set. The mass table is
/// only built in the sub-critical regime.
pub fn regime_report(
    alpha: f64,
    beta: TailIndex,
    p: u32,
    law: &RenewalLaw,
    n_trunc: usize,
) -> Result<RegimeReport> {
    check_alpha(alpha)?;
    if p == 0 {
        return Err(Error::invalid("p", "must be at least 1"));
    }
    let constant = limit_constant(beta, p, law, n_trunc)?;
    let regime = constant.regime;
    let shape = if regime == Regime::SubCritical {
        Some(shape_constant(beta, p)?)
    } else {
        None
    };
    let extremal_index = match regime {
        Regime::SubCritical => Some(constant.terminating.unwrap().estimate * constant.shape.unwrap()),
        Regime::Critical => Some(0.0),
        Regime::SuperCritical => None,
    };
    Ok(RegimeReport {
        alpha,
        beta,
        p,
        regime,
        beta_q: (1..=p).map(|q| beta.beta_q(q)).collect(),
        beta_p: beta.beta_q(p),
        p_prime: beta.p_prime(),
        q_beta_p: shape.map(|s| s.q_beta_p),
        q_frak: constant.terminating.map(|t| t.estimate),
        q_frak_bracket: constant.terminating.map(|t| (t.lower, t.upper)),
        d_shape: shape.map(|s| s.value),
        c_frak: constant.value,
        extremal_index,
    })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("{alpha} is not in (0,2)")))
    }
}

/// `P(max ≤ x) = exp(−𝔠 · leb · x^{−α})`, and `0` for `x ≤ 0`.
pub fn frechet_max_cdf(x: f64, leb: f64, c_frak: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-c_frak * leb * x.powf(-alpha)).exp()
}

/// One aggregated cluster: `c = (c_1 < … < c_q)` and its `C(q,p)` member
/// `p`-subsets `J(c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregationIndex {
    pub c: Vec<u32>,
    pub members: Vec<Vec<u32>>,
}

/// `Σ_{q=p}^{p′} C(l_cap, q)`, `None` on overflow.
pub fn aggregation_count(l_cap: usize, p: u32, p_prime: u32) -> Option<u128> {
    (p..=p_prime).try_fold(0u128, |acc, q| acc.checked_add(binomial_u128(l_cap as u64, q as u64)?))
}

/// All `J(c)` with `c ⊆ {1,…,l_cap}`, `p ≤ |c| ≤ p′`, ordered by size then
/// lexicographically.
pub fn enumerate_aggregations(
    l_cap: usize,
    p: u32,
    p_prime: u32,
    guard: u128,
) -> Result<Vec<AggregationIndex>> {
    if p == 0 || p > p_prime {
        return Err(Error::invalid("p", format!("need 1 <= p <= p' (p={p}, p'={p_prime})")));
    }
    if (l_cap as u64) < p_prime as u64 {
        return Err(Error::invalid("l_cap", format!("{l_cap} < p' = {p_prime}")));
    }
    match aggregation_count(l_cap, p, p_prime) {
        Some(c) if c <= guard => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "aggregations over {l_cap} arrivals with sizes {p}..={p_prime} exceed {guard}"
            )))
        }
    }
    let mut out = Vec::new();
    for q in p..=p_prime {
        for c in k_subsets(&(1..=l_cap as u32).collect::<Vec<_>>(), q as usize) {
            let members = k_subsets(&c, p as usize);
            out.push(AggregationIndex { c, members });
        }
    }
    Ok(out)
}

/// Lexicographic `k`-subsets of `items`.
fn k_subsets(items: &[u32], k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[u32], k: usize, start: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        for i in start..=items.len().saturating_sub(need) {
            if i >= items.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

/// One draw of `Z_{α,β,p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitSample {
    pub z: f64,
    /// The maximizing aggregation `c` (its `J(c)` attains the sup).
    pub argmax: Vec<u32>,
    /// Sup over aggregations inside `{1,…,l_cap/2}` on the same draw.
    pub z_half: f64,
    /// `true` when `z` and `z_half` differ by more than `1e−6` relatively.
    pub truncation_sensitive: bool,
}

/// Draws `Γ_1..Γ_L`, `ε_1..ε_L` and maximizes the aggregated sums over all
/// `c ⊆ {1,…,L}` with `p ≤ |c| ≤ p′`. The sum over `J(c)` equals the
/// elementary symmetric polynomial `e_p` of `(ε_i Γ_i^{−1/α})_{i∈c}`, which
/// the depth-first search updates incrementally.
pub fn sample_z<R: Rng + ?Sized>(
    alpha: f64,
    beta: TailIndex,
    p: u32,
    l_cap: usize,
    rng: &mut R,
) -> Result<LimitSample> {
    check_alpha(alpha)?;
    let regime = beta.regime(p);
    if regime != Regime::SuperCritical {
        return Err(Error::RegimeMismatch {
            expected: "super-critical",
            actual: regime.to_string(),
        });
    }
    let p_prime = beta.p_prime();
    if l_cap < p_prime as usize {
        return Err(Error::invalid("l_cap", format!("{l_cap} < p' = {p_prime}")));
    }
    match aggregation_count(l_cap, p, p_prime) {
        Some(c) if c <= AGGREGATION_GUARD => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "sup over aggregations of sizes {p}..={p_prime} from {l_cap} arrivals exceeds {AGGREGATION_GUARD}"
            )))
        }
    }
    let weights = draw_weights(alpha, l_cap, rng);
    Ok(maximize_aggregations(&weights, p as usize, p_prime as usize))
}

/// `ε_i Γ_i^{−1/α}` for `i = 1..=l`.
pub(crate) fn draw_weights<R: Rng + ?Sized>(alpha: f64, l: usize, rng: &mut R) -> Vec<f64> {
    let mut gamma = 0.0;
    (0..l)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            gamma += e;
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * gamma.powf(-1.0 / alpha)
        })
        .collect()
}

/// Sup of `e_p(a_c)` over `c ⊆ {1..=a.len()}`, `p ≤ |c| ≤ p_max`.
pub fn maximize_aggregations(a: &[f64], p: usize, p_max: usize) -> LimitSample {
    struct Search<'a> {
        a: &'a [f64],
        p: usize,
        p_max: usize,
        half: usize,
        best: f64,
        best_c: Vec<u32>,
        best_half: f64,
        stack: Vec<u32>,
    }
    impl Search<'_> {
        // e[j] holds e_j of the current subset, j = 0..=p.
        fn visit(&mut self, start: usize, e: &[f64]) {
            let mut next = vec![0.0; e.len()];
            for i in start..self.a.len() {
                let x = self.a[i];
                next[0] = 1.0;
                for j in 1..e.len() {
                    next[j] = e[j] + x * e[j - 1];
                }
                self.stack.push(i as u32 + 1);
                let size = self.stack.len();
                if size >= self.p {
                    let v = next[self.p];
                    if v > self.best {
                        self.best = v;
                        self.best_c = self.stack.clone();
                    }
                    if i < self.half && v > self.best_half {
                        self.best_half = v;
                    }
                }
                if size < self.p_max {
                    self.visit(i + 1, &next.clone());
                }
                self.stack.pop();
            }
        }
    }
    let mut e0 = vec![0.0; p + 1];
    e0[0] = 1.0;
    let mut s = Search {
        a,
        p,
        p_max,
        half: a.len() / 2,
        best: f64::NEG_INFINITY,
        best_c: Vec::new(),
        best_half: f64::NEG_INFINITY,
        stack: Vec::with_capacity(p_max),
    };
    s.visit(0, &e0);
    let sensitive = s.best - s.best_half > 1e-6 * s.best.abs().max(f64::MIN_POSITIVE);
    LimitSample {
        z: s.best,
        argmax: s.best_c,
        z_half: s.best_half,
        truncation_sensitive: sensitive,
    }
}

/// Limit law of `max_k X_{n,k} / c_n`.
#[derive(Clone, Debug)]
pub enum LimitMaxLaw {
    /// `exp(−𝔠 x^{−α})` (critical and sub-critical).
    Frechet { c_frak: f64, alpha: f64 },
    /// Empirical law of `𝔠^{1/α} Z_{α,β,p}` (super-critical), sorted.
    Empirical { samples: Vec<f64> },
}

impl LimitMaxLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            LimitMaxLaw::Frechet { c_frak, alpha } => frechet_max_cdf(x, 1.0, *c_frak, *alpha),
            LimitMaxLaw::Empirical { samples } => {
                samples.partition_point(|&s| s <= x) as f64 / samples.len() as f64
            }
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match self {
            LimitMaxLaw::Frechet { c_frak, alpha } => (c_frak / -q.ln()).powf(1.0 / alpha),
            LimitMaxLaw::Empirical { samples } => quantile_sorted(samples, q),
        }
    }
}

/// The limit law for the given parameters; the super-critical branch uses
/// `mc_samples` draws of `𝔠^{1/α} Z`.
pub fn limit_max_law<R: Rng + ?Sized>(
    alpha: f64,
    beta: TailIndex,
    p: u32,
    law: &RenewalLaw,
    mc_samples: usize,
    l_cap: usize,
    rng: &mut R,
) -> Result<LimitMaxLaw> {
    check_alpha(alpha)?;
    let constant = limit_constant(beta, p, law, DEFAULT_Q_TRUNCATION)?;
    match constant.regime {
        Regime::SuperCritical => {
            if mc_samples == 0 {
                return Err(Error::invalid("mc_samples", "need at least one draw"));
            }
            let scale = constant.value.powf(1.0 / alpha);
            let mut samples = (0..mc_samples)
                .map(|_| sample_z(alpha, beta, p, l_cap, rng).map(|s| scale * s.z))
                .collect::<Result<Vec<_>>>()?;
            samples.sort_by(f64::total_cmp);
            Ok(LimitMaxLaw::Empirical { samples })
        }
        _ => Ok(LimitMaxLaw::Frechet {
            c_frak: constant.value,
            alpha,
        }),
    }
}

/// `P(max_k X_{n,k}/c_n ≤ x)` in the limit.
pub fn limit_max_cdf<R: Rng + ?Sized>(
    x: f64,
    alpha: f64,
    beta: TailIndex,
    p: u32,
    law: &RenewalLaw,
    mc_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    Ok(limit_max_law(alpha, beta, p, law, mc_samples, DEFAULT_L_CAP, rng)?.cdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn b(v: f64) -> TailIndex {
        TailIndex::new(v).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let c = normalization(1.0, b(0.8), 2, 1_000_000).unwrap();
        assert!((c - 1e6f64.powf(0.4)).abs() < 1e-9);
        assert!((c - 251.188_643_150_958).abs() < 1e-9);
        // p = 1 is always super-critical with β_1 = β.
        let c = normalization(1.5, b(0.3), 1, 1000).unwrap();
        assert!((c - 1000f64.powf(0.7 / 1.5)).abs() < 1e-9);
        let crit = TailIndex::ratio(1, 2).unwrap();
        let n = 1_000_000u64;
        let nf = n as f64;
        let c = normalization(1.0, crit, 2, n).unwrap();
        assert!((c - nf * nf.ln().ln() / nf.ln()).abs() < 1e-6);
        assert!(normalization(1.0, crit, 2, 15).is_err());
        let c = normalization(1.0, b(0.4), 2, n).unwrap();
        assert!((c - nf * nf.ln()).abs() < 1e-3);
    }

    #[test]
    fn limit_constant_examples() {
        let law = RenewalLaw::default_law(0.75).unwrap();
        let c = limit_constant(b(0.75), 2, &law, 0).unwrap();
        assert!((c.value - 16.0).abs() < 1e-12);
        let law = RenewalLaw::default_law(0.5).unwrap();
        let c = limit_constant(TailIndex::ratio(1, 2).unwrap(), 2, &law, 0).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((c.value - pi2 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn subcritical_constant_is_q_over_twenty() {
        let law = RenewalLaw::default_law(0.4).unwrap();
        let c = limit_constant(b(0.4), 2, &law, 5000).unwrap();
        let q = c.terminating.unwrap().estimate;
        assert!((c.value - q / 20.0).abs() < 1e-15);
        let (lo, hi) = c.bracket.unwrap();
        assert!(lo < c.value && c.value <= hi);
    }

    #[test]
    fn frechet_cdf_properties() {
        assert!((frechet_max_cdf(1.0, 1.0, 1.0, 1.0) - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(frechet_max_cdf(0.0, 1.0, 1.0, 1.0), 0.0);
        assert_eq!(frechet_max_cdf(-3.0, 1.0, 1.0, 1.0), 0.0);
        assert!(frechet_max_cdf(1e12, 1.0, 1.0, 1.0) > 1.0 - 1e-11);
        let mut prev = 0.0;
        for k in 1..100 {
            let v = frechet_max_cdf(k as f64 * 0.1, 0.5, 2.0, 1.3);
            assert!(v >= prev);
            prev = v;
        }
        assert!(frechet_max_cdf(2.0, 0.2, 1.0, 1.0) > frechet_max_cdf(2.0, 0.8, 1.0, 1.0));
        let c = 0.37;
        let x: f64 = 2.5;
        let back = -frechet_max_cdf(x, 1.0, c, 1.7).ln() * x.powf(1.7);
        assert!((back - c).abs() < 1e-14);
    }

    #[test]
    fn aggregation_example_from_definition() {
        let aggs = enumerate_aggregations(6, 3, 4, AGGREGATION_GUARD).unwrap();
        let target = aggs.iter().find(|a| a.c == vec![1, 3, 5, 6]).unwrap();
        assert_eq!(
            target.members,
            vec![vec![1, 3, 5], vec![1, 3, 6], vec![1, 5, 6], vec![3, 5, 6]]
        );
        let singles = enumerate_aggregations(3, 1, 1, AGGREGATION_GUARD).unwrap();
        let cs: Vec<_> = singles.iter().map(|a| a.c.clone()).collect();
        assert_eq!(cs, vec![vec![1], vec![2], vec![3]]);
        let aggs = enumerate_aggregations(7, 2, 3, AGGREGATION_GUARD).unwrap();
        assert_eq!(aggs.iter().filter(|a| a.c.len() == 3).count(), 35);
        assert!(aggs.iter().filter(|a| a.c.len() == 3).all(|a| a.members.len() == 3));
        assert!(enumerate_aggregations(64, 2, 9, AGGREGATION_GUARD).is_err());
    }

    #[test]
    fn dfs_maximization_matches_explicit_aggregations() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..20 {
            let a = draw_weights(1.2, 9, &mut rng);
            let fast = maximize_aggregations(&a, 2, 4);
            let aggs = enumerate_aggregations(9, 2, 4, AGGREGATION_GUARD).unwrap();
            let (best, arg) = aggs
                .iter()
                .map(|agg| {
                    let v: f64 = agg
                        .members
                        .iter()
                        .map(|m| m.iter().map(|&i| a[i as usize - 1]).product::<f64>())
                        .sum();
                    (v, agg.c.clone())
                })
                .fold((f64::NEG_INFINITY, vec![]), |acc, x| if x.0 > acc.0 { x } else { acc });
            assert!((fast.z - best).abs() <= 1e-12 * best.abs());
            assert_eq!(fast.argmax, arg);
        }
    }

    #[test]
    fn z_dominates_best_single_tuple() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let beta = b(0.8);
        for _ in 0..50 {
            let a = draw_weights(1.0, 16, &mut rng);
            let s = maximize_aggregations(&a, 2, beta.p_prime() as usize);
            let mut best_pair = f64::NEG_INFINITY;
            for i in 0..16 {
                for j in i + 1..16 {
                    best_pair = best_pair.max(a[i] * a[j]);
                }
            }
            assert!(s.z >= best_pair);
            assert!(s.z >= s.z_half);
        }
    }

    #[test]
    fn sample_z_rejects_non_supercritical() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(sample_z(1.0, b(0.4), 2, 64, &mut rng).is_err());
        assert!(sample_z(1.0, b(0.8), 2, 3, &mut rng).is_err());
        assert!(sample_z(2.0, b(0.8), 2, 64, &mut rng).is_err());
    }

    #[test]
    fn p_prime_equals_p_gives_best_product() {
        // β = 0.6, p = 2: p' = 2, so Z is the best pair product.
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let s = sample_z(1.0, b(0.6), 2, 32, &mut rng).unwrap();
        assert_eq!(s.argmax.len(), 2);
    }

    #[test]
    fn frechet_law_quantile_inverts_cdf() {
        let law = LimitMaxLaw::Frechet {
            c_frak: 0.8,
            alpha: 1.3,
        };
        for &q in &[0.1, 0.5, 0.9] {
            assert!((law.cdf(law.quantile(q)) - q).abs() < 1e-12);
        }
    }
}
