//! Statistics on simulated paths: empirical sup-measures, block maxima,
//! extremal-index estimates, KS distances, scaling sweeps, block-hit
//! probabilities and the conditional tail-process check.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiments::seed_stream;
use crate::intersection::{intersect_paths, sample_tail_process, Regime, TailIndex};
use crate::limit::{limit_constant, normalization, LimitMaxLaw, DEFAULT_Q_TRUNCATION};
use crate::model::{
    default_truncation, evaluate_path, sample_environment, ModelParams, PathRealization,
};
use crate::renewal::{renewal_mass, sample_conditioned_into, RenewalLaw, RenewalTables};
use crate::special::{gamma_reflection_pair, median, quantile_sorted};
use crate::{Error, Result};

/// `M_n(I) = max{X_{n,k} : a < k/n ≤ b}` for each `(a, b)`; an empty index
/// set gives `−∞`. Half-open intervals make the union of adjacent intervals
/// exact.
pub fn empirical_supmeasure(values: &[f64], intervals: &[(f64, f64)]) -> Vec<f64> {
    let n = values.len() as f64;
    intervals
        .iter()
        .map(|&(a, b)| {
            values
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    let t = (*k + 1) as f64 / n;
                    a < t && t <= b
                })
                .map(|(_, &x)| x)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Blocks `I_{n,j} = {(j−1)d+1, …, jd}`, `j = 1..=k`, `k = ⌊n/d⌋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockScheme {
    pub n: u64,
    pub d: u64,
    pub k: u64,
}

impl BlockScheme {
    pub fn new(n: u64, d: u64) -> Result<Self> {
        if d == 0 || d > n {
            return Err(Error::invalid("d", format!("block length {d} not in 1..={n}")));
        }
        Ok(BlockScheme { n, d, k: n / d })
    }

    /// `⌈n/log^p n⌉` in the critical regime, `⌊√n⌋` otherwise.
    pub fn default_for(regime: Regime, n: u64, p: u32) -> Result<Self> {
        let nf = n as f64;
        let d = match regime {
            Regime::Critical => (nf / nf.ln().powi(p as i32)).ceil() as u64,
            _ => nf.sqrt().floor() as u64,
        };
        Self::new(n, d.clamp(1, n.max(1)))
    }

    /// 1-based index range of block `j`.
    pub fn block(&self, j: u64) -> std::ops::RangeInclusive<u64> {
        (j - 1) * self.d + 1..=j * self.d
    }

    /// Number of indices covered, `k·d`.
    pub fn covered(&self) -> u64 {
        self.k * self.d
    }
}

/// `m̂_j = max_{k ∈ I_{n,j}} X_{n,k}`.
pub fn block_maxima(values: &[f64], scheme: &BlockScheme) -> Vec<f64> {
    values[..scheme.covered() as usize]
        .chunks(scheme.d as usize)
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Runs-free blocks estimate of the extremal index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalEstimate {
    pub exceedances: u64,
    pub blocks_hit: u64,
    pub theta: f64,
}

/// `θ̂ = #{j : m̂_j > u} / #{k ≤ k_n d_n : X_{n,k} > u}`; `None` without
/// exceedances.
pub fn extremal_index_blocks(
    values: &[f64],
    scheme: &BlockScheme,
    u: f64,
) -> Option<ExtremalEstimate> {
    let (exc, hit) = exceedance_counts(values, scheme, u);
    (exc > 0).then(|| ExtremalEstimate {
        exceedances: exc,
        blocks_hit: hit,
        theta: hit as f64 / exc as f64,
    })
}

fn exceedance_counts(values: &[f64], scheme: &BlockScheme, u: f64) -> (u64, u64) {
    let mut exc = 0;
    let mut hit = 0;
    for block in values[..scheme.covered() as usize].chunks(scheme.d as usize) {
        let c = block.iter().filter(|&&x| x > u).count() as u64;
        exc += c;
        hit += (c > 0) as u64;
    }
    (exc, hit)
}

/// Pools counts over several paths; each path uses its own `q`-quantile of
/// `|X|` as threshold.
pub fn extremal_index_pooled(
    paths: &[Vec<f64>],
    scheme: &BlockScheme,
    q: f64,
) -> Option<ExtremalEstimate> {
    let (exc, hit) = paths
        .iter()
        .map(|v| exceedance_counts(v, scheme, abs_quantile(v, q)))
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    (exc > 0).then(|| ExtremalEstimate {
        exceedances: exc,
        blocks_hit: hit,
        theta: hit as f64 / exc as f64,
    })
}

/// `q`-quantile of `|X|`.
pub fn abs_quantile(values: &[f64], q: f64) -> f64 {
    let mut a: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    a.sort_by(f64::total_cmp);
    quantile_sorted(&a, q)
}

/// `sup_x |F̂_N(x) − F(x)|`, evaluated on both sides of every jump (ties
/// handled as one jump).
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "ks_distance needs samples");
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        let f = cdf(s[i]);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d.min(1.0)
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Sample standard deviation over mean.
pub fn coefficient_of_variation(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt() / m.abs()
}

/// Inputs of a scaling sweep. `truncation = None` uses
/// [`default_truncation`] per `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alpha: f64,
    pub beta: TailIndex,
    pub p: u32,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub seed: u64,
    pub truncation: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub replicates: usize,
    pub median_max: f64,
    pub c_n: f64,
    pub normalized: f64,
    pub regime: Regime,
    /// KS distance of `M_n/c_n` to the limit law, when one was supplied.
    pub ks: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Slope of `log median(M_n)` against `log n`.
    pub slope: f64,
    /// Coefficient of variation of the normalized medians.
    pub normalized_cov: f64,
}

/// Stream index of replicate `r` at grid point `g`.
pub fn sweep_stream_index(g: usize, r: usize) -> u64 {
    ((g as u64) << 32) | r as u64
}

/// Maxima `M_n([0,1])` of `replicates` independent paths at one `n`.
pub fn sample_maxima(
    params: &ModelParams,
    law: &RenewalLaw,
    tables: &RenewalTables,
    replicates: usize,
    stream: impl Fn(usize) -> u64 + Sync,
) -> Result<Vec<f64>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed_stream(params.seed, stream(r));
            let env = sample_environment(params, law, tables, &mut rng)?;
            Ok(evaluate_path(&env, params, tables)?.max())
        })
        .collect()
}

/// Medians of the maximum over a dyadic grid, with the log-log slope, the
/// normalized medians and optionally KS distances to `limit`.
///
/// Replicate `r` uses stream `r` at every `n`, so `Γ` and `ε` are common
/// across the grid and the slope is not swamped by independent noise in
/// each median.
pub fn scaling_sweep(cfg: &SweepConfig, limit: Option<&LimitMaxLaw>) -> Result<SweepResult> {
    if cfg.n_grid.len() < 4 {
        return Err(Error::invalid("n_grid", "need at least 4 points"));
    }
    if cfg.n_grid.iter().any(|n| !n.is_power_of_two()) {
        return Err(Error::invalid("n_grid", "points must be powers of two"));
    }
    if cfg.replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let law = RenewalLaw::default_law(cfg.beta.value())?;
    let n_max = *cfg.n_grid.iter().max().unwrap();
    let tables = RenewalTables::stationary(&law, n_max as usize)?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let l = cfg.truncation.unwrap_or_else(|| default_truncation(&tables, n));
        let params = ModelParams::new(cfg.alpha, cfg.beta, cfg.p, n, l, cfg.seed)?;
        let maxima = sample_maxima(&params, &law, &tables, cfg.replicates, |r| r as u64)?;
        let c_n = normalization(cfg.alpha, cfg.beta, cfg.p, n)?;
        let med = median(&maxima);
        let ks = limit.map(|lim| {
            let scaled: Vec<f64> = maxima.iter().map(|m| m / c_n).collect();
            ks_distance(&scaled, |x| lim.cdf(x))
        });
        rows.push(SweepRow {
            n,
            replicates: cfg.replicates,
            median_max: med,
            c_n,
            normalized: med / c_n,
            regime: params.regime(),
            ks,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.median_max.ln()).collect();
    let normalized: Vec<f64> = rows.iter().map(|r| r.normalized).collect();
    Ok(SweepResult {
        slope: ols_slope(&lx, &ly),
        normalized_cov: coefficient_of_variation(&normalized),
        rows,
    })
}

/// How [`rho_block_mc`] draws its trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoMode {
    /// Draws `p` paths `R_n` and checks their intersection in the block.
    Naive,
    /// Draws the paths conditioned on hitting the block (each is then an
    /// `R_d`) and reweights by `(W_d/W_n)^p`.
    Conditioned,
}

/// Monte Carlo `ρ̂_n` with its standard error and the regime asymptotic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub rho_hat: f64,
    pub se: f64,
    pub asymptotic: f64,
    pub trials: usize,
    pub successes: usize,
}

impl RhoEstimate {
    pub fn ratio(&self) -> f64 {
        self.rho_hat / self.asymptotic
    }
}

/// `½ 𝔮 d/w_n^p` (sub-critical) or `½ (d/w_n^p)(C_F Γ(β)Γ(1−β))^p/log d`
/// (critical).
pub fn rho_asymptotic(
    beta: TailIndex,
    p: u32,
    law: &RenewalLaw,
    w_n: f64,
    d: u64,
    q_frak: Option<f64>,
) -> Result<f64> {
    let base = d as f64 / w_n.powi(p as i32);
    match beta.regime(p) {
        Regime::SubCritical => {
            let q = match q_frak {
                Some(q) => q,
                None => limit_constant(beta, p, law, DEFAULT_Q_TRUNCATION)?
                    .terminating
                    .unwrap()
                    .estimate,
            };
            Ok(0.5 * q * base)
        }
        Regime::Critical => Ok(0.5
            * base
            * (law.c_f() * gamma_reflection_pair(beta.value())).powi(p as i32)
            / (d as f64).ln()),
        Regime::SuperCritical => Err(Error::RegimeMismatch {
            expected: "critical or sub-critical",
            actual: "SuperCritical".into(),
        }),
    }
}

/// `ρ_n = ½ P(R_{n,1} ∩ … ∩ R_{n,p} ∩ I_{n,1} ≠ ∅)` by Monte Carlo.
#[allow(clippy::too_many_arguments)]
pub fn rho_block_mc(
    beta: TailIndex,
    p: u32,
    law: &RenewalLaw,
    tables: &RenewalTables,
    scheme: &BlockScheme,
    reps: usize,
    seed: u64,
    mode: RhoMode,
    q_frak: Option<f64>,
) -> Result<RhoEstimate> {
    if beta.regime(p) == Regime::SuperCritical {
        return Err(Error::RegimeMismatch {
            expected: "critical or sub-critical",
            actual: "SuperCritical".into(),
        });
    }
    if reps == 0 {
        return Err(Error::invalid("reps", "must be at least 1"));
    }
    let n = scheme.n as usize;
    let d = scheme.d as usize;
    if tables.horizon() < n {
        return Err(Error::invalid("tables", "do not cover n"));
    }
    let (horizon, weight) = match mode {
        RhoMode::Naive => (n, 1.0),
        RhoMode::Conditioned => (
            d,
            (tables.first_hit_mass(d) / tables.first_hit_mass(n)).powi(p as i32),
        ),
    };
    let successes = (0..reps)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = seed_stream(seed, r as u64);
            let mut paths = vec![Vec::new(); p as usize];
            for path in paths.iter_mut() {
                sample_conditioned_into(law, tables, horizon, &mut rng, path);
            }
            intersect_paths(&paths).first().is_some_and(|&k| k as usize <= d)
        })
        .count();
    let phat = successes as f64 / reps as f64;
    let se = 0.5 * weight * (phat * (1.0 - phat) / reps as f64).sqrt();
    Ok(RhoEstimate {
        rho_hat: 0.5 * weight * phat,
        se,
        asymptotic: rho_asymptotic(beta, p, law, tables.w(n), scheme.d, q_frak)?,
        trials: reps,
        successes,
    })
}

/// Exact `ρ_n = ½ W_n^{−p} Σ_{m<d} F̄_p(m)`, with `F̄_p` the tail of the
/// `p`-fold intersection renewal (last-exit decomposition). Costs `O(d²)`.
pub fn rho_block_exact(law: &RenewalLaw, p: u32, w_big_n: f64, d: usize) -> Result<f64> {
    let mass = renewal_mass(law, d)?;
    let u: Vec<f64> = mass.mass_slice().iter().map(|x| x.powi(p as i32)).collect();
    // g = interarrival pmf of the intersection renewal, from U = u^p.
    let mut g = vec![0.0; d + 1];
    for k in 1..=d {
        let conv: f64 = (1..k).map(|j| g[j] * u[k - j]).sum();
        g[k] = u[k] - conv;
    }
    let mut tail = 1.0;
    let mut acc = 0.0;
    for m in 0..d {
        if m > 0 {
            tail -= g[m];
        }
        acc += tail;
    }
    Ok(0.5 * acc / w_big_n.powi(p as i32))
}

/// Result of [`conditional_tail_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheckReport {
    pub m: usize,
    pub exceedances: usize,
    pub theory_draws: usize,
    pub tv: f64,
    /// Pattern key `(sign, Θ_1..Θ_m as bits)` to (empirical, theoretical)
    /// probability.
    pub patterns: Vec<TailPattern>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPattern {
    pub sign: i8,
    pub support: String,
    pub empirical: f64,
    pub theoretical: f64,
}

/// Lag `j` counts as in the support when `|X_{k+j}| > SUPPORT_RATIO·|X_k|`.
pub const SUPPORT_RATIO: f64 = 0.5;

/// Number of `(ε, Θ*)` draws for the theoretical side.
pub const TAIL_THEORY_DRAWS: usize = 200_000;

/// Minimum number of harvested exceedances.
pub const MIN_EXCEEDANCES: usize = 2000;

fn pattern_key(sign: i8, support: &[bool]) -> (i8, String) {
    (sign, support.iter().map(|&b| if b { '1' } else { '0' }).collect())
}

/// Harvests `(sign X_k, support of X_{k+1..k+m})` at the times where `|X_k|`
/// exceeds its per-path `x_quantile`, and compares with the law of
/// `(ε, Θ*_1..Θ*_m)`. Replicate `r` uses `seed_stream(params.seed, r)`; the
/// theoretical draws use stream `u64::MAX`.
pub fn conditional_tail_check(
    params: &ModelParams,
    law: &RenewalLaw,
    tables: &RenewalTables,
    x_quantile: f64,
    m: usize,
    replicates: usize,
) -> Result<TailCheckReport> {
    let n = params.n as usize;
    if m == 0 || m >= n {
        return Err(Error::invalid("m", format!("need 1 <= m < n, got {m}")));
    }
    let harvested: Vec<Vec<(i8, String)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed_stream(params.seed, r as u64);
            let env = sample_environment(params, law, tables, &mut rng)?;
            let path = evaluate_path(&env, params, tables)?;
            Ok(harvest(&path, x_quantile, m))
        })
        .collect::<Result<_>>()?;
    let mut empirical: BTreeMap<(i8, String), f64> = BTreeMap::new();
    let mut total = 0usize;
    for key in harvested.into_iter().flatten() {
        *empirical.entry(key).or_default() += 1.0;
        total += 1;
    }
    if total < MIN_EXCEEDANCES {
        return Err(Error::InsufficientData(format!(
            "{total} exceedances collected, need {MIN_EXCEEDANCES}"
        )));
    }
    let mut theory: BTreeMap<(i8, String), f64> = BTreeMap::new();
    let mut rng = seed_stream(params.seed, u64::MAX);
    for _ in 0..TAIL_THEORY_DRAWS {
        let s = sample_tail_process(law, params.p, m, &mut rng);
        *theory.entry(pattern_key(s.sign, &s.theta[1..])).or_default() += 1.0;
    }
    let mut keys: Vec<_> = empirical.keys().chain(theory.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    let mut tv = 0.0;
    let patterns = keys
        .into_iter()
        .map(|key| {
            let e = empirical.get(&key).copied().unwrap_or(0.0) / total as f64;
            let t = theory.get(&key).copied().unwrap_or(0.0) / TAIL_THEORY_DRAWS as f64;
            tv += (e - t).abs();
            TailPattern {
                sign: key.0,
                support: key.1,
                empirical: e,
                theoretical: t,
            }
        })
        .collect();
    Ok(TailCheckReport {
        m,
        exceedances: total,
        theory_draws: TAIL_THEORY_DRAWS,
        tv: 0.5 * tv,
        patterns,
    })
}

fn harvest(path: &PathRealization, x_quantile: f64, m: usize) -> Vec<(i8, String)> {
    let v = &path.values;
    let u = abs_quantile(v, x_quantile);
    let mut out = Vec::new();
    for k in 0..v.len() - m {
        let x = v[k];
        if x.abs() > u {
            let support: Vec<bool> = (1..=m)
                .map(|j| v[k + j].abs() > SUPPORT_RATIO * x.abs())
                .collect();
            out.push(pattern_key(if x > 0.0 { 1 } else { -1 }, &support));
        }
    }
    out
}
