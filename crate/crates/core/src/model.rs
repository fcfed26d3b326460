//! Finite-`n` series representation of the multiple-stable process:
//!
//! ```text
//! X_{n,k} = w_n^{p/α} Σ_{i_1<…<i_p ≤ L} Π_r ε_{i_r} Γ_{i_r}^{−1/α} 1{k ∈ R_{n,i_1} ∩ … ∩ R_{n,i_p}}
//! ```
//!
//! The inner sum over `p`-subsets of `S_k = {i : k ∈ R_{n,i}}` is the
//! elementary symmetric polynomial `e_p` of the weights indexed by `S_k`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{for_each_subset_in, h_domain};
use crate::experiments::seed_stream;
use crate::intersection::{Regime, TailIndex};
use crate::limit::{check_alpha, normalization};
use crate::renewal::{sample_conditioned_into, RenewalLaw, RenewalTables};
use crate::special::quantile_sorted;
use crate::{Error, Result};

/// Parameters of one model realization. `truncation` is the number `L` of
/// `(Γ_i, ε_i, R_{n,i})` triples kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: TailIndex,
    pub p: u32,
    pub n: u64,
    pub truncation: usize,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(
        alpha: f64,
        beta: TailIndex,
        p: u32,
        n: u64,
        truncation: usize,
        seed: u64,
    ) -> Result<Self> {
        let params = ModelParams {
            alpha,
            beta,
            p,
            n,
            truncation,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.p == 0 {
            return Err(Error::invalid("p", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.truncation < self.p as usize {
            return Err(Error::invalid(
                "L",
                format!("truncation {} is below p = {}", self.truncation, self.p),
            ));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        self.beta.regime(self.p)
    }

    /// The default law `F̄(n) = (n+1)^{−β}`.
    pub fn law(&self) -> Result<RenewalLaw> {
        RenewalLaw::default_law(self.beta.value())
    }

    /// Same parameters with another truncation level.
    pub fn with_truncation(&self, truncation: usize) -> Self {
        ModelParams {
            truncation,
            ..self.clone()
        }
    }
}

/// `max(64, ⌈4 W_n⌉)`: every `k` is then covered by about four paths on
/// average, so `|S_k| ≥ p` is typical for small `p`.
pub fn default_truncation(tables: &RenewalTables, n: u64) -> usize {
    (4.0 * tables.first_hit_mass(n as usize)).ceil().max(64.0) as usize
}

/// `Γ_i`, `ε_i` and `R_{n,i}` for `i = 1..=L`, plus the precomputed weights
/// `ε_i Γ_i^{−1/α}`.
#[derive(Clone, Debug)]
pub struct SeriesEnvironment {
    pub n: u64,
    pub gammas: Vec<f64>,
    pub signs: Vec<i8>,
    pub weights: Vec<f64>,
    pub paths: Vec<Vec<u64>>,
}

/// JSON-friendly summary of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSummary {
    pub l: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub hits_per_path: Vec<usize>,
}

impl SeriesEnvironment {
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// The first `l` triples. Because triples are drawn index by index, this
    /// equals a fresh environment of size `l` on the same stream.
    pub fn prefix(&self, l: usize) -> SeriesEnvironment {
        let l = l.min(self.len());
        SeriesEnvironment {
            n: self.n,
            gammas: self.gammas[..l].to_vec(),
            signs: self.signs[..l].to_vec(),
            weights: self.weights[..l].to_vec(),
            paths: self.paths[..l].to_vec(),
        }
    }

    pub fn summary(&self) -> EnvironmentSummary {
        EnvironmentSummary {
            l: self.len(),
            gamma_min: self.gammas.first().copied().unwrap_or(f64::NAN),
            gamma_max: self.gammas.last().copied().unwrap_or(f64::NAN),
            hits_per_path: self.paths.iter().map(Vec::len).collect(),
        }
    }
}

/// Draws an environment. For each `i` in turn: an exponential gap, a sign
/// and a seed for the conditioned renewal path. Paths run on their own
/// generators, so `Γ` and `ε` depend only on the stream, not on `n`.
pub fn sample_environment<R: Rng + ?Sized>(
    params: &ModelParams,
    law: &RenewalLaw,
    tables: &RenewalTables,
    rng: &mut R,
) -> Result<SeriesEnvironment> {
    params.validate()?;
    let n = params.n as usize;
    if tables.horizon() < n {
        return Err(Error::invalid(
            "tables",
            format!("horizon {} does not cover n = {n}", tables.horizon()),
        ));
    }
    let l = params.truncation;
    let mut env = SeriesEnvironment {
        n: params.n,
        gammas: Vec::with_capacity(l),
        signs: Vec::with_capacity(l),
        weights: Vec::with_capacity(l),
        paths: Vec::with_capacity(l),
    };
    let mut gamma = 0.0;
    let inv_alpha = -1.0 / params.alpha;
    for _ in 0..l {
        let e: f64 = Exp1.sample(rng);
        gamma += e;
        let sign: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let mut path_rng = ChaCha20Rng::seed_from_u64(rng.next_u64());
        let mut hits = Vec::new();
        sample_conditioned_into(law, tables, n, &mut path_rng, &mut hits);
        env.gammas.push(gamma);
        env.signs.push(sign);
        env.weights.push(sign as f64 * gamma.powf(inv_alpha));
        env.paths.push(hits);
    }
    Ok(env)
}

/// `e_p(values)` by the usual `O(|values|·p)` recursion.
pub fn elementary_symmetric(values: &[f64], p: usize) -> f64 {
    let mut e = vec![0.0; p + 1];
    e[0] = 1.0;
    for (m, &x) in values.iter().enumerate() {
        for j in (1..=p.min(m + 1)).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[p]
}

/// `X_{n,1..n}` with the sparse coverage sets `S_k` (1-based indices into
/// the environment, ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct PathRealization {
    pub n: u64,
    pub values: Vec<f64>,
    offsets: Vec<usize>,
    indices: Vec<u32>,
}

impl PathRealization {
    /// `S_k` for `k = 1..=n`.
    pub fn coverage(&self, k: u64) -> &[u32] {
        let k = k as usize - 1;
        &self.indices[self.offsets[k]..self.offsets[k + 1]]
    }

    /// `X_{n,k}` for `k = 1..=n`.
    pub fn value(&self, k: u64) -> f64 {
        self.values[k as usize - 1]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes `k,x` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,x")?;
        for (k, x) in self.values.iter().enumerate() {
            writeln!(out, "{},{:.16e}", k + 1, x)?;
        }
        Ok(())
    }
}

fn bucket_coverage(env: &SeriesEnvironment) -> (Vec<usize>, Vec<u32>) {
    let n = env.n as usize;
    let mut offsets = vec![0usize; n + 1];
    for path in &env.paths {
        for &h in path {
            offsets[h as usize] += 1;
        }
    }
    for k in 1..=n {
        offsets[k] += offsets[k - 1];
    }
    let mut fill = offsets.clone();
    let mut indices = vec![0u32; offsets[n]];
    for (i, path) in env.paths.iter().enumerate() {
        for &h in path {
            let slot = &mut fill[h as usize - 1];
            indices[*slot] = i as u32 + 1;
            *slot += 1;
        }
    }
    (offsets, indices)
}

fn check_env(env: &SeriesEnvironment, params: &ModelParams, tables: &RenewalTables) -> Result<()> {
    if env.n != params.n {
        return Err(Error::invalid("env", "sampled for a different n"));
    }
    if tables.horizon() < params.n as usize {
        return Err(Error::invalid("tables", "do not cover n"));
    }
    Ok(())
}

/// Full evaluation over all `p`-subsets of indices `≤ L`.
pub fn evaluate_path(
    env: &SeriesEnvironment,
    params: &ModelParams,
    tables: &RenewalTables,
) -> Result<PathRealization> {
    check_env(env, params, tables)?;
    let p = params.p as usize;
    let scale = tables.w(params.n as usize).powf(p as f64 / params.alpha);
    let (offsets, indices) = bucket_coverage(env);
    let mut buf = Vec::new();
    let values = (0..params.n as usize)
        .map(|k| {
            let s = &indices[offsets[k]..offsets[k + 1]];
            if s.len() < p {
                return 0.0;
            }
            buf.clear();
            buf.extend(s.iter().map(|&i| env.weights[i as usize - 1]));
            scale * elementary_symmetric(&buf, p)
        })
        .collect();
    Ok(PathRealization {
        n: params.n,
        values,
        offsets,
        indices,
    })
}

/// `X^{(K)}_{n,k}`: the tuple sum restricted to `ℋ(n,K)`.
pub fn evaluate_truncated_path(
    env: &SeriesEnvironment,
    params: &ModelParams,
    tables: &RenewalTables,
    k_cap: f64,
) -> Result<PathRealization> {
    check_env(env, params, tables)?;
    let domain = h_domain(params.alpha, params.beta, params.p, params.n, k_cap, tables)?;
    let p = params.p as usize;
    let scale = tables.w(params.n as usize).powf(p as f64 / params.alpha);
    let (offsets, indices) = bucket_coverage(env);
    let mut set = Vec::new();
    let values = (0..params.n as usize)
        .map(|k| {
            let s = &indices[offsets[k]..offsets[k + 1]];
            if s.len() < p {
                return 0.0;
            }
            set.clear();
            set.extend(s.iter().map(|&i| i as u64));
            let mut acc = 0.0;
            for_each_subset_in(&set, &domain, |t| {
                acc += t.iter().map(|&i| env.weights[i as usize - 1]).product::<f64>();
            });
            scale * acc
        })
        .collect();
    Ok(PathRealization {
        n: params.n,
        values,
        offsets,
        indices,
    })
}

/// `max_k |a_k − b_k| / c`.
pub fn sup_gap(a: &PathRealization, b: &PathRealization, c: f64) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / c
}

/// Distribution of `max_k |X^{(L)} − X^{(2L)}| / c_n` over coupled
/// replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub l: usize,
    pub reps: usize,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
    pub gaps: Vec<f64>,
}

/// Compares `L = params.truncation` with `2L` on the same draws. Replicate
/// `r` uses `seed_stream(params.seed, r)`.
pub fn truncation_diagnostic(
    params: &ModelParams,
    law: &RenewalLaw,
    tables: &RenewalTables,
    reps: usize,
) -> Result<TruncationReport> {
    if reps == 0 {
        return Err(Error::invalid("reps", "must be at least 1"));
    }
    let l = params.truncation;
    let c_n = normalization(params.alpha, params.beta, params.p, params.n)?;
    let big = params.with_truncation(2 * l);
    let mut gaps = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed_stream(params.seed, r as u64);
            let env2 = sample_environment(&big, law, tables, &mut rng)?;
            let x2 = evaluate_path(&env2, &big, tables)?;
            let x1 = evaluate_path(&env2.prefix(l), params, tables)?;
            Ok(sup_gap(&x1, &x2, c_n))
        })
        .collect::<Result<Vec<f64>>>()?;
    gaps.sort_by(f64::total_cmp);
    Ok(TruncationReport {
        l,
        reps,
        median: quantile_sorted(&gaps, 0.5),
        q90: quantile_sorted(&gaps, 0.9),
        max: *gaps.last().unwrap(),
        gaps,
    })
}

/// [`truncation_diagnostic`] along a grid of `L` values.
pub fn truncation_sweep(
    params: &ModelParams,
    law: &RenewalLaw,
    tables: &RenewalTables,
    reps: usize,
    grid: &[usize],
) -> Result<Vec<TruncationReport>> {
    grid.iter()
        .map(|&l| truncation_diagnostic(&params.with_truncation(l), law, tables, reps))
        .collect()
}

/// Smallest `L` in the sweep whose median gap is below `tol`.
pub fn recommend_truncation(reports: &[TruncationReport], tol: f64) -> Option<usize> {
    reports.iter().filter(|r| r.median < tol).map(|r| r.l).min()
}
