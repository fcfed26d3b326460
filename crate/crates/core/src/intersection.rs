//! Intersections of independent renewal processes and the scalar constants
//! derived from `β`.
//!
//! The `p`-fold intersection `η = τ⁽¹⁾ ∩ … ∩ τ⁽ᵖ⁾` of i.i.d. non-shifted
//! renewals is again a renewal process with mass function `u(n)^p`. It is
//! null-recurrent when `β_p = pβ − p + 1 ≥ 0` and terminating when
//! `β_p < 0`; the sign of `β_p` selects the extremal regime.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::renewal::{RenewalLaw, RenewalTables};
use crate::special::{binomial, gamma, gamma_reflection_pair};
use crate::{Error, Result};

/// Tolerance used to call `β_q = 0` when `β` is given as a decimal.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Tail index `β ∈ (0,1)`, optionally carried as an exact ratio `num/den`
/// so that boundary cases such as `β = 1 − 1/p` classify exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct TailIndex {
    value: f64,
    ratio: Option<(u64, u64)>,
}

impl TailIndex {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self { value, ratio: None })
        } else {
            Err(Error::invalid("beta", format!("{value} is not in (0,1)")))
        }
    }

    pub fn ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::invalid("beta", format!("{num}/{den} is not in (0,1)")));
        }
        Ok(Self {
            value: num as f64 / den as f64,
            ratio: Some((num, den)),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn as_ratio(&self) -> Option<(u64, u64)> {
        self.ratio
    }

    /// `β_q = qβ − q + 1`.
    pub fn beta_q(&self, q: u32) -> f64 {
        beta_index(self.value, q)
    }

    /// Sign of `β_q`: exact for ratios, within [`CRITICAL_TOLERANCE`] of zero
    /// counts as zero for decimals.
    pub fn sign_beta_q(&self, q: u32) -> Ordering {
        match self.ratio {
            Some((num, den)) => {
                // β_q = (q·num − q·den + den) / den
                let q = q as i128;
                let numer = q * num as i128 - q * den as i128 + den as i128;
                numer.cmp(&0)
            }
            None => {
                let b = self.beta_q(q);
                if b.abs() < CRITICAL_TOLERANCE {
                    Ordering::Equal
                } else if b > 0.0 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    pub fn regime(&self, p: u32) -> Regime {
        match self.sign_beta_q(p) {
            Ordering::Greater => Regime::SuperCritical,
            Ordering::Equal => Regime::Critical,
            Ordering::Less => Regime::SubCritical,
        }
    }

    /// `p′ = max{q ∈ ℕ : β_q > 0}`.
    pub fn p_prime(&self) -> u32 {
        let mut q = 1;
        while self.sign_beta_q(q + 1) == Ordering::Greater {
            q += 1;
        }
        q
    }

    /// `q_{β,p} = min{q : β_q < 0}`, if any `q ≤ p` qualifies.
    pub fn first_negative_index(&self, p: u32) -> Option<u32> {
        (1..=p).find(|&q| self.sign_beta_q(q) == Ordering::Less)
    }
}

impl fmt::Display for TailIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ratio {
            Some((n, d)) => write!(f, "{n}/{d}"),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for TailIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let parse = |t: &str| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::invalid("beta", format!("bad ratio `{s}`: {e}")))
            };
            let (n, d) = (parse(n)?, parse(d)?);
            let g = gcd(n, d);
            if g == 0 {
                return Err(Error::invalid("beta", format!("bad ratio `{s}`")));
            }
            Self::ratio(n / g, d / g)
        } else {
            let v = s
                .parse::<f64>()
                .map_err(|e| Error::invalid("beta", format!("bad number `{s}`: {e}")))?;
            Self::new(v)
        }
    }
}

impl From<TailIndex> for String {
    fn from(b: TailIndex) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for TailIndex {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Extremal regime, by the sign of `β_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    SuperCritical,
    Critical,
    SubCritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::SuperCritical => "SuperCritical",
            Regime::Critical => "Critical",
            Regime::SubCritical => "SubCritical",
        };
        f.write_str(s)
    }
}

/// `β_q = qβ − q + 1`.
pub fn beta_index(beta: f64, q: u32) -> f64 {
    let q = q as f64;
    q * beta - q + 1.0
}

/// Everything the limit theory attaches to a parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub alpha: f64,
    pub beta: TailIndex,
    pub p: u32,
    pub regime: Regime,
    /// `β_q` for `q = 1..=p`.
    pub beta_q: Vec<f64>,
    pub beta_p: f64,
    pub p_prime: u32,
    /// `q_{β,p}`, sub-critical only.
    pub q_beta_p: Option<u32>,
    /// Terminating probability `𝔮_{F,p}`, sub-critical only.
    pub q_frak: Option<f64>,
    /// Rigorous bracket around `𝔮_{F,p}`.
    pub q_frak_bracket: Option<(f64, f64)>,
    /// Shape constant `𝔇_{β,p}`, sub-critical only.
    pub d_shape: Option<f64>,
    /// Limit constant `𝔠_{F,p}`.
    pub c_frak: f64,
    /// Extremal index `θ = 2p!(p−1)!𝔠_{F,p}`: in `(0,1)` sub-critical, `0`
    /// critical, undefined super-critical.
    pub extremal_index: Option<f64>,
}

/// Shape constant `𝔇_{β,p}` with its starting index `q_{β,p}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeConstant {
    pub q_beta_p: u32,
    pub value: f64,
}

/// `𝔇_{β,p} = Σ_{s=q_{β,p}}^p (−1)^{p−s} C(p,s) (−β_s)^{p−1}`,
/// `q_{β,p} = min{q : β_q < 0}`. Sub-critical parameters only.
pub fn shape_constant(beta: TailIndex, p: u32) -> Result<ShapeConstant> {
    if beta.regime(p) != Regime::SubCritical {
        return Err(Error::RegimeMismatch {
            expected: "sub-critical",
            actual: beta.regime(p).to_string(),
        });
    }
    let q0 = beta
        .first_negative_index(p)
        .expect("sub-critical implies β_p < 0");
    let value = (q0..=p)
        .map(|s| {
            let sign = if (p - s) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(p as u64, s as u64) * (-beta.beta_q(s)).powi(p as i32 - 1)
        })
        .sum();
    Ok(ShapeConstant {
        q_beta_p: q0,
        value,
    })
}

/// Multi-way intersection of strictly increasing lists.
pub fn intersect_paths<S: AsRef<[u64]>>(paths: &[S]) -> Vec<u64> {
    let Some((first, rest)) = paths.split_first() else {
        return Vec::new();
    };
    let mut acc: Vec<u64> = first.as_ref().to_vec();
    for other in rest {
        acc = intersect_two(&acc, other.as_ref());
        if acc.is_empty() {
            break;
        }
    }
    acc
}

fn intersect_two(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Truncated-series value of `𝔮_{F,p} = P(η_1 = ∞) = 1/Σ_n u(n)^p` with a
/// bracket accounting for the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerminatingProb {
    /// `1/Σ_{n≤N} u(n)^p` (an upper bound for `𝔮`).
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub partial_sum: f64,
    /// Bound on `Σ_{n>N} u(n)^p`.
    pub tail_bound: f64,
    /// Envelope constant `C` with `u(n)^p ≤ C n^{β_p − 1}` assumed for `n > N`.
    pub envelope: f64,
    pub n_trunc: usize,
}

/// [`TerminatingProb`] from an explicit mass table `u(0..=N)`.
///
/// The envelope constant is the largest of `u(n)^p n^{1−β_p}` over
/// `n ∈ [N/2, N]` and `asymptotic_constant` (when supplied); the tail is then
/// bounded by `C N^{β_p}/|β_p|`.
pub fn terminating_prob_from_mass(
    mass: &[f64],
    p: u32,
    beta_p: f64,
    asymptotic_constant: Option<f64>,
) -> Result<TerminatingProb> {
    if beta_p >= 0.0 {
        return Err(Error::RegimeMismatch {
            expected: "sub-critical",
            actual: format!("β_p = {beta_p}"),
        });
    }
    if mass.is_empty() {
        return Err(Error::InsufficientData("empty renewal mass table".into()));
    }
    let n_trunc = mass.len() - 1;
    let partial_sum: f64 = mass.iter().map(|u| u.powi(p as i32)).sum();
    let envelope = if n_trunc >= 2 {
        let lo = (n_trunc / 2).max(1);
        (lo..=n_trunc)
            .map(|n| mass[n].powi(p as i32) * (n as f64).powf(1.0 - beta_p))
            .fold(asymptotic_constant.unwrap_or(0.0), f64::max)
    } else {
        asymptotic_constant.unwrap_or(0.0)
    };
    let tail_bound = if n_trunc == 0 {
        f64::INFINITY
    } else {
        envelope * (n_trunc as f64).powf(beta_p) / beta_p.abs()
    };
    let estimate = 1.0 / partial_sum;
    Ok(TerminatingProb {
        estimate,
        lower: 1.0 / (partial_sum + tail_bound),
        upper: estimate,
        partial_sum,
        tail_bound,
        envelope,
        n_trunc,
    })
}

/// `𝔮_{F,p}` truncated at `n_trunc` (must be within the table).
pub fn terminating_prob(
    tables: &RenewalTables,
    law: &RenewalLaw,
    beta: TailIndex,
    p: u32,
    n_trunc: usize,
) -> Result<TerminatingProb> {
    if beta.regime(p) != Regime::SubCritical {
        return Err(Error::RegimeMismatch {
            expected: "sub-critical",
            actual: beta.regime(p).to_string(),
        });
    }
    if n_trunc > tables.mass_len() {
        return Err(Error::invalid(
            "n_trunc",
            format!("{n_trunc} exceeds mass table length {}", tables.mass_len()),
        ));
    }
    let asym = (law.c_f() * gamma_reflection_pair(law.beta())).powi(-(p as i32));
    terminating_prob_from_mass(
        &tables.mass_slice()[..=n_trunc],
        p,
        beta.beta_q(p),
        Some(asym),
    )
}

/// Asymptotic `F̄_p(n) = P(η_1 > n)` for `β_p ≥ 0`:
/// `n^{−β_p}(C_FΓ(β)Γ(1−β))^p/(Γ(β_p)Γ(1−β_p))` if `β_p > 0`, and
/// `(C_FΓ(β)Γ(1−β))^p/log n` at `β_p = 0`.
pub fn intersection_tail_asymptotic(beta: TailIndex, c_f: f64, p: u32, n: u64) -> Result<f64> {
    let base = (c_f * gamma_reflection_pair(beta.value())).powi(p as i32);
    match beta.regime(p) {
        Regime::SuperCritical => {
            let bp = beta.beta_q(p);
            Ok((n as f64).powf(-bp) * base / (gamma(bp) * gamma(1.0 - bp)))
        }
        Regime::Critical => {
            if n < 2 {
                return Err(Error::invalid("n", "log n must be positive"));
            }
            Ok(base / (n as f64).ln())
        }
        Regime::SubCritical => Err(Error::RegimeMismatch {
            expected: "super-critical or critical",
            actual: "SubCritical".into(),
        }),
    }
}

/// `true` when `p` independent renewals started at 0 share no renewal time
/// in `(0, horizon]`.
pub fn intersection_escapes<R: Rng + ?Sized>(
    law: &RenewalLaw,
    p: u32,
    horizon: u64,
    rng: &mut R,
) -> bool {
    let mut common = law.sample_from_origin(horizon, rng);
    common.remove(0);
    for _ in 1..p {
        if common.is_empty() {
            return true;
        }
        let next = law.sample_from_origin(horizon, rng);
        common = intersect_two(&common, &next[1..]);
    }
    common.is_empty()
}

/// Monte Carlo estimate of `F̄_p(n)` with its standard error.
pub fn empirical_intersection_tail<R: Rng + ?Sized>(
    law: &RenewalLaw,
    p: u32,
    n: u64,
    reps: usize,
    rng: &mut R,
) -> (f64, f64) {
    let hits = (0..reps)
        .filter(|_| intersection_escapes(law, p, n, rng))
        .count();
    let est = hits as f64 / reps as f64;
    (est, (est * (1.0 - est) / reps as f64).sqrt())
}

/// One draw of the spectral tail process `(εΘ*_0, …, εΘ*_m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailProcessSample {
    pub m: usize,
    /// `Θ*_k = 1{k ∈ η}`, `k = 0..=m`.
    pub theta: Vec<bool>,
    pub sign: i8,
}

/// Simulates `p` i.i.d. non-shifted renewals to horizon `m`, intersects them
/// and attaches an independent Rademacher sign.
pub fn sample_tail_process<R: Rng + ?Sized>(
    law: &RenewalLaw,
    p: u32,
    m: usize,
    rng: &mut R,
) -> TailProcessSample {
    let paths: Vec<Vec<u64>> = (0..p.max(1))
        .map(|_| law.sample_from_origin(m as u64, rng))
        .collect();
    let eta = intersect_paths(&paths);
    let mut theta = vec![false; m + 1];
    for k in eta {
        theta[k as usize] = true;
    }
    let sign = if rng.random::<bool>() { 1 } else { -1 };
    TailProcessSample { m, theta, sign }
}
