//! Heavy-tailed discrete renewal laws, renewal mass tables, and exact
//! samplers for renewal sets conditioned to hit `{1,…,n}`.
//!
//! Inter-arrival times `T ≥ 1` have tail `F̄(n) = P(T > n) ∼ C_F n^{−β}` with
//! `β ∈ (0,1)`, so the mean is infinite. The stationary shift measure is
//! `π({k}) = F̄(k)` on `ℕ₀`; it has infinite mass, and conditioning the
//! shifted renewal on hitting `{1,…,n}` gives the random set `R_n` used by
//! the series representation of the process.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use crate::special::gamma_reflection_pair;
use crate::{Error, Result};

/// Default cap on the length of a renewal mass table (the recursion is
/// quadratic).
pub const DEFAULT_MASS_CAP: usize = 1 << 17;

/// Guard on stationary tables (two `f64` arrays of this length).
pub const STATIONARY_CAP: usize = 1 << 28;

type TailFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum TailKind {
    /// `F̄(n) = (n+1)^{−β}`.
    ShiftedPower,
    Custom(TailFn),
}

/// A heavy-tailed inter-arrival distribution on `{1, 2, …}`.
#[derive(Clone)]
pub struct RenewalLaw {
    beta: f64,
    c_f: f64,
    kind: TailKind,
}

impl fmt::Debug for RenewalLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            TailKind::ShiftedPower => "shifted-power",
            TailKind::Custom(_) => "custom",
        };
        f.debug_struct("RenewalLaw")
            .field("beta", &self.beta)
            .field("c_f", &self.c_f)
            .field("kind", &kind)
            .finish()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("beta", format!("{beta} is not in (0,1)")))
    }
}

impl RenewalLaw {
    /// The default family `F̄(n) = (n+1)^{−β}`, so `C_F = 1` and
    /// `f(n) = n^{−β} − (n+1)^{−β}`.
    pub fn default_law(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            beta,
            c_f: 1.0,
            kind: TailKind::ShiftedPower,
        })
    }

    /// A law given by its tail function. The tail must satisfy `F̄(0) = 1`,
    /// be non-increasing and vanish at infinity; `c_f` is its regular
    /// variation constant.
    pub fn custom(
        beta: f64,
        c_f: f64,
        tail: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_beta(beta)?;
        if !(c_f > 0.0 && c_f.is_finite()) {
            return Err(Error::invalid("c_f", format!("{c_f} must be positive")));
        }
        if tail(0) != 1.0 {
            return Err(Error::invalid("tail", "F̄(0) must equal 1"));
        }
        Ok(Self {
            beta,
            c_f,
            kind: TailKind::Custom(Arc::new(tail)),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    /// `F̄(n) = P(T > n)`.
    pub fn tail(&self, n: u64) -> f64 {
        match &self.kind {
            TailKind::ShiftedPower => ((n as f64) + 1.0).powf(-self.beta),
            TailKind::Custom(t) => t(n),
        }
    }

    /// `f(n) = F̄(n−1) − F̄(n)`, zero at `n = 0`.
    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match &self.kind {
            // n^{−β}(1 − (1 + 1/n)^{−β}) without the cancellation.
            TailKind::ShiftedPower => {
                let x = n as f64;
                -x.powf(-self.beta) * (-self.beta * (1.0 / x).ln_1p()).exp_m1()
            }
            TailKind::Custom(t) => t(n - 1) - t(n),
        }
    }

    /// `n f(n) / F̄(n)`; bounded in `n` for laws satisfying the Doney
    /// condition (tends to `β` for the default law).
    pub fn doney_ratio(&self, n: u64) -> f64 {
        n as f64 * self.pmf(n) / self.tail(n)
    }

    /// Draws an inter-arrival time by tail inversion:
    /// `T = min{n ≥ 1 : F̄(n) < U}` with `U` uniform on `(0,1]`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = 1.0 - rng.random::<f64>();
        self.invert_tail(u)
    }

    /// `min{n ≥ 1 : F̄(n) < u}` for `u ∈ (0,1]`. Saturates at `u64::MAX`.
    pub fn invert_tail(&self, u: f64) -> u64 {
        match self.kind {
            TailKind::ShiftedPower => {
                // (n+1)^{−β} < u  ⟺  n > u^{−1/β} − 1.
                let t = (-u.ln() / self.beta).exp() - 1.0;
                let mut n = (t.floor() as u64).saturating_add(1).max(1);
                if n < (1u64 << 52) {
                    while n > 1 && self.tail(n - 1) < u {
                        n -= 1;
                    }
                    while self.tail(n) >= u {
                        n += 1;
                    }
                }
                n
            }
            TailKind::Custom(_) => self.invert_tail_search(u),
        }
    }

    fn invert_tail_search(&self, u: f64) -> u64 {
        if self.tail(1) < u {
            return 1;
        }
        let mut hi = 2u64;
        while self.tail(hi) >= u {
            if hi >= 1 << 62 {
                return u64::MAX;
            }
            hi *= 2;
        }
        // tail(lo) >= u > tail(hi)
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail(mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Renewal times `{0 = τ_0 < τ_1 < …}` of a non-shifted renewal process,
    /// truncated to `[0, horizon]`.
    pub fn sample_from_origin<R: Rng + ?Sized>(&self, horizon: u64, rng: &mut R) -> Vec<u64> {
        let mut hits = vec![0u64];
        let mut t = 0u64;
        loop {
            t = t.saturating_add(self.sample_increment(rng));
            if t > horizon {
                break;
            }
            hits.push(t);
        }
        hits
    }
}

/// Hit times of a renewal set inside `{1,…,horizon}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenewalPath {
    pub horizon: u64,
    pub hits: Vec<u64>,
}

impl RenewalPath {
    /// `true` when hits are strictly increasing and inside `{1,…,horizon}`.
    pub fn is_valid(&self) -> bool {
        self.hits.windows(2).all(|w| w[0] < w[1])
            && self.hits.first().is_none_or(|&h| h >= 1)
            && self.hits.last().is_none_or(|&h| h <= self.horizon)
    }

    pub fn contains(&self, k: u64) -> bool {
        self.hits.binary_search(&k).is_ok()
    }
}

/// Exact stationary weight `w_n` paired with its asymptotic
/// `C_F n^{1−β}/(1−β)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryWeight {
    pub exact: f64,
    pub asymptotic: f64,
}

/// Precomputed renewal quantities.
///
/// * `mass[k] = u(k) = P(k ∈ τ)` for `k ≤ mass_len` (may be empty);
/// * `weight[k] = w_k = Σ_{j=1}^k F̄(j)`;
/// * `first_hit[k] = W_k = Σ_{j=0}^{k−1} F̄(j)`, the total mass of shifted
///   renewals hitting `{1,…,k}`.
#[derive(Clone, Debug)]
pub struct RenewalTables {
    beta: f64,
    c_f: f64,
    mass: Vec<f64>,
    weight: Vec<f64>,
    first_hit: Vec<f64>,
}

impl RenewalTables {
    /// Stationary tables (`w`, `W`) up to `horizon`, and the renewal mass
    /// function up to `mass_len` (capped at [`DEFAULT_MASS_CAP`]).
    pub fn new(law: &RenewalLaw, horizon: usize, mass_len: usize) -> Result<Self> {
        Self::with_cap(law, horizon, mass_len, DEFAULT_MASS_CAP)
    }

    pub fn with_cap(
        law: &RenewalLaw,
        horizon: usize,
        mass_len: usize,
        mass_cap: usize,
    ) -> Result<Self> {
        if mass_len > mass_cap {
            return Err(Error::ResourceLimit(format!(
                "renewal mass table of length {mass_len} exceeds cap {mass_cap}"
            )));
        }
        let horizon = horizon.max(mass_len);
        if horizon > STATIONARY_CAP {
            return Err(Error::ResourceLimit(format!(
                "stationary table of length {horizon} exceeds cap {STATIONARY_CAP}"
            )));
        }
        let mut weight = Vec::with_capacity(horizon + 1);
        let mut first_hit = Vec::with_capacity(horizon + 1);
        weight.push(0.0);
        first_hit.push(0.0);
        let mut prev_tail = 1.0;
        for k in 1..=horizon as u64 {
            let t = law.tail(k);
            weight.push(weight[k as usize - 1] + t);
            first_hit.push(first_hit[k as usize - 1] + prev_tail);
            prev_tail = t;
        }
        let mass = if mass_len > 0 || horizon == 0 {
            renewal_mass_recursion(law, mass_len)
        } else {
            vec![1.0]
        };
        Ok(Self {
            beta: law.beta(),
            c_f: law.c_f(),
            mass,
            weight,
            first_hit,
        })
    }

    /// Stationary tables only (`u(0) = 1` is still available).
    pub fn stationary(law: &RenewalLaw, horizon: usize) -> Result<Self> {
        Self::new(law, horizon, 0)
    }

    /// Largest `n` covered by the stationary tables.
    pub fn horizon(&self) -> usize {
        self.weight.len() - 1
    }

    /// Largest `k` with `u(k)` available.
    pub fn mass_len(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mass(&self, k: usize) -> Option<f64> {
        self.mass.get(k).copied()
    }

    pub fn mass_slice(&self) -> &[f64] {
        &self.mass
    }

    /// `w_n = Σ_{k=1}^n F̄(k)`. Panics if `n > horizon`.
    pub fn w(&self, n: usize) -> f64 {
        self.weight[n]
    }

    /// `W_n = Σ_{k=0}^{n−1} F̄(k) = 1 + w_{n−1}` (for `n ≥ 1`).
    pub fn first_hit_mass(&self, n: usize) -> f64 {
        self.first_hit[n]
    }

    /// `w_n` with its asymptotic companion.
    pub fn stationary_weight(&self, n: usize) -> StationaryWeight {
        StationaryWeight {
            exact: self.w(n),
            asymptotic: self.c_f * (n as f64).powf(1.0 - self.beta) / (1.0 - self.beta),
        }
    }

    /// `n^{β−1}/(C_F Γ(β)Γ(1−β))`, the asymptotic of `u(n)`.
    pub fn mass_asymptotic(&self, n: usize) -> f64 {
        (n as f64).powf(self.beta - 1.0) / (self.c_f * gamma_reflection_pair(self.beta))
    }

    /// `max_{k ≤ upto} |Σ_{j=0}^k F̄(j) u(k−j) − 1|`.
    pub fn stationary_identity_error(&self, law: &RenewalLaw, upto: usize) -> f64 {
        let upto = upto.min(self.mass_len());
        let tails: Vec<f64> = (0..=upto as u64).map(|j| law.tail(j)).collect();
        (0..=upto)
            .map(|k| {
                let s: f64 = (0..=k).map(|j| tails[j] * self.mass[k - j]).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Writes `n,u,w` rows for `n ≤ mass_len`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,u,w")?;
        for n in 0..=self.mass_len().min(self.horizon()) {
            writeln!(out, "{},{:.16e},{:.16e}", n, self.mass[n], self.weight[n])?;
        }
        Ok(())
    }
}

/// `u(0) = 1`, `u(n) = Σ_{k=1}^n f(k) u(n−k)`.
fn renewal_mass_recursion(law: &RenewalLaw, len: usize) -> Vec<f64> {
    let pmf: Vec<f64> = (0..=len as u64).map(|k| law.pmf(k)).collect();
    let mut u = Vec::with_capacity(len + 1);
    u.push(1.0);
    for n in 1..=len {
        // Σ_{k=1}^n f(k) u(n−k): pair f[1..=n] with u[0..n] reversed.
        let f = &pmf[1..=n];
        let prev = &u[..n];
        let mut acc = [0.0f64; 4];
        let chunks = n / 4;
        for c in 0..chunks {
            for l in 0..4 {
                let k = 4 * c + l;
                acc[l] += f[k] * prev[n - 1 - k];
            }
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for k in 4 * chunks..n {
            s += f[k] * prev[n - 1 - k];
        }
        u.push(s);
    }
    u
}

/// Renewal mass table `u(0..=n)` with the default cap.
pub fn renewal_mass(law: &RenewalLaw, n: usize) -> Result<RenewalTables> {
    RenewalTables::new(law, n, n)
}

/// Samples `R_n`: the first hit `V ∈ {1,…,n}` has `P(V = k) = F̄(k−1)/W_n`,
/// then i.i.d. increments extend the path until it leaves `{1,…,n}`.
/// Consequently `P(k ∈ R_n) = 1/W_n` for every `k ≤ n`.
pub fn sample_conditioned_renewal<R: Rng + ?Sized>(
    law: &RenewalLaw,
    tables: &RenewalTables,
    n: usize,
    rng: &mut R,
) -> RenewalPath {
    let mut hits = Vec::new();
    sample_conditioned_into(law, tables, n, rng, &mut hits);
    RenewalPath {
        horizon: n as u64,
        hits,
    }
}

/// As [`sample_conditioned_renewal`], appending hits to `out` (cleared
/// first). Panics if `n` is zero or beyond the table horizon.
pub fn sample_conditioned_into<R: Rng + ?Sized>(
    law: &RenewalLaw,
    tables: &RenewalTables,
    n: usize,
    rng: &mut R,
    out: &mut Vec<u64>,
) {
    assert!(n >= 1, "conditioned renewal needs n >= 1");
    assert!(n <= tables.horizon(), "tables do not cover n = {n}");
    out.clear();
    let first = sample_first_hit(tables, n, rng);
    let n = n as u64;
    let mut t = first;
    while t <= n {
        out.push(t);
        t = t.saturating_add(law.sample_increment(rng));
    }
}

/// First hit of `R_n`; `P(V = k) = F̄(k−1)/W_n`, `k = 1..=n`.
pub fn sample_first_hit<R: Rng + ?Sized>(tables: &RenewalTables, n: usize, rng: &mut R) -> u64 {
    let total = tables.first_hit[n];
    let x = rng.random::<f64>() * total;
    // smallest k with W_k > x; W_0 = 0 <= x always
    let k = tables.first_hit[..=n].partition_point(|&c| c <= x);
    k.clamp(1, n) as u64
}
