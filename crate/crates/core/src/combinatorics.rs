//! Index-set counts: `𝒟_p*(x)`, `ℋ(n,K)`, `C_{n,1}`, `C_{n,2}` and the
//! product-of-uniforms distribution.
//!
//! Products are exact `u64` with overflow checks. The real-valued cap is
//! compared with a half-ulp tolerance, so `x = 4.0 − 1e−16` still admits
//! `[i] = 4`.

use crate::intersection::{shape_constant, Regime, TailIndex};
use crate::limit::{factorial_weight, normalization};
use crate::renewal::{RenewalLaw, RenewalTables};
use crate::special::factorial;
use crate::{Error, Result};

/// Refuses enumerations above this many tuples.
pub const ENUMERATION_GUARD: u64 = 100_000_000;

/// Refuses `C_{n,2}` instances above this many ordered pairs.
pub const PAIR_GUARD: u64 = 10_000_000;

#[inline]
fn fits(prod: u64, x: f64) -> bool {
    (prod as f64) <= x * (1.0 + 0.5 * f64::EPSILON)
}

/// `{i_1 < … < i_p : i_1⋯i_p ≤ bound, i_p ≤ cap}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TupleDomain {
    pub p: u32,
    pub bound: f64,
    pub cap: Option<u64>,
}

impl TupleDomain {
    pub fn new(p: u32, bound: f64, cap: Option<u64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "must be at least 1"));
        }
        if !(bound >= 0.0) || bound.is_infinite() {
            return Err(Error::invalid("bound", format!("{bound} is not finite and >= 0")));
        }
        Ok(TupleDomain { p, bound, cap })
    }

    /// Whether `t` (strictly increasing, length `p`) lies in the domain.
    pub fn contains(&self, t: &[u64]) -> bool {
        if t.len() != self.p as usize || t.first().is_none_or(|&f| f == 0) {
            return false;
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        if self.cap.is_some_and(|c| *t.last().unwrap() > c) {
            return false;
        }
        product(t).is_some_and(|pr| fits(pr, self.bound))
    }

    /// `t` followed by the smallest completion `j, j+1, …` fits.
    fn min_completion_fits(&self, prefix_prod: u64, j: u64, remaining: u32) -> bool {
        let mut prod = prefix_prod;
        for r in 0..remaining as u64 {
            let v = j + r;
            if self.cap.is_some_and(|c| v > c) {
                return false;
            }
            prod = match prod.checked_mul(v) {
                Some(x) => x,
                None => return false,
            };
        }
        fits(prod, self.bound)
    }

    /// Largest `j` with `prod·j` within the bound and the cap.
    fn last_max(&self, prod: u64) -> u64 {
        let mut j = (self.bound / prod as f64).floor().min(u64::MAX as f64 / 2.0) as u64;
        while j > 0 && prod.checked_mul(j).is_none_or(|v| !fits(v, self.bound)) {
            j -= 1;
        }
        while prod.checked_mul(j + 1).is_some_and(|v| fits(v, self.bound)) {
            j += 1;
        }
        match self.cap {
            Some(c) => j.min(c),
            None => j,
        }
    }

    /// `|domain|` without materializing the tuples.
    pub fn count(&self) -> u64 {
        self.count_from(1, 1, self.p)
    }

    fn count_from(&self, start: u64, prod: u64, remaining: u32) -> u64 {
        if remaining == 1 {
            let hi = self.last_max(prod);
            return hi.saturating_sub(start - 1);
        }
        let mut total = 0u64;
        let mut j = start;
        while self.min_completion_fits(prod, j, remaining) {
            total += self.count_from(j + 1, prod * j, remaining - 1);
            j += 1;
        }
        total
    }

    /// Lexicographic tuple iterator. Refuses domains above
    /// [`ENUMERATION_GUARD`].
    pub fn enumerate(&self) -> Result<TupleIter> {
        let c = self.count();
        if c > ENUMERATION_GUARD {
            return Err(Error::ResourceLimit(format!(
                "{c} tuples exceed the enumeration guard {ENUMERATION_GUARD}"
            )));
        }
        let first: Vec<u64> = (1..=self.p as u64).collect();
        let next = self.contains(&first).then_some(first);
        Ok(TupleIter { domain: *self, next })
    }
}

fn product(t: &[u64]) -> Option<u64> {
    t.iter().try_fold(1u64, |acc, &v| acc.checked_mul(v))
}

/// Iterator over a [`TupleDomain`].
#[derive(Clone, Debug)]
pub struct TupleIter {
    domain: TupleDomain,
    next: Option<Vec<u64>>,
}

impl Iterator for TupleIter {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let cur = self.next.take()?;
        let p = cur.len();
        // Deepest position whose increment still admits a minimal completion.
        for d in (0..p).rev() {
            let prefix = match product(&cur[..d]) {
                Some(v) => v,
                None => continue,
            };
            let j = cur[d] + 1;
            if self.domain.min_completion_fits(prefix, j, (p - d) as u32) {
                let mut succ = cur.clone();
                for (r, slot) in succ[d..].iter_mut().enumerate() {
                    *slot = j + r as u64;
                }
                self.next = Some(succ);
                break;
            }
        }
        Some(cur)
    }
}

/// Convenience: collect [`TupleDomain::enumerate`].
pub fn enumerate_tuples(domain: &TupleDomain) -> Result<Vec<Vec<u64>>> {
    Ok(domain.enumerate()?.collect())
}

/// `x log^{p−1}(x) / (p!(p−1)!)`.
pub fn count_asymptotic(x: f64, p: u32) -> f64 {
    x * x.ln().powi(p as i32 - 1) / factorial_weight(p)
}

/// Calls `f` with every `p`-subset of the sorted index set `set` lying in
/// `domain`, pruning on the product.
pub fn for_each_subset_in<F: FnMut(&[u64])>(set: &[u64], domain: &TupleDomain, mut f: F) {
    fn rec<F: FnMut(&[u64])>(
        set: &[u64],
        d: &TupleDomain,
        start: usize,
        prod: u64,
        cur: &mut Vec<u64>,
        f: &mut F,
    ) {
        if cur.len() == d.p as usize {
            f(cur);
            return;
        }
        let need = d.p as usize - cur.len();
        for i in start..set.len() {
            if set.len() - i < need {
                break;
            }
            let v = set[i];
            if d.cap.is_some_and(|c| v > c) {
                break;
            }
            // Smallest completion inside `set` uses the next `need` entries.
            let mut min_prod = Some(prod);
            for &w in &set[i..i + need] {
                min_prod = min_prod.and_then(|m| m.checked_mul(w));
            }
            match min_prod {
                Some(m) if fits(m, d.bound) && d.cap.is_none_or(|c| set[i + need - 1] <= c) => {}
                _ => break,
            }
            cur.push(v);
            rec(set, d, i + 1, prod * v, cur, f);
            cur.pop();
        }
    }
    let mut cur = Vec::with_capacity(domain.p as usize);
    rec(set, domain, 0, 1, &mut cur, &mut f);
}

/// `r_n = w_n^p / c_n^α` with the exact `w_n`.
pub fn r_n(alpha: f64, beta: TailIndex, p: u32, n: u64, tables: &RenewalTables) -> Result<f64> {
    let regime = beta.regime(p);
    if regime == Regime::SuperCritical {
        return Err(Error::RegimeMismatch {
            expected: "critical or sub-critical",
            actual: regime.to_string(),
        });
    }
    let c = normalization(alpha, beta, p, n)?;
    Ok(tables.w(n as usize).powi(p as i32) / c.powf(alpha))
}

/// `(C_F/(1−β))^p log n / (log log n)^{p−1}`, the critical-regime growth of
/// `r_n`.
pub fn r_n_critical_asymptotic(beta: f64, c_f: f64, p: u32, n: u64) -> f64 {
    let ln = (n as f64).ln();
    (c_f / (1.0 - beta)).powi(p as i32) * ln / ln.ln().powi(p as i32 - 1)
}

/// `ℋ(n,K) = {i ∈ 𝒟_p*(K r_n) : i_p ≤ w_n}`.
pub fn h_domain(
    alpha: f64,
    beta: TailIndex,
    p: u32,
    n: u64,
    k: f64,
    tables: &RenewalTables,
) -> Result<TupleDomain> {
    if !(k >= 0.0) {
        return Err(Error::invalid("K", format!("{k} is negative")));
    }
    let r = r_n(alpha, beta, p, n, tables)?;
    TupleDomain::new(p, k * r, Some(tables.w(n as usize).floor() as u64))
}

/// Exact `|ℋ(n,K)|` against the regime asymptotic of `C_{n,1}(K)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountComparison {
    pub exact: u64,
    pub asymptotic: f64,
}

impl CountComparison {
    pub fn ratio(&self) -> f64 {
        self.exact as f64 / self.asymptotic
    }
}

/// `C_{n,1}(K)`: sub-critical `K 𝔇 w_n^p/(n p!(p−1)!)`, critical
/// `K (C_F/(1−β))^p log n/(p!(p−1)!)`.
pub fn count_c_n1(
    alpha: f64,
    beta: TailIndex,
    p: u32,
    n: u64,
    law: &RenewalLaw,
    tables: &RenewalTables,
    k: f64,
) -> Result<CountComparison> {
    let domain = h_domain(alpha, beta, p, n, k, tables)?;
    let exact = domain.count();
    if exact > ENUMERATION_GUARD {
        return Err(Error::ResourceLimit(format!(
            "|H(n,K)| = {exact} exceeds {ENUMERATION_GUARD}"
        )));
    }
    let asymptotic = match beta.regime(p) {
        Regime::SubCritical => {
            let d = shape_constant(beta, p)?.value;
            k * d * tables.w(n as usize).powi(p as i32) / (n as f64 * factorial_weight(p))
        }
        _ => {
            k * (law.c_f() / (1.0 - beta.value())).powi(p as i32) * (n as f64).ln()
                / factorial_weight(p)
        }
    };
    Ok(CountComparison { exact, asymptotic })
}

/// Ordered pairs `(i, i′)` from `tuples` with `|i ∩ i′| = r`. Tuples must be
/// sorted.
pub fn count_overlap_pairs(tuples: &[Vec<u64>], r: usize) -> Result<u64> {
    let n = tuples.len() as u64;
    if n.saturating_mul(n) > PAIR_GUARD {
        return Err(Error::ResourceLimit(format!(
            "{n}^2 ordered pairs exceed {PAIR_GUARD}"
        )));
    }
    let mut count = 0u64;
    for a in tuples {
        for b in tuples {
            if overlap(a, b) == r {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn overlap(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// `C_{n,2}(r, K)` by double enumeration of `ℋ(n,K)`.
pub fn count_c_n2(
    alpha: f64,
    beta: TailIndex,
    p: u32,
    n: u64,
    tables: &RenewalTables,
    k: f64,
    r: usize,
) -> Result<u64> {
    let domain = h_domain(alpha, beta, p, n, k, tables)?;
    let size = domain.count();
    if size.saturating_mul(size) > PAIR_GUARD {
        return Err(Error::ResourceLimit(format!(
            "|H(n,K)|^2 = {size}^2 exceeds {PAIR_GUARD}"
        )));
    }
    count_overlap_pairs(&enumerate_tuples(&domain)?, r)
}

/// `P(U_1⋯U_p ≤ s) = s Σ_{k<p} (−log s)^k / k!`.
pub fn product_uniform_cdf(s: f64, p: u32) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid("s", format!("{s} is not positive")));
    }
    if s >= 1.0 {
        return Ok(1.0);
    }
    let l = -s.ln();
    Ok(s * (0..p).map(|k| l.powi(k as i32) / factorial(k)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(p: usize, x: f64, cap: Option<u64>) -> Vec<Vec<u64>> {
        let top = cap.unwrap_or(u64::MAX).min(x.floor() as u64);
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(p: usize, x: f64, top: u64, start: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if cur.len() == p {
                if (cur.iter().product::<u64>() as f64) <= x {
                    out.push(cur.clone());
                }
                return;
            }
            for v in start..=top {
                if cur.iter().product::<u64>() * v > x as u64 {
                    break;
                }
                cur.push(v);
                rec(p, x, top, v + 1, cur, out);
                cur.pop();
            }
        }
        rec(p, x, top, 1, &mut cur, &mut out);
        out
    }

    #[test]
    fn enumeration_examples() {
        let d = TupleDomain::new(2, 4.0, None).unwrap();
        assert_eq!(enumerate_tuples(&d).unwrap(), vec![vec![1, 2], vec![1, 3], vec![1, 4]]);
        assert_eq!(d.count(), 3);
        let d = TupleDomain::new(1, 7.5, None).unwrap();
        assert_eq!(enumerate_tuples(&d).unwrap().len(), 7);
        let d = TupleDomain::new(2, 10.0, Some(3)).unwrap();
        assert_eq!(enumerate_tuples(&d).unwrap(), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        let d = TupleDomain::new(3, 5.0, None).unwrap();
        assert_eq!(d.count(), 0);
        assert_eq!(enumerate_tuples(&d).unwrap().len(), 0);
    }

    #[test]
    fn half_ulp_tolerance() {
        let d = TupleDomain::new(2, 4.0 - 4.0 * f64::EPSILON / 4.0, None).unwrap();
        assert_eq!(d.count(), 3);
    }

    #[test]
    fn matches_brute_force() {
        for p in 1..=4usize {
            for &x in &[1.0, 6.0, 24.0, 100.5, 999.0] {
                for cap in [None, Some(7u64), Some(30)] {
                    let d = TupleDomain::new(p as u32, x, cap).unwrap();
                    let got = enumerate_tuples(&d).unwrap();
                    assert_eq!(got, brute(p, x, cap), "p={p} x={x} cap={cap:?}");
                    assert_eq!(d.count() as usize, got.len());
                }
            }
        }
    }

    #[test]
    fn count_asymptotic_ratio_trends_to_one() {
        assert_eq!(count_asymptotic(50.0, 1), 50.0);
        let ratios: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
            .iter()
            .map(|&x| TupleDomain::new(2, x, None).unwrap().count() as f64 / count_asymptotic(x, 2))
            .collect();
        for w in ratios.windows(2) {
            assert!((w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        }
        assert!((ratios[3] - 1.0).abs() < 0.2, "{ratios:?}");
    }

    #[test]
    fn subset_walk_agrees_with_domain() {
        let set = [1u64, 2, 4, 5, 9, 11, 20];
        let d = TupleDomain::new(3, 200.0, Some(11)).unwrap();
        let mut seen = Vec::new();
        for_each_subset_in(&set, &d, |t| seen.push(t.to_vec()));
        let expect: Vec<_> = brute(3, 200.0, Some(11))
            .into_iter()
            .filter(|t| t.iter().all(|v| set.contains(v)))
            .collect();
        assert_eq!(seen, expect);
    }

    #[test]
    fn overlap_counts() {
        let h = vec![vec![1, 2], vec![1, 3]];
        assert_eq!(count_overlap_pairs(&h, 1).unwrap(), 2);
        assert_eq!(count_overlap_pairs(&h, 2).unwrap(), 2);
        assert_eq!(count_overlap_pairs(&h, 0).unwrap(), 0);
    }

    #[test]
    fn product_uniform_examples() {
        assert_eq!(product_uniform_cdf(1.0, 4).unwrap(), 1.0);
        assert!((product_uniform_cdf(0.3, 1).unwrap() - 0.3).abs() < 1e-15);
        assert!(product_uniform_cdf(0.0, 2).is_err());
        let s: f64 = 0.01;
        let l = -s.ln();
        let want = s * (1.0 + l + l * l / 2.0);
        assert!((product_uniform_cdf(s, 3).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn r_n_identities() {
        let law = RenewalLaw::default_law(0.4).unwrap();
        let beta = TailIndex::new(0.4).unwrap();
        let n = 10_000u64;
        let t = RenewalTables::stationary(&law, n as usize).unwrap();
        let r = r_n(1.0, beta, 2, n, &t).unwrap();
        let w = t.w(n as usize);
        let nf = n as f64;
        assert!((r / (w * w / (nf * nf.ln())) - 1.0).abs() < 1e-12);
        let c = normalization(1.3, beta, 2, n).unwrap();
        let r = r_n(1.3, beta, 2, n, &t).unwrap();
        assert!((r * c.powf(1.3) / (w * w) - 1.0).abs() < 1e-12);
        assert!(r_n(1.0, TailIndex::new(0.8).unwrap(), 2, n, &t).is_err());
    }

    #[test]
    fn r_n_critical_close_to_asymptotic() {
        let law = RenewalLaw::default_law(0.5).unwrap();
        let beta = TailIndex::ratio(1, 2).unwrap();
        let n = 1_000_000u64;
        let t = RenewalTables::stationary(&law, n as usize).unwrap();
        let r = r_n(1.0, beta, 2, n, &t).unwrap();
        let a = r_n_critical_asymptotic(0.5, 1.0, 2, n);
        assert!((r / a - 1.0).abs() < 0.25, "{r} vs {a}");
    }

    #[test]
    fn c_n1_examples() {
        let law = RenewalLaw::default_law(0.5).unwrap();
        let beta = TailIndex::ratio(1, 2).unwrap();
        let n = 100_000u64;
        let t = RenewalTables::stationary(&law, n as usize).unwrap();
        let c = count_c_n1(1.0, beta, 2, n, &law, &t, 3.0).unwrap();
        assert!((c.asymptotic - 2.0 * 3.0 * (n as f64).ln()).abs() < 1e-9);
        let zero = count_c_n1(1.0, beta, 2, n, &law, &t, 0.0).unwrap();
        assert_eq!(zero.exact, 0);
        assert_eq!(zero.asymptotic, 0.0);
    }

    #[test]
    fn c_n1_subcritical_is_log_slow() {
        // K = 1, n = 10^6: |H(n,K)| = 2 against an asymptotic of 4.40. The
        // ratio 0.455 sits just under 1/2; convergence is logarithmic.
        let law = RenewalLaw::default_law(0.4).unwrap();
        let beta = TailIndex::new(0.4).unwrap();
        let n = 1_000_000u64;
        let t = RenewalTables::stationary(&law, n as usize).unwrap();
        let c = count_c_n1(1.0, beta, 2, n, &law, &t, 1.0).unwrap();
        assert_eq!(c.exact, 2);
        assert!((c.asymptotic - 4.3997).abs() < 1e-3, "{c:?}");
        assert!(c.ratio() > 0.4 && c.ratio() < 0.5);
    }

    #[test]
    fn c_n2_diagonal_is_c_n1() {
        let law = RenewalLaw::default_law(0.4).unwrap();
        let beta = TailIndex::new(0.4).unwrap();
        let n = 100_000u64;
        let t = RenewalTables::stationary(&law, n as usize).unwrap();
        let k = 200.0;
        let c1 = count_c_n1(1.0, beta, 2, n, &law, &t, k).unwrap().exact;
        assert!(c1 > 10);
        assert_eq!(count_c_n2(1.0, beta, 2, n, &t, k, 2).unwrap(), c1);
        let all: u64 = (0..=2).map(|r| count_c_n2(1.0, beta, 2, n, &t, k, r).unwrap()).sum();
        assert_eq!(all, c1 * c1);
    }
}
