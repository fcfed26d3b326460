//! Small numeric helpers shared across modules.

/// `Γ(x)` in double precision (Lanczos, via `statrs`).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `Γ(β)Γ(1−β) = π / sin(πβ)` for `β ∈ (0,1)`.
///
/// Computed from the gamma function itself; the reflection formula is used
/// only in tests as an independent check.
pub fn gamma_reflection_pair(beta: f64) -> f64 {
    gamma(beta) * gamma(1.0 - beta)
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.checked_mul((n - j) as u128)? / (j + 1) as u128;
    }
    Some(acc)
}

/// Quantile of a sample by linear interpolation between order statistics.
/// `sorted` must be sorted ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * t
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_pair_matches_sine_formula() {
        for &b in &[0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9] {
            let expect = std::f64::consts::PI / (std::f64::consts::PI * b).sin();
            let got = gamma_reflection_pair(b);
            assert!(((got - expect) / expect).abs() < 1e-13, "beta={b}");
        }
    }

    #[test]
    fn gamma_half_squared_is_pi() {
        let g = gamma(0.5);
        assert!((g * g - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial_u128(64, 4), Some(635_376));
        assert_eq!(binomial_u128(3, 5), Some(0));
        assert_eq!(factorial(4), 24.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-15);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }
}
