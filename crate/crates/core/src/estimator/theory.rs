//! Exact variance and moment expressions for the estimator in terms of the
//! distribution of `S` under the base measure, plus the product-moment bound
//! that controls its relative error.

use serde::{Deserialize, Serialize};

use super::{sample_histogram, CountDistribution, EstimateOptions};
use crate::error::{AloeError, Result};
use crate::events::EventSystem;
use crate::stats::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceIdentity {
    /// `μ = Σ_s T_s`.
    pub mu: f64,
    /// Single-sample variance `μ̄ Σ_s T_s / s − μ²`.
    pub variance: f64,
    /// `μ² (E(S | S>0) E(1/S | S>0) − 1)` with the conditional means taken
    /// under `T`.
    pub product_moment: f64,
    /// `μ (μ̄ − μ)`, which bounds `variance` from above.
    pub upper_bound: f64,
}

fn validate_t(t: &[f64]) -> Result<f64> {
    if t.is_empty() {
        return Err(AloeError::InvalidDistribution("empty distribution".into()));
    }
    if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(AloeError::InvalidDistribution(
            "probabilities must be finite and non-negative".into(),
        ));
    }
    let mu: f64 = t.iter().sum();
    if mu > 1.0 + 1e-12 {
        return Err(AloeError::InvalidDistribution(format!(
            "probabilities sum to {mu} > 1"
        )));
    }
    if mu == 0.0 {
        return Err(AloeError::InvalidDistribution(
            "union has probability zero".into(),
        ));
    }
    Ok(mu)
}

/// Variance of one ALOE sample given `T_s = P(S = s)` for `s = 1..=J`
/// (`t[s-1]`) and the union bound `μ̄`.
///
/// When `μ̄` equals `Σ s T_s` to within 1e-12, the product-moment form is
/// checked against the direct form to the same relative tolerance.
pub fn theoretical_variance(t: &[f64], mu_bar: f64) -> Result<VarianceIdentity> {
    let mu = validate_t(t)?;
    if !(mu_bar > 0.0 && mu_bar.is_finite()) {
        return Err(AloeError::InvalidInput(format!(
            "union bound must be positive, got {mu_bar}"
        )));
    }
    let mut inv = 0.0;
    let mut mean = 0.0;
    for (i, &ts) in t.iter().enumerate() {
        let s = (i + 1) as f64;
        inv += ts / s;
        mean += ts * s;
    }
    let variance = mu_bar * inv - mu * mu;
    let product_moment = mu * mu * ((mean / mu) * (inv / mu) - 1.0);
    let scale = mu * mu + variance.abs();
    if (mean - mu_bar).abs() <= 1e-12 * mu_bar && (variance - product_moment).abs() > 1e-12 * scale
    {
        return Err(AloeError::InvalidDistribution(format!(
            "variance forms disagree: {variance} vs {product_moment}"
        )));
    }
    Ok(VarianceIdentity {
        mu,
        variance,
        product_moment,
        upper_bound: mu * (mu_bar - mu),
    })
}

/// `E(S)`, `E(1/S)` and their product for `S` on `1..=J` with `p[s-1] = P(S = s)`.
pub fn product_moment(p: &[f64]) -> Result<(f64, f64, f64)> {
    let support: Vec<f64> = (1..=p.len()).map(|s| s as f64).collect();
    interval_product_moment(&support, p)
}

/// `E(X)`, `E(1/X)` and their product for a positive discrete variable with
/// the given support points and probabilities (normalized internally).
pub fn interval_product_moment(support: &[f64], p: &[f64]) -> Result<(f64, f64, f64)> {
    if support.len() != p.len() {
        return Err(AloeError::InvalidDistribution(
            "support and probabilities differ in length".into(),
        ));
    }
    if support.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(AloeError::InvalidDistribution(
            "support must be positive".into(),
        ));
    }
    let total = validate_total(p)?;
    let mut m = 0.0;
    let mut inv = 0.0;
    for (&x, &w) in support.iter().zip(p) {
        m += w / total * x;
        inv += w / total / x;
    }
    Ok((m, inv, m * inv))
}

fn validate_total(p: &[f64]) -> Result<f64> {
    if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(AloeError::InvalidDistribution(
            "probabilities must be finite and non-negative".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(AloeError::InvalidDistribution(
            "probabilities sum to zero".into(),
        ));
    }
    Ok(total)
}

/// Largest possible `E(S) E(1/S)` for `S` on `1..=J`: `(J + 1/J + 2) / 4`,
/// attained by an even split between 1 and `J`.
pub fn lemma_bound(j: usize) -> Result<f64> {
    if j == 0 {
        return Err(AloeError::InvalidInput("J must be at least 1".into()));
    }
    Ok(interval_bound(1.0, j as f64))
}

/// Largest possible `E(X) E(1/X)` for `X` supported in `[a, b]`.
pub fn interval_bound(a: f64, b: f64) -> f64 {
    (a / b + b / a + 2.0) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub k: u32,
    /// Mean of `(μ̄/S)^k` over ALOE draws.
    pub empirical: f64,
    pub empirical_se: f64,
    /// `Σ_s T̂_s (μ̄/s)^(k-1)` from plain Monte Carlo counts.
    pub predicted: f64,
    pub predicted_se: f64,
}

impl MomentCheck {
    /// Difference in units of the combined standard error.
    pub fn z_score(&self) -> f64 {
        let se = (self.empirical_se.powi(2) + self.predicted_se.powi(2)).sqrt();
        if se == 0.0 {
            if self.empirical == self.predicted {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.empirical - self.predicted) / se
        }
    }
}

/// `E((μ̄/S)^k) = Σ_s T_s (μ̄/s)^(k-1)` for exact `T` (`t[s-1]`).
pub fn predicted_moment(t: &[f64], mu_bar: f64, k: u32) -> f64 {
    t.iter()
        .enumerate()
        .map(|(i, &ts)| ts * (mu_bar / (i + 1) as f64).powi(k as i32 - 1))
        .sum()
}

/// Compares the k-th moment of the ALOE sample value `μ̄/S` with the value
/// predicted from an independent plain Monte Carlo estimate of `T`.
pub fn moment_identity_check<E: EventSystem>(
    system: &E,
    k: u32,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
    counts: &CountDistribution,
) -> Result<MomentCheck> {
    if k == 0 {
        return Err(AloeError::InvalidInput(
            "moment order must be at least 1".into(),
        ));
    }
    let mu_bar = system.union_bound();
    let hist = sample_histogram(system, n, stream, options)?;
    let value = |s: usize| (mu_bar / s as f64).powi(k as i32);
    let nf = n as f64;
    let mut mean = 0.0;
    for (s, &c) in hist.iter().enumerate().skip(1) {
        mean += c as f64 / nf * value(s);
    }
    let mut ss = 0.0;
    for (s, &c) in hist.iter().enumerate().skip(1) {
        ss += c as f64 * (value(s) - mean).powi(2);
    }
    let empirical_se = if n > 1 {
        (ss / (nf - 1.0) / nf).sqrt()
    } else {
        0.0
    };

    let t = counts.t_hat();
    let predicted = predicted_moment(&t, mu_bar, k);
    let second: f64 = t
        .iter()
        .enumerate()
        .map(|(i, &ts)| ts * (mu_bar / (i + 1) as f64).powi(2 * (k as i32 - 1)))
        .sum();
    let predicted_se = ((second - predicted * predicted).max(0.0) / counts.n as f64).sqrt();
    Ok(MomentCheck {
        k,
        empirical: mean,
        empirical_se,
        predicted,
        predicted_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_forms_agree() {
        let t = [0.01, 0.004, 0.001];
        let mu_bar = 0.01 + 2.0 * 0.004 + 3.0 * 0.001;
        let v = theoretical_variance(&t, mu_bar).unwrap();
        assert!((v.variance - v.product_moment).abs() <= 1e-12 * v.variance);
        assert!(v.variance <= v.upper_bound);
        let direct = mu_bar * (0.01 + 0.002 + 0.001 / 3.0) - 0.015f64.powi(2);
        assert!((v.variance - direct).abs() < 1e-18);
    }

    #[test]
    fn disjoint_events_have_zero_variance() {
        let v = theoretical_variance(&[0.02], 0.02).unwrap();
        assert_eq!(v.variance, 0.0);
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(theoretical_variance(&[], 1.0).is_err());
        assert!(theoretical_variance(&[0.6, 0.6], 1.8).is_err());
        assert!(theoretical_variance(&[-0.1, 0.2], 0.3).is_err());
        assert!(theoretical_variance(&[0.0, 0.0], 0.1).is_err());
        assert!(theoretical_variance(&[0.1], 0.0).is_err());
    }

    #[test]
    fn lemma_bound_attained_by_extremes() {
        for j in [1usize, 2, 5, 100] {
            let mut p = vec![0.0; j];
            p[0] += 0.5;
            p[j - 1] += 0.5;
            let (_, _, prod) = product_moment(&p).unwrap();
            assert!((prod - lemma_bound(j).unwrap()).abs() < 1e-12);
        }
        assert_eq!(lemma_bound(1).unwrap(), 1.0);
        assert!(lemma_bound(0).is_err());
    }

    #[test]
    fn interval_generalization() {
        let (_, _, prod) = interval_product_moment(&[0.5, 3.0], &[1.0, 1.0]).unwrap();
        assert!((prod - interval_bound(0.5, 3.0)).abs() < 1e-12);
        assert!(interval_product_moment(&[0.0, 1.0], &[0.5, 0.5]).is_err());
        assert!(interval_product_moment(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn predicted_first_moment_is_mu() {
        let t = [0.3, 0.1];
        assert!((predicted_moment(&t, 0.5, 1) - 0.4).abs() < 1e-15);
        assert!((predicted_moment(&t, 0.5, 2) - (0.3 * 0.5 + 0.1 * 0.25)).abs() < 1e-15);
    }
}
