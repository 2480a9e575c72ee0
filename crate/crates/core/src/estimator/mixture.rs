//! Estimators that reuse the ALOE conditional draws with other per-sample
//! values: the probability of a sub-event of the union, and a union estimate
//! under arbitrary mixture weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mixture_sampler, EstimateOptions};
use crate::error::{AloeError, Result};
use crate::events::EventSystem;
use crate::stats::{DiscreteSampler, RandomStream, SampleCursor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEstimate {
    pub estimate: f64,
    pub se: f64,
    pub n: u64,
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Welford {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * w,
        }
    }

    fn finish(self) -> WeightedEstimate {
        let se = if self.n < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
        };
        WeightedEstimate {
            estimate: self.mean,
            se,
            n: self.n,
        }
    }
}

/// Runs `n` draws in blocks, merging block accumulators in block order so the
/// result does not depend on the worker count.
fn accumulate<E, F>(
    system: &E,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
    value: F,
) -> Result<Welford>
where
    E: EventSystem,
    F: Fn(&mut crate::stats::StreamRng, &mut E::Point, &mut Vec<usize>) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(AloeError::InvalidInput(
            "sample count must be at least 1".into(),
        ));
    }
    if options.block_size == 0 {
        return Err(AloeError::InvalidInput(
            "block size must be at least 1".into(),
        ));
    }
    let cursor = SampleCursor::new(&stream);
    let block = options.block_size as u64;
    let blocks = n.div_ceil(block);
    let parts: Vec<Welford> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Welford::default();
            let mut point = system.new_point();
            let mut hits = Vec::new();
            for i in b * block..((b + 1) * block).min(n) {
                let mut rng = cursor.at(i);
                acc.push(value(&mut rng, &mut point, &mut hits)?);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(Welford::default(), Welford::merge))
}

/// Estimates `P(x ∈ F)` for a sub-event `F` of the union, given through its
/// indicator (or any bounded function) `f`, by averaging `μ̄ f(x) / S(x)` over
/// the ALOE draws. Draw `i` is the same point `estimate` would use on the same
/// stream.
pub fn estimate_subevent<E, F>(
    system: &E,
    f: F,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
) -> Result<WeightedEstimate>
where
    E: EventSystem,
    F: Fn(&E::Point) -> f64 + Sync,
{
    let sampler = mixture_sampler(system)?;
    let mu_bar = system.union_bound();
    let acc = accumulate(system, n, stream, options, |rng, point, _| {
        let j = sampler.draw(rng);
        let s = system.draw_conditional(j, rng, point)?;
        Ok(mu_bar * f(point) / s as f64)
    })?;
    Ok(acc.finish())
}

/// Mixture weights `α` over the events, used for the general mixture
/// estimator.
#[derive(Debug, Clone)]
pub struct MixtureWeights {
    alpha: Vec<f64>,
    sampler: DiscreteSampler,
}

impl MixtureWeights {
    /// `alpha` must be non-negative and sum to 1 (within 1e-9); it is
    /// renormalized exactly afterwards.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(AloeError::InvalidWeights("no weights given".into()));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(AloeError::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AloeError::InvalidWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let alpha: Vec<f64> = alpha.iter().map(|a| a / total).collect();
        let sampler = DiscreteSampler::new(&alpha)?;
        Ok(Self { alpha, sampler })
    }

    /// `α_j = P_j / μ̄`, under which the general estimator is ALOE.
    pub fn aloe<E: EventSystem>(system: &E) -> Result<Self> {
        let mu_bar = system.union_bound();
        if !(mu_bar > 0.0) {
            return Err(AloeError::EmptyMixture);
        }
        Self::new(system.probabilities().iter().map(|p| p / mu_bar).collect())
    }

    /// Equal weight on every active event.
    pub fn uniform<E: EventSystem>(system: &E) -> Result<Self> {
        let j = system.num_active();
        if j == 0 {
            return Err(AloeError::EmptyMixture);
        }
        Self::new(
            system
                .probabilities()
                .iter()
                .map(|&p| if p > 0.0 { 1.0 / j as f64 } else { 0.0 })
                .collect(),
        )
    }

    pub fn weights(&self) -> &[f64] {
        &self.alpha
    }
}

/// Estimates the union probability with draws from `Σ α_j q_j`. Each sample
/// contributes `1 / Σ_{ℓ: x ∈ H_ℓ} α_ℓ / P_ℓ`.
pub fn estimate_general_mixture<E: EventSystem>(
    system: &E,
    weights: &MixtureWeights,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
) -> Result<WeightedEstimate> {
    let probs = system.probabilities();
    if weights.alpha.len() != probs.len() {
        return Err(AloeError::InvalidWeights(format!(
            "{} weights for {} events",
            weights.alpha.len(),
            probs.len()
        )));
    }
    if let Some(j) = (0..probs.len()).find(|&j| weights.alpha[j] > 0.0 && !(probs[j] > 0.0)) {
        return Err(AloeError::InvalidWeights(format!(
            "event {j} has zero probability but positive weight"
        )));
    }
    let acc = accumulate(system, n, stream, options, |rng, point, hits| {
        let j = weights.sampler.draw(rng);
        system.draw_conditional(j, rng, point)?;
        hits.clear();
        system.hits(point, hits);
        let denom: f64 = hits.iter().map(|&l| weights.alpha[l] / probs[l]).sum();
        Ok(1.0 / denom)
    })?;
    Ok(acc.finish())
}
