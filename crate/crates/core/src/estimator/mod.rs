//! The ALOE estimator: pick event `j` with probability `P_j / μ̄`, draw
//! `x ~ q_j`, and average `μ̄ / S(x)`.
//!
//! Samples are processed in blocks on the rayon pool. Sample `i` always reads
//! from its own window of the random stream, and the estimate is assembled
//! from the integer histogram of `S`, so results do not depend on block size or
//! worker count.

mod mixture;
mod plain;
pub mod theory;

pub use mixture::{estimate_general_mixture, estimate_subevent, MixtureWeights, WeightedEstimate};
pub use plain::{plain_monte_carlo, CountDistribution};
pub use theory::{
    interval_bound, interval_product_moment, lemma_bound, moment_identity_check, predicted_moment,
    product_moment, theoretical_variance, MomentCheck, VarianceIdentity,
};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AloeError, Result};
use crate::events::EventSystem;
use crate::stats::{DiscreteSampler, RandomStream, SampleCursor};

pub const DEFAULT_BLOCK_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateOptions {
    /// Samples per work unit.
    pub block_size: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AloeEstimate {
    pub mu_hat: f64,
    pub se: f64,
    pub n: u64,
    /// μ̄ = Σ P_j over active events.
    pub union_bound: f64,
    /// max_j P_j.
    pub lower_bound: f64,
    /// `[μ̄/J, μ̄]`, which always contains `mu_hat`.
    pub hard_range: [f64; 2],
    /// Counts of `S = 1..J`; entry `s - 1` counts samples with `S = s`.
    pub s_histogram: Vec<u64>,
    pub var_bound_theorem: f64,
    pub var_bound_lemma: f64,
    pub cv_bound: f64,
    pub seed: u64,
    pub stream_id: u64,
    /// Number of active events `J`.
    pub num_events: usize,
    /// Probability of events left out of the mixture.
    pub dropped_mass: f64,
    /// All samples had the same `S`, so `se` is exactly 0.
    pub degenerate_se: bool,
}

impl AloeEstimate {
    /// Fraction of samples where two or more events held.
    pub fn multi_event_fraction(&self) -> f64 {
        let first = self.s_histogram.first().copied().unwrap_or(0);
        (self.n - first) as f64 / self.n as f64
    }

    /// `se / mu_hat`.
    pub fn relative_se(&self) -> f64 {
        self.se / self.mu_hat
    }

    /// Empirical distribution of `S` under the sampler.
    pub fn s_frequencies(&self) -> Vec<f64> {
        self.s_histogram
            .iter()
            .map(|&c| c as f64 / self.n as f64)
            .collect()
    }

    /// Adds the mass of dropped events to the estimate and both bounds, giving
    /// a conservative result for the full event set.
    pub fn with_dropped_mass_added(mut self) -> Self {
        let extra = self.dropped_mass;
        self.mu_hat += extra;
        self.union_bound += extra;
        self.hard_range = [self.hard_range[0] + extra, self.hard_range[1] + extra];
        self.dropped_mass = 0.0;
        self
    }

    pub fn contains_estimate(&self) -> bool {
        self.hard_range[0] <= self.mu_hat && self.mu_hat <= self.hard_range[1]
    }
}

pub fn estimate<E: EventSystem>(system: &E, n: u64, stream: RandomStream) -> Result<AloeEstimate> {
    estimate_with(system, n, stream, &EstimateOptions::default())
}

pub fn estimate_with<E: EventSystem>(
    system: &E,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
) -> Result<AloeEstimate> {
    let histogram = sample_histogram(system, n, stream, options)?;
    Ok(summarize(system, &histogram, n, stream))
}

/// Raw histogram of `S` over `n` sampler draws, indexed by `s` (entry 0 is
/// always 0).
pub fn sample_histogram<E: EventSystem>(
    system: &E,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
) -> Result<Vec<u64>> {
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
    let sampler = mixture_sampler(system)?;
    let bins = system.num_active() + 1;
    let cursor = SampleCursor::new(&stream);
    let block = options.block_size as u64;
    let blocks = n.div_ceil(block);
    let partial: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut hist = vec![0u64; bins];
            let mut point = system.new_point();
            for i in b * block..((b + 1) * block).min(n) {
                let mut rng = cursor.at(i);
                let j = sampler.draw(&mut rng);
                let s = system.draw_conditional(j, &mut rng, &mut point)?;
                hist[s.min(bins - 1)] += 1;
            }
            Ok(hist)
        })
        .collect::<Result<_>>()?;
    let mut histogram = vec![0u64; bins];
    for h in partial {
        for (acc, c) in histogram.iter_mut().zip(h) {
            *acc += c;
        }
    }
    Ok(histogram)
}

pub(crate) fn mixture_sampler<E: EventSystem>(system: &E) -> Result<DiscreteSampler> {
    let mu_bar = system.union_bound();
    if !(mu_bar > 0.0) {
        return Err(AloeError::EmptyMixture);
    }
    if !mu_bar.is_finite() {
        return Err(AloeError::InvalidInput("union bound is not finite".into()));
    }
    DiscreteSampler::new(system.probabilities())
}

fn summarize<E: EventSystem>(
    system: &E,
    histogram: &[u64],
    n: u64,
    stream: RandomStream,
) -> AloeEstimate {
    let mu_bar = system.union_bound();
    let mu_lower = system.lower_bound();
    let j = system.num_active();
    let nf = n as f64;

    let mut inv_sum = 0.0;
    for (s, &c) in histogram.iter().enumerate().skip(1) {
        inv_sum += c as f64 / s as f64;
    }
    let hard_range = [mu_bar / j as f64, mu_bar];
    let raw = mu_bar * (inv_sum / nf);
    // Only rounding can push the mean of values in [μ̄/J, μ̄] outside that range.
    debug_assert!(raw >= hard_range[0] * (1.0 - 1e-12) && raw <= hard_range[1] * (1.0 + 1e-12));
    let mu_hat = raw.clamp(hard_range[0], hard_range[1]);

    let distinct = histogram.iter().filter(|&&c| c > 0).count();
    let degenerate_se = distinct <= 1;
    let se = if degenerate_se || n < 2 {
        0.0
    } else {
        let mut ss = 0.0;
        for (s, &c) in histogram.iter().enumerate().skip(1) {
            if c > 0 {
                let dev = mu_bar / s as f64 - mu_hat;
                ss += c as f64 * dev * dev;
            }
        }
        (ss / (nf - 1.0) / nf).sqrt()
    };
    if degenerate_se {
        warn!(
            "every sample had S = {}; the standard error is 0",
            first_observed(histogram)
        );
    }

    let jf = j as f64;
    let cv_bound = (mu_bar / mu_lower - 1.0)
        .max(0.0)
        .sqrt()
        .min((jf - 1.0).sqrt())
        / nf.sqrt();
    AloeEstimate {
        mu_hat,
        se,
        n,
        union_bound: mu_bar,
        lower_bound: mu_lower,
        hard_range,
        s_histogram: histogram[1..].to_vec(),
        var_bound_theorem: mu_hat * (mu_bar - mu_hat) / nf,
        var_bound_lemma: mu_hat * mu_hat * (jf + 1.0 / jf - 2.0) / (4.0 * nf),
        cv_bound,
        seed: stream.seed,
        stream_id: stream.stream_id,
        num_events: j,
        dropped_mass: system.dropped_mass(),
        degenerate_se,
    }
}

fn first_observed(histogram: &[u64]) -> usize {
    histogram.iter().position(|&c| c > 0).unwrap_or(0)
}
