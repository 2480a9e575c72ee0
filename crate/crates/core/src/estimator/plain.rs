//! Plain Monte Carlo under the base distribution, used for comparison and to
//! estimate the distribution of `S` directly.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EstimateOptions;
use crate::error::{AloeError, Result};
use crate::events::HalfSpaceProblem;
use crate::stats::{RandomStream, SampleCursor};

/// Histogram of `S(x)` for `x ~ N(0, I)`; `counts[s]` for `s = 0..=J`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub counts: Vec<u64>,
    pub n: u64,
}

impl CountDistribution {
    /// Estimated union probability `P(S > 0)`.
    pub fn union_probability(&self) -> f64 {
        (self.n - self.counts[0]) as f64 / self.n as f64
    }

    /// Binomial standard error of [`CountDistribution::union_probability`].
    pub fn union_se(&self) -> f64 {
        let p = self.union_probability();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// `T̂_s = P̂(S = s)` for `s = 1..=J`.
    pub fn t_hat(&self) -> Vec<f64> {
        self.counts[1..]
            .iter()
            .map(|&c| c as f64 / self.n as f64)
            .collect()
    }

    /// `Σ_s s·T̂_s`, which estimates `μ̄`.
    pub fn mean_count(&self) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(s, &c)| s as f64 * c as f64)
            .sum::<f64>()
            / self.n as f64
    }
}

pub fn plain_monte_carlo(
    problem: &HalfSpaceProblem,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
) -> Result<CountDistribution> {
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
    let bins = problem.active_events().len() + 1;
    let d = problem.dim();
    let cursor = SampleCursor::new(&stream);
    let block = options.block_size as u64;
    let parts: Vec<Vec<u64>> = (0..n.div_ceil(block))
        .into_par_iter()
        .map(|b| {
            let mut hist = vec![0u64; bins];
            let mut x = vec![0.0; d];
            for i in b * block..((b + 1) * block).min(n) {
                let mut rng = cursor.at(i);
                for xi in x.iter_mut() {
                    *xi = rng.sample(StandardNormal);
                }
                hist[problem.event_count(&x)] += 1;
            }
            hist
        })
        .collect();
    let mut counts = vec![0u64; bins];
    for h in parts {
        for (acc, c) in counts.iter_mut().zip(h) {
            *acc += c;
        }
    }
    Ok(CountDistribution { counts, n })
}
