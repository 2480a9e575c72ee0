use rand::Rng;

use crate::error::{AloeError, Result};

/// Draws index `j` with probability `w_j / Σ w`, by binary search over
/// cumulative weights.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl DiscreteSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(AloeError::InvalidWeights("no weights given".into()));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        let mut last_positive = None;
        for (j, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(AloeError::InvalidWeights(format!(
                    "weight {j} is {w}; weights must be finite and nonnegative"
                )));
            }
            if w > 0.0 {
                last_positive = Some(j);
            }
            acc += w;
            cumulative.push(acc);
        }
        let last_positive = last_positive
            .ok_or_else(|| AloeError::InvalidWeights("all weights are zero".into()))?;
        Ok(Self {
            cumulative,
            last_positive,
        })
    }

    pub fn total(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn probability(&self, j: usize) -> f64 {
        let lo = if j == 0 { 0.0 } else { self.cumulative[j - 1] };
        (self.cumulative[j] - lo) / self.total()
    }

    /// Index of the first cumulative weight strictly above `u·total`, which
    /// skips zero-weight slots.
    pub fn index_for(&self, u: f64) -> usize {
        let target = u * self.total();
        let j = self.cumulative.partition_point(|&c| c <= target);
        j.min(self.last_positive)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index_for(rng.random::<f64>())
    }
}
