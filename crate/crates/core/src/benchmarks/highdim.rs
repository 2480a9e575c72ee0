//! Random half-spaces in high dimension with a common threshold chosen to hit
//! a target union bound.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AloeError, Result};
use crate::events::HalfSpaceProblem;
use crate::stats::{log_normal_cdf, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighDimSpec {
    pub d: usize,
    #[serde(rename = "J")]
    pub j: usize,
    /// The union bound is targeted at `10^(-target_log10_union_bound)`.
    pub target_log10_union_bound: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HighDimProblem {
    pub spec: HighDimSpec,
    #[serde(skip)]
    pub problem: HalfSpaceProblem,
    /// `10^(-target)` before rounding.
    pub target_union_bound: f64,
    /// The target rounded to two significant figures; `tau` solves for this.
    pub rounded_union_bound: f64,
    /// Threshold for the unrounded target.
    pub tau_unrounded: f64,
    pub tau: f64,
    /// `Σ Φ(-τ)` as realized by the generated problem.
    pub achieved_union_bound: f64,
}

const DIMENSIONS: [usize; 5] = [20, 50, 100, 200, 500];

impl HighDimSpec {
    /// Draws a spec from the random family: `d` from {20, 50, 100, 200, 500},
    /// `J` from {d/2, d, 2d} and the target exponent uniform on [4, 8].
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::sample_from(&DIMENSIONS, rng)
    }

    /// As [`HighDimSpec::sample`] with a caller-chosen dimension list.
    pub fn sample_from<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let d = dims[rng.random_range(0..dims.len())];
        let j = [d / 2, d, 2 * d][rng.random_range(0..3)];
        Self {
            d,
            j: j.max(1),
            target_log10_union_bound: rng.random_range(4.0..=8.0),
            seed: rng.random(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(AloeError::InvalidInput(format!(
                "dimension must be at least 2, got {}",
                self.d
            )));
        }
        if self.j < 1 {
            return Err(AloeError::InvalidInput(
                "need at least one constraint".into(),
            ));
        }
        if !self.target_log10_union_bound.is_finite() || self.target_log10_union_bound <= 0.0 {
            return Err(AloeError::InvalidInput(format!(
                "target exponent must be positive, got {}",
                self.target_log10_union_bound
            )));
        }
        Ok(())
    }
}

/// Rounds a positive number to two significant figures.
pub fn round_two_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exponent = x.abs().log10().floor() as i32 - 1;
    if exponent < 0 {
        let scale = 10f64.powi(-exponent);
        (x * scale).round() / scale
    } else {
        let scale = 10f64.powi(exponent);
        (x / scale).round() * scale
    }
}

/// Solves `J Φ(-τ) = bound` for `τ` by bisection on the log scale.
pub fn threshold_for_union_bound(j: usize, bound: f64) -> Result<f64> {
    if !(bound > 0.0 && bound < j as f64) {
        return Err(AloeError::InvalidInput(format!(
            "union bound {bound} unreachable with {j} events"
        )));
    }
    let target = bound.ln() - (j as f64).ln();
    let excess = |tau: f64| log_normal_cdf(-tau) - target;
    let (mut lo, mut hi) = (-40.0, 40.0);
    if excess(hi) > 0.0 || excess(lo) < 0.0 {
        return Err(AloeError::InvalidInput(format!(
            "union bound {bound} outside the solvable range"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Uniform random unit vector in `R^d`.
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn make_highdim(spec: &HighDimSpec) -> Result<HighDimProblem> {
    spec.validate()?;
    let mut rng = RandomStream::new(spec.seed, 0).rng();
    let normals: Vec<Vec<f64>> = (0..spec.j)
        .map(|_| random_unit_vector(spec.d, &mut rng))
        .collect();
    let target_union_bound = 10f64.powf(-spec.target_log10_union_bound);
    let rounded_union_bound = round_two_significant(target_union_bound);
    let tau_unrounded = threshold_for_union_bound(spec.j, target_union_bound)?;
    let tau = threshold_for_union_bound(spec.j, rounded_union_bound)?;
    let problem = HalfSpaceProblem::new(spec.d, normals, vec![tau; spec.j])?;
    let achieved_union_bound = problem.tail_probabilities().iter().sum();
    Ok(HighDimProblem {
        spec: *spec,
        problem,
        target_union_bound,
        rounded_union_bound,
        tau_unrounded,
        tau,
        achieved_union_bound,
    })
}

/// `1 - Π(1 - P_j)`, the union probability for independent events, computed
/// as `-expm1(Σ log1p(-P_j))`.
pub fn independent_reference(p: &[f64]) -> Result<f64> {
    let mut log_complement = 0.0;
    for &pj in p {
        if !(0.0..=1.0).contains(&pj) {
            return Err(AloeError::InvalidInput(format!(
                "probability {pj} outside [0, 1]"
            )));
        }
        if pj == 1.0 {
            return Ok(1.0);
        }
        log_complement += (-pj).ln_1p();
    }
    Ok(-log_complement.exp_m1())
}
