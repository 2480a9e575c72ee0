use log::warn;
use serde::Serialize;

use super::EventSystem;
use crate::error::{AloeError, Result};
use crate::stats::special::{log_normal_cdf, normal_sf};
use crate::stats::truncated::{dot, halfspace_conditional_into};
use crate::stats::StreamRng;

/// Tolerance on input normals before they are rescaled to unit length.
const NORM_TOLERANCE: f64 = 1e-6;

/// Union of half-spaces `{x : ω_jᵀx >= τ_j}` under `x ~ N(0, I_d)`.
///
/// Normals are stored row-major. An event is active when `Φ(-τ_j) > 0` and
/// `τ_j` does not exceed the drop threshold; inactive events are kept in the
/// description but excluded from the mixture, the union bound and `S(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct HalfSpaceProblem {
    dim: usize,
    normals: Vec<f64>,
    thresholds: Vec<f64>,
    tail_probabilities: Vec<f64>,
    #[serde(skip)]
    log_tails: Vec<f64>,
    weights: Vec<f64>,
    drop_threshold: Option<f64>,
    #[serde(skip)]
    active: Vec<usize>,
    #[serde(skip)]
    active_normals: Vec<f64>,
    #[serde(skip)]
    active_thresholds: Vec<f64>,
}

impl HalfSpaceProblem {
    /// Builds a problem from `J` normals of length `dim` and `J` thresholds.
    /// Normals within 1e-6 of unit length are rescaled; others are rejected.
    pub fn new(dim: usize, normals: Vec<Vec<f64>>, thresholds: Vec<f64>) -> Result<Self> {
        if normals.len() != thresholds.len() {
            return Err(AloeError::InvalidInput(format!(
                "{} normals but {} thresholds",
                normals.len(),
                thresholds.len()
            )));
        }
        let mut flat = Vec::with_capacity(normals.len() * dim);
        for (j, row) in normals.iter().enumerate() {
            if row.len() != dim {
                return Err(AloeError::InvalidInput(format!(
                    "normal {j} has length {}, expected {dim}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(dim, flat, thresholds)
    }

    /// Same as [`HalfSpaceProblem::new`] with normals given row-major.
    pub fn from_flat(dim: usize, mut normals: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(AloeError::InvalidInput(
                "dimension must be at least 1".into(),
            ));
        }
        if thresholds.is_empty() {
            return Err(AloeError::InvalidInput(
                "at least one event is required".into(),
            ));
        }
        if normals.len() != dim * thresholds.len() {
            return Err(AloeError::InvalidInput(format!(
                "expected {} normal entries, got {}",
                dim * thresholds.len(),
                normals.len()
            )));
        }
        for (j, row) in normals.chunks_mut(dim).enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(AloeError::InvalidInput(format!(
                    "normal {j} has non-finite entries"
                )));
            }
            let norm = dot(row, row).sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(AloeError::InvalidInput(format!(
                    "normal {j} has length {norm}; unit length required"
                )));
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        if let Some(j) = thresholds.iter().position(|t| t.is_nan()) {
            return Err(AloeError::InvalidInput(format!("threshold {j} is NaN")));
        }
        let tail_probabilities: Vec<f64> = thresholds.iter().map(|&t| normal_sf(t)).collect();
        let log_tails = thresholds.iter().map(|&t| log_normal_cdf(-t)).collect();
        let mut problem = Self {
            dim,
            normals,
            thresholds,
            weights: tail_probabilities.clone(),
            tail_probabilities,
            log_tails,
            drop_threshold: None,
            active: Vec::new(),
            active_normals: Vec::new(),
            active_thresholds: Vec::new(),
        };
        let underflowed = problem.refresh_active();
        if underflowed > 0 {
            warn!(
                "{underflowed} event(s) have probability below double precision and are excluded"
            );
        }
        Ok(problem)
    }

    /// Excludes events with `τ_j > threshold` from sampling and counting.
    pub fn with_drop_threshold(mut self, threshold: f64) -> Self {
        self.drop_threshold = Some(threshold);
        self.refresh_active();
        self
    }

    fn refresh_active(&mut self) -> usize {
        let d = self.dim;
        self.active.clear();
        self.active_normals.clear();
        self.active_thresholds.clear();
        let mut underflowed = 0;
        for j in 0..self.thresholds.len() {
            let tau = self.thresholds[j];
            let dropped = self.drop_threshold.is_some_and(|t| tau > t);
            let usable = self.tail_probabilities[j] > 0.0 && !dropped;
            if self.tail_probabilities[j] == 0.0 && tau.is_finite() {
                underflowed += 1;
            }
            self.weights[j] = if usable {
                self.tail_probabilities[j]
            } else {
                0.0
            };
            if usable {
                self.active.push(j);
                self.active_normals
                    .extend_from_slice(&self.normals[j * d..(j + 1) * d]);
                self.active_thresholds.push(tau);
            }
        }
        underflowed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normal(&self, j: usize) -> &[f64] {
        &self.normals[j * self.dim..(j + 1) * self.dim]
    }

    pub fn normals(&self) -> impl Iterator<Item = &[f64]> {
        self.normals.chunks(self.dim)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// `Φ(-τ_j)` for every event, active or not.
    pub fn tail_probabilities(&self) -> &[f64] {
        &self.tail_probabilities
    }

    pub fn active_events(&self) -> &[usize] {
        &self.active
    }

    pub fn drop_threshold(&self) -> Option<f64> {
        self.drop_threshold
    }

    /// Whether `x` lies in `H_j` (boundary included).
    pub fn contains(&self, j: usize, x: &[f64]) -> bool {
        dot(self.normal(j), x) >= self.thresholds[j]
    }

    /// `S(x)` as one pass of a dense matrix-vector product over the active
    /// normals followed by threshold comparisons.
    pub fn event_count(&self, x: &[f64]) -> usize {
        debug_assert_eq!(x.len(), self.dim);
        self.active_normals
            .chunks_exact(self.dim)
            .zip(&self.active_thresholds)
            .filter(|(row, &tau)| dot(row, x) >= tau)
            .count()
    }

    /// Draws `x ~ N(0, I) | x ∈ H_j` and returns it with `S(x)`.
    pub fn conditional_draw(&self, j: usize, rng: &mut StreamRng) -> Result<(Vec<f64>, usize)> {
        let mut x = vec![0.0; self.dim];
        let s = self.draw_conditional(j, rng, &mut x)?;
        Ok((x, s))
    }
}

impl EventSystem for HalfSpaceProblem {
    type Point = Vec<f64>;

    fn num_events(&self) -> usize {
        self.thresholds.len()
    }

    fn probabilities(&self) -> &[f64] {
        &self.weights
    }

    fn new_point(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn draw_conditional(
        &self,
        j: usize,
        rng: &mut StreamRng,
        point: &mut Vec<f64>,
    ) -> Result<usize> {
        if j >= self.thresholds.len() {
            return Err(AloeError::InvalidInput(format!(
                "event index {j} out of range"
            )));
        }
        let tau = self.thresholds[j];
        if self.tail_probabilities[j] == 0.0 {
            return Err(AloeError::Unsampleable { tau });
        }
        point.resize(self.dim, 0.0);
        let omega = self.normal(j);
        halfspace_conditional_into(omega, tau, self.log_tails[j], rng, point);
        let s = self.event_count(point);
        // An inactive conditioning event is not itself counted.
        Ok(if self.weights[j] > 0.0 { s } else { s.max(1) })
    }

    fn count(&self, point: &Vec<f64>) -> usize {
        self.event_count(point)
    }

    fn hits(&self, point: &Vec<f64>, out: &mut Vec<usize>) {
        for (k, (row, &tau)) in self
            .active_normals
            .chunks_exact(self.dim)
            .zip(&self.active_thresholds)
            .enumerate()
        {
            if dot(row, point) >= tau {
                out.push(self.active[k]);
            }
        }
    }

    fn num_active(&self) -> usize {
        self.active.len()
    }

    fn dropped_mass(&self) -> f64 {
        self.tail_probabilities
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w == 0.0)
            .map(|(&p, _)| p)
            .fold(0.0, |a, p| a + p)
    }
}
