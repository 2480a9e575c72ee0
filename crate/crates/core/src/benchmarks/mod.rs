//! Test families with known or tightly bracketed answers: the circumscribed
//! polygon in the plane and random half-spaces in high dimension.

mod highdim;
mod polygon;

pub use highdim::{
    independent_reference, make_highdim, random_unit_vector, round_two_significant,
    threshold_for_union_bound, HighDimProblem, HighDimSpec,
};
pub use polygon::{
    gap_area_for_angles, make_polygon, polygon_reference, primes_up_to, AngleSet, PolygonReference,
    PolygonSpec,
};

use serde::Serialize;

use crate::error::Result;
use crate::estimator::{estimate_with, AloeEstimate, EstimateOptions};
use crate::stats::RandomStream;

/// Summary of repeated ALOE runs on one polygon.
#[derive(Debug, Clone, Serialize)]
pub struct PolygonRow {
    pub tau: f64,
    /// Mean of the per-replication estimates.
    pub mu_hat: f64,
    /// Standard error of that mean, from the spread across replications.
    pub se: f64,
    pub mu_bar: f64,
    pub reference_lo: f64,
    pub reference_hi: f64,
    /// Mean of `(μ̂_r/μ - 1)²` over replications.
    pub rel_mse: f64,
    /// `μ` used for `rel_mse`.
    pub reference_mu: f64,
    /// True when `reference_mu` is the sandwich midpoint.
    pub midpoint_reference: bool,
    pub reps: usize,
    pub n: u64,
    /// Per-replication estimates.
    pub rep_estimates: Vec<f64>,
    #[serde(skip)]
    pub runs: Vec<AloeEstimate>,
}

/// Replication `r` uses `stream.substream(r)`.
pub fn run_polygon(
    spec: &PolygonSpec,
    n: u64,
    reps: usize,
    stream: RandomStream,
    options: &EstimateOptions,
) -> Result<PolygonRow> {
    let problem = make_polygon(spec)?;
    let reference = polygon_reference(spec)?;
    let (mu, midpoint) = reference.scoring_value(spec.tau);
    let runs: Vec<AloeEstimate> = (0..reps as u64)
        .map(|r| estimate_with(&problem, n, stream.substream(r), options))
        .collect::<Result<_>>()?;
    let (mean, se) = replicate_mean_se(runs.iter().map(|e| e.mu_hat));
    let rel_mse = runs
        .iter()
        .map(|e| (e.mu_hat / mu - 1.0).powi(2))
        .sum::<f64>()
        / reps as f64;
    Ok(PolygonRow {
        tau: spec.tau,
        mu_hat: mean,
        se,
        mu_bar: runs.first().map_or(0.0, |e| e.union_bound),
        reference_lo: reference.lower,
        reference_hi: reference.upper,
        rel_mse,
        reference_mu: mu,
        midpoint_reference: midpoint,
        reps,
        n,
        rep_estimates: runs.iter().map(|e| e.mu_hat).collect(),
        runs,
    })
}

fn replicate_mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct HighDimRow {
    pub problem: HighDimProblem,
    pub estimate: AloeEstimate,
    /// `1 - Π(1 - P_j)`.
    pub independent: f64,
    /// `μ̂ / μ̄`.
    pub ratio_to_union_bound: f64,
}

pub fn run_highdim(
    spec: &HighDimSpec,
    n: u64,
    stream: RandomStream,
    options: &EstimateOptions,
) -> Result<HighDimRow> {
    let problem = make_highdim(spec)?;
    let estimate = estimate_with(&problem.problem, n, stream, options)?;
    let independent = independent_reference(problem.problem.tail_probabilities())?;
    Ok(HighDimRow {
        ratio_to_union_bound: estimate.mu_hat / estimate.union_bound,
        problem,
        estimate,
        independent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_run_is_reproducible_and_sandwiched() {
        let spec = PolygonSpec::full(36, 3.0);
        let stream = RandomStream::new(10, 0);
        let a = run_polygon(&spec, 500, 5, stream, &EstimateOptions::default()).unwrap();
        let b = run_polygon(&spec, 500, 5, stream, &EstimateOptions::default()).unwrap();
        assert_eq!(a.mu_hat, b.mu_hat);
        assert!(a.midpoint_reference);
        assert!(a.mu_hat + 4.0 * a.se >= a.reference_lo && a.mu_hat - 4.0 * a.se <= a.reference_hi);
        for e in &a.runs {
            assert!(e.contains_estimate());
        }
    }

    #[test]
    fn highdim_run_is_near_union_bound() {
        let spec = HighDimSpec {
            d: 50,
            j: 25,
            target_log10_union_bound: 6.0,
            seed: 4,
        };
        let row = run_highdim(
            &spec,
            1000,
            RandomStream::new(1, 0),
            &EstimateOptions::default(),
        )
        .unwrap();
        assert!(row.ratio_to_union_bound > 0.98 && row.ratio_to_union_bound <= 1.0);
        assert!((row.independent / row.estimate.union_bound - 1.0).abs() < 1e-5);
    }
}
