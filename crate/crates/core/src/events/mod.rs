//! Event systems: a finite family of events `H_1..H_J` under a base
//! distribution, with the three capabilities the estimator needs.
//!
//! Events whose probability is zero (or that were deliberately dropped) take
//! no part in sampling or counting. Their total probability is tracked so a
//! caller can add it back to a bound.

mod halfspace;
mod io;
mod whiten;

pub use halfspace::HalfSpaceProblem;
pub use io::{load_problem, parse_problem, ProblemFile};
pub use whiten::{
    whiten, whiten_rows, whiten_with_transform, GeneralGaussianSpec, RowWhitening, Whitening,
};

use crate::error::Result;
use crate::stats::StreamRng;

pub trait EventSystem: Sync {
    type Point: Clone + Send;

    /// Number of events `J`, including inactive ones.
    fn num_events(&self) -> usize;

    /// Per-event probabilities used for mixture weights; zero for inactive
    /// events.
    fn probabilities(&self) -> &[f64];

    /// A scratch point for [`EventSystem::draw_conditional`].
    fn new_point(&self) -> Self::Point;

    /// Replaces `point` with a draw from the base distribution conditioned on
    /// event `j` and returns `S`, the number of active events holding there.
    /// The result is at least 1.
    fn draw_conditional(
        &self,
        j: usize,
        rng: &mut StreamRng,
        point: &mut Self::Point,
    ) -> Result<usize>;

    /// `S(x)`: the number of active events containing `point`.
    fn count(&self, point: &Self::Point) -> usize;

    /// Indices of the active events containing `point`, appended to `out`.
    fn hits(&self, point: &Self::Point, out: &mut Vec<usize>);

    /// Number of events with positive sampling weight.
    fn num_active(&self) -> usize {
        self.probabilities().iter().filter(|&&p| p > 0.0).count()
    }

    /// Σ P_j over active events.
    fn union_bound(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    /// max_j P_j, a lower bound on the union probability.
    fn lower_bound(&self) -> f64 {
        self.probabilities().iter().copied().fold(0.0, f64::max)
    }

    /// Probability mass of events excluded from sampling.
    fn dropped_mass(&self) -> f64 {
        0.0
    }
}
