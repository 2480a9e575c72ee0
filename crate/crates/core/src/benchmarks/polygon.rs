//! The complement of a polygon circumscribed around the circle of radius `τ`
//! in the plane, with sandwich bounds on its Gaussian probability.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{AloeError, Result};
use crate::events::HalfSpaceProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleSet {
    /// Angles `2πj/J` for `j = 1..J`.
    #[default]
    Full,
    /// Angles `2πp/360` for every prime `p < 360`; requires `J = 360`.
    Prime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    #[serde(rename = "J")]
    pub j: usize,
    pub tau: f64,
    #[serde(default)]
    pub angle_set: AngleSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonReference {
    /// `exp(-τ²/2)`, the probability outside the inscribed circle.
    pub upper: f64,
    /// `upper · (1 - G/(2π))`.
    pub lower: f64,
    /// Area between the polygon and the inscribed circle.
    pub gap_area: f64,
}

impl PolygonReference {
    /// Value used as the truth when scoring estimates, and whether it is the
    /// sandwich midpoint (`τ < 4`) rather than the upper bound.
    pub fn scoring_value(&self, tau: f64) -> (f64, bool) {
        if tau >= 4.0 {
            (self.upper, false)
        } else {
            (0.5 * (self.lower + self.upper), true)
        }
    }
}

/// Primes up to and including `n`, by the sieve of Eratosthenes.
pub fn primes_up_to(n: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i);
        let mut k = i * i;
        while k <= n {
            composite[k] = true;
            k += i;
        }
    }
    primes
}

impl PolygonSpec {
    pub fn full(j: usize, tau: f64) -> Self {
        Self {
            j,
            tau,
            angle_set: AngleSet::Full,
        }
    }

    pub fn prime(tau: f64) -> Self {
        Self {
            j: 360,
            tau,
            angle_set: AngleSet::Prime,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.j < 3 {
            return Err(AloeError::InvalidInput(format!(
                "a polygon needs at least 3 sides, got {}",
                self.j
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(AloeError::InvalidInput(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.angle_set == AngleSet::Prime && self.j != 360 {
            return Err(AloeError::InvalidInput(
                "the prime-angle polygon requires J = 360".into(),
            ));
        }
        Ok(())
    }

    /// Angles of the outward normals, in increasing order.
    pub fn angles(&self) -> Vec<f64> {
        let steps: Vec<usize> = match self.angle_set {
            AngleSet::Full => (1..=self.j).collect(),
            AngleSet::Prime => primes_up_to(self.j - 1),
        };
        steps
            .into_iter()
            .map(|k| 2.0 * PI * k as f64 / self.j as f64)
            .collect()
    }
}

pub fn make_polygon(spec: &PolygonSpec) -> Result<HalfSpaceProblem> {
    spec.validate()?;
    let angles = spec.angles();
    let normals: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.sin(), a.cos()]).collect();
    let thresholds = vec![spec.tau; normals.len()];
    HalfSpaceProblem::new(2, normals, thresholds)
}

pub fn polygon_reference(spec: &PolygonSpec) -> Result<PolygonReference> {
    spec.validate()?;
    let tau2 = spec.tau * spec.tau;
    let gap_area = match spec.angle_set {
        AngleSet::Full => (spec.j as f64 * (PI / spec.j as f64).tan() - PI) * tau2,
        AngleSet::Prime => gap_area_for_angles(&spec.angles(), spec.tau)?,
    };
    let upper = (-0.5 * tau2).exp();
    Ok(PolygonReference {
        upper,
        lower: (upper * (1.0 - gap_area / (2.0 * PI))).max(0.0),
        gap_area,
    })
}

/// Area between a circumscribed polygon with outward normals at `angles`
/// (sorted, in radians) and its inscribed circle of radius `tau`. Each pair of
/// adjacent normals separated by `Δ` contributes a kite of area
/// `τ² tan(Δ/2)`.
pub fn gap_area_for_angles(angles: &[f64], tau: f64) -> Result<f64> {
    if angles.len() < 3 {
        return Err(AloeError::InvalidInput("need at least 3 normals".into()));
    }
    let mut total = 0.0;
    for k in 0..angles.len() {
        let next = if k + 1 < angles.len() {
            angles[k + 1]
        } else {
            angles[0] + 2.0 * PI
        };
        let delta = next - angles[k];
        if !(delta > 0.0 && delta < PI) {
            return Err(AloeError::InvalidInput(
                "normals leave the polygon unbounded".into(),
            ));
        }
        total += (0.5 * delta).tan();
    }
    Ok((total - PI) * tau * tau)
}
