use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AloeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusRole {
    Fixed,
    Random,
    Slack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: i64,
    pub role: BusRole,
    /// Lower power limit; absent or null means unbounded.
    #[serde(default)]
    pub p_min: Option<f64>,
    #[serde(default)]
    pub p_max: Option<f64>,
    /// Mean injection. Ignored for the slack bus.
    #[serde(default)]
    pub eta: f64,
}

impl Bus {
    pub fn lower(&self) -> f64 {
        self.p_min.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper(&self) -> f64 {
        self.p_max.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: i64,
    pub to: i64,
    /// Susceptance, positive.
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub busses: Vec<Bus>,
    pub lines: Vec<Line>,
    /// Covariance of the random injections, in ascending bus-id order.
    pub sigma: Vec<Vec<f64>>,
    /// Phase-difference limit shared by every line, in radians.
    pub theta_bar: f64,
}

impl GridCase {
    pub fn from_json(json: &str) -> Result<Self> {
        let case: GridCase = serde_json::from_str(json)?;
        case.validate()?;
        Ok(case)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn num_random(&self) -> usize {
        self.busses
            .iter()
            .filter(|b| b.role == BusRole::Random)
            .count()
    }

    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        let n = self.sigma.len();
        DMatrix::from_fn(n, n, |i, j| self.sigma[i][j])
    }

    /// Structural checks: unique ids, one slack bus, at least one random bus,
    /// valid lines, consistent limits and a square covariance of the right
    /// size. Connectivity and definiteness are checked during assembly.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(AloeError::InvalidInput(msg));
        if self.busses.len() < 2 {
            return invalid("a grid needs at least two busses".into());
        }
        let mut ids = HashSet::new();
        for b in &self.busses {
            if !ids.insert(b.id) {
                return invalid(format!("duplicate bus id {}", b.id));
            }
            if !b.eta.is_finite() {
                return invalid(format!("bus {} has a non-finite mean", b.id));
            }
            if b.p_min.is_some_and(f64::is_nan) || b.p_max.is_some_and(f64::is_nan) {
                return invalid(format!("bus {} has a NaN limit", b.id));
            }
            if b.lower() > b.upper() {
                return invalid(format!("bus {} has p_min > p_max", b.id));
            }
        }
        let slack = self
            .busses
            .iter()
            .filter(|b| b.role == BusRole::Slack)
            .count();
        if slack != 1 {
            return invalid(format!("exactly one slack bus is required, found {slack}"));
        }
        let nr = self.num_random();
        if nr == 0 {
            return invalid("at least one random bus is required".into());
        }
        if self.lines.is_empty() {
            return invalid("a grid needs at least one line".into());
        }
        for (m, l) in self.lines.iter().enumerate() {
            if !ids.contains(&l.from) || !ids.contains(&l.to) {
                return invalid(format!("line {m} refers to an unknown bus"));
            }
            if l.from == l.to {
                return invalid(format!("line {m} is a self-loop"));
            }
            if !(l.b > 0.0 && l.b.is_finite()) {
                return invalid(format!("line {m} has non-positive susceptance {}", l.b));
            }
        }
        if !(self.theta_bar > 0.0) || self.theta_bar.is_nan() {
            return invalid(format!(
                "theta_bar must be positive, got {}",
                self.theta_bar
            ));
        }
        if self.sigma.len() != nr || self.sigma.iter().any(|r| r.len() != nr) {
            return invalid(format!("sigma must be {nr}x{nr} for {nr} random busses"));
        }
        Ok(())
    }
}
