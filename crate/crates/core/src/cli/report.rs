use serde::Serialize;

use super::verify::Check;
use crate::benchmarks::PolygonRow;
use crate::error::{AloeError, Result};
use crate::estimator::AloeEstimate;

#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub results: &'a [T],
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, seed: u64, generated_at: Option<u64>, results: &'a [T]) -> Self {
        Self {
            command,
            seed,
            generated_at,
            results,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// One line of the common CSV layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub case: String,
    pub theta_or_tau: Option<f64>,
    pub n: u64,
    pub mu_hat: f64,
    pub se: f64,
    pub se_over_mu: f64,
    pub mu_lower: f64,
    pub mu_bar: f64,
    pub s_ge_2_fraction: f64,
    pub seed: u64,
}

impl CsvRow {
    pub fn from_estimate(case: &str, theta_or_tau: Option<f64>, e: &AloeEstimate) -> Self {
        let (ratio, multi) = if e.n == 0 {
            (0.0, 0.0)
        } else {
            (e.relative_se(), e.multi_event_fraction())
        };
        Self {
            case: case.to_string(),
            theta_or_tau,
            n: e.n,
            mu_hat: e.mu_hat,
            se: e.se,
            se_over_mu: ratio,
            mu_lower: e.lower_bound,
            mu_bar: e.union_bound,
            s_ge_2_fraction: multi,
            seed: e.seed,
        }
    }
}

fn write_rows<S: Serialize>(rows: impl IntoIterator<Item = S>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| AloeError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| AloeError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| AloeError::Io(e.to_string()))
}

pub fn to_csv(rows: impl IntoIterator<Item = CsvRow>) -> Result<String> {
    write_rows(rows)
}

#[derive(Serialize)]
struct PolygonCsv {
    tau: f64,
    mu_hat: f64,
    se: f64,
    mu_bar: f64,
    reference_lo: f64,
    reference_hi: f64,
    rel_mse: f64,
}

pub fn polygon_csv(rows: &[PolygonRow]) -> Result<String> {
    write_rows(rows.iter().map(|r| PolygonCsv {
        tau: r.tau,
        mu_hat: r.mu_hat,
        se: r.se,
        mu_bar: r.mu_bar,
        reference_lo: r.reference_lo,
        reference_hi: r.reference_hi,
        rel_mse: r.rel_mse,
    }))
}

pub fn checks_csv(checks: &[Check]) -> Result<String> {
    write_rows(checks)
}
