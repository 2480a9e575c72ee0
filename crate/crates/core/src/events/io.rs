//! JSON problem files, in whitened form
//! `{"d": 2, "omega": [[1, 0], [0, 1]], "tau": [2, 2]}`
//! or raw form `{"eta": [...], "sigma": [[...]], "gamma": [[...]], "kappa": [...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{whiten, GeneralGaussianSpec, HalfSpaceProblem};
use crate::error::{AloeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemFile {
    Whitened {
        d: usize,
        omega: Vec<Vec<f64>>,
        tau: Vec<f64>,
    },
    Raw(GeneralGaussianSpec),
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<HalfSpaceProblem> {
        match self {
            ProblemFile::Whitened { d, omega, tau } => HalfSpaceProblem::new(d, omega, tau),
            ProblemFile::Raw(spec) => whiten(&spec),
        }
    }
}

pub fn parse_problem(json: &str) -> Result<HalfSpaceProblem> {
    let file: ProblemFile = serde_json::from_str(json).map_err(|e| {
        AloeError::InvalidInput(format!(
            "problem file must have fields d/omega/tau or eta/sigma/gamma/kappa: {e}"
        ))
    })?;
    file.into_problem()
}

pub fn load_problem(path: &Path) -> Result<HalfSpaceProblem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AloeError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::EventSystem;

    #[test]
    fn parses_whitened_form() {
        let p = parse_problem(r#"{"d": 2, "omega": [[1, 0], [0, 1]], "tau": [2, 3]}"#).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.num_events(), 2);
        assert_eq!(p.thresholds(), &[2.0, 3.0]);
    }

    #[test]
    fn parses_raw_form() {
        let p =
            parse_problem(r#"{"eta": [1], "sigma": [[4]], "gamma": [[1]], "kappa": [5]}"#).unwrap();
        assert_eq!(p.thresholds(), &[2.0]);
    }

    #[test]
    fn rejects_unknown_shapes() {
        assert!(parse_problem(r#"{"d": 2, "omega": [[1, 0]]}"#).is_err());
        assert!(parse_problem("not json").is_err());
        assert!(parse_problem(r#"{"d": 1, "omega": [[3]], "tau": [1]}"#).is_err());
    }
}
