//! JSON problem files.
//!
//! ```json
//! { "mu": [..],
//!   "sigma": [[..], ..]  |  "sigma_inv": [[..], ..]  |  "expcorr": {"n": 10, "rho": 0.5},
//!   "bounds": [{"side": "left", "cut": 0.0}, ..] }
//! ```
//!
//! Exactly one covariance source must be present. Numbers are written in
//! shortest round-trip form, so a written problem re-reads bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expcorr::ExpCorrSpec;
use crate::linalg::SymMatrix;
use crate::problem::{Covariance, Problem};
use crate::univariate::TruncationBound;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_inv: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expcorr: Option<ExpCorrSpec>,
    pub bounds: Vec<TruncationBound>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed problem file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn into_problem(self) -> Result<Problem> {
        let covariance = match (self.sigma, self.sigma_inv, self.expcorr) {
            (Some(s), None, None) => Covariance::Dense(SymMatrix::from_rows(&s)?),
            (None, Some(p), None) => Covariance::Precision(SymMatrix::from_rows(&p)?),
            (None, None, Some(spec)) => Covariance::ExpCorr(spec),
            _ => {
                return Err(Error::InvalidArgument(
                    "exactly one of \"sigma\", \"sigma_inv\" or \"expcorr\" must be given".into(),
                ))
            }
        };
        Problem::new(self.mu, covariance, self.bounds)
    }

    pub fn from_problem(problem: &Problem) -> Self {
        let (sigma, sigma_inv, expcorr) = match problem.covariance() {
            Covariance::Dense(m) => (Some(m.to_rows()), None, None),
            Covariance::Precision(m) => (None, Some(m.to_rows()), None),
            Covariance::ExpCorr(spec) => (None, None, Some(*spec)),
        };
        Self {
            mu: problem.mu().to_vec(),
            sigma,
            sigma_inv,
            expcorr,
            bounds: problem.bounds().to_vec(),
        }
    }
}

/// Problems shipped with the crate, addressable by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "table1" => Some(include_str!("../data/table1.json")),
        "experiment2" => Some(include_str!("../data/experiment2.json")),
        "experiment3" => Some(include_str!("../data/experiment3.json")),
        _ => None,
    }
}

pub fn load_bundled(name: &str) -> Result<Problem> {
    let text = bundled(name).ok_or_else(|| Error::InvalidArgument(format!("no bundled problem named {name:?}")))?;
    ProblemFile::from_json(text)?.into_problem()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_problems_load() {
        for name in ["table1", "experiment2", "experiment3"] {
            load_bundled(name).unwrap();
        }
        assert!(load_bundled("nope").is_err());
    }

    #[test]
    fn covariance_source_must_be_unique() {
        let both = r#"{"mu":[0],"sigma":[[1]],"sigma_inv":[[1]],"bounds":[{"side":"left","cut":0}]}"#;
        assert!(ProblemFile::from_json(both).unwrap().into_problem().is_err());
        let none = r#"{"mu":[0],"bounds":[{"side":"left","cut":0}]}"#;
        assert!(ProblemFile::from_json(none).unwrap().into_problem().is_err());
        let typo = r#"{"mu":[0],"sigmaa":[[1]],"bounds":[{"side":"left","cut":0}]}"#;
        assert!(ProblemFile::from_json(typo).is_err());
        let side = r#"{"mu":[0],"sigma":[[1]],"bounds":[{"side":"up","cut":0}]}"#;
        assert!(ProblemFile::from_json(side).is_err());
    }

    #[test]
    fn expcorr_file() {
        let text = r#"{"mu":[0,0,0],"expcorr":{"n":3,"rho":0.5},"bounds":[{"side":"left","cut":0},{"side":"right","cut":1},{"side":"left","cut":-1}]}"#;
        let p = ProblemFile::from_json(text).unwrap().into_problem().unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(ProblemFile::from_problem(&p).into_problem().unwrap(), p);
    }
}
