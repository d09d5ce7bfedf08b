//! Machine-readable outputs: the verification report and the closure summary.
//!
//! JSON has no infinities, so non-finite numbers are written as the largest
//! finite double of the same sign; a refinement ratio reported as
//! `1.7976931348623157e308` means the refined value is below rounding level.

use gaudin_core::dynamics::{CaseResult, VerificationReport};
use serde::{Deserialize, Serialize, Serializer};

use crate::config::RunConfig;

/// Maps `±∞` to `±f64::MAX` and NaN to `f64::MAX`.
pub fn json_number(v: f64) -> f64 {
    if v.is_nan() {
        f64::MAX
    } else if v.is_infinite() {
        f64::MAX.copysign(v)
    } else {
        v
    }
}

fn finite<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(json_number(*v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseJson {
    pub name: String,
    #[serde(serialize_with = "finite")]
    pub residual: f64,
    #[serde(serialize_with = "finite")]
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub suite: String,
    pub seed: u64,
    pub config_digest: String,
    pub cases: Vec<CaseJson>,
    pub pass: bool,
}

impl ReportJson {
    pub fn new(report: &VerificationReport, cfg: &RunConfig) -> Self {
        let mut cases: Vec<CaseJson> = report.cases.iter().map(case_json).collect();
        cases.sort_by(|a, b| a.name.cmp(&b.name));
        ReportJson {
            suite: report.suite.clone(),
            seed: report.seed,
            config_digest: cfg.digest(),
            pass: cases.iter().all(|c| c.pass),
            cases,
        }
    }
}

fn case_json(c: &CaseResult) -> CaseJson {
    CaseJson { name: c.name.clone(), residual: c.residual, tol: c.tol, pass: c.pass }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureJson {
    pub model: String,
    pub seed: u64,
    pub config_digest: String,
    pub pair: [[usize; 2]; 2],
    pub h: f64,
    pub delta: f64,
    /// Richardson-extrapolated residual at `(h, δ)`.
    #[serde(serialize_with = "finite")]
    pub residual: f64,
    /// Same at `(h/2, δ/2)`.
    #[serde(serialize_with = "finite")]
    pub residual_refined: f64,
    /// Un-extrapolated central-difference residuals at `δ` and `δ/2`.
    #[serde(serialize_with = "finite")]
    pub raw: f64,
    #[serde(serialize_with = "finite")]
    pub raw_half: f64,
    /// `raw / raw_half`: about 4 for the expected `O(δ²)` behaviour.
    #[serde(serialize_with = "finite")]
    pub ratio: f64,
    /// `𝓛_A` and `𝓛_B` at the initial state.
    pub lagrangians: [[f64; 2]; 2],
    pub tol: f64,
    pub ratio_tol: f64,
    pub pass: bool,
}
