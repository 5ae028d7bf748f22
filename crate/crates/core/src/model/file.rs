//! JSON problem files.
//!
//! ```json
//! {
//!   "state_vars": ["x"],
//!   "disturbance_vars": ["d"],
//!   "dynamics": ["x + d"],
//!   "disturbance": {"uniform_box": [[-0.1, 0.1]]},
//!   "safe_set": ["x^2 - 1 <= 0"],
//!   "extended_domain": {"conjuncts": ["x^2 - 2 <= 0"], "box": [[-1.4142135623730951, 1.4142135623730951]]},
//!   "x0": [0.2],
//!   "horizon": 30,
//!   "kind": "safety"
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Conjunct, DisturbanceSpec, ExtendedDomain, ModelError, ProblemKind, ProblemSpec,
    SemialgebraicSet, SystemSpec,
};
use crate::polynomial::{parse_polynomial, HyperBox};

/// A conjunct written as `"lhs <= rhs"` or `"lhs >= rhs"`.
pub type ConjunctText = String;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinitePoint {
    pub point: Vec<f64>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceFile {
    UniformBox(HyperBox),
    Finite(Vec<FinitePoint>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendedDomainFile {
    #[serde(default)]
    pub conjuncts: Vec<ConjunctText>,
    #[serde(rename = "box")]
    pub bbox: HyperBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub state_vars: Vec<String>,
    #[serde(default)]
    pub disturbance_vars: Vec<String>,
    pub dynamics: Vec<String>,
    pub disturbance: DisturbanceFile,
    pub safe_set: Vec<ConjunctText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_set: Option<Vec<ConjunctText>>,
    pub extended_domain: ExtendedDomainFile,
    pub x0: Vec<f64>,
    pub horizon: u32,
    pub kind: ProblemKind,
}

fn field_err(path: &str, e: impl std::fmt::Display) -> ModelError {
    ModelError::File {
        path: path.to_string(),
        msg: e.to_string(),
    }
}

fn parse_set(texts: &[String], vars: &[String], path: &str) -> Result<SemialgebraicSet, ModelError> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| Conjunct::parse(t, vars).map_err(|e| field_err(&format!("{path}[{i}]"), e)))
        .collect::<Result<Vec<_>, _>>()
        .map(SemialgebraicSet::new)
}

impl ProblemFile {
    /// Parses JSON, reporting schema violations with the offending field path.
    pub fn from_json(text: &str) -> Result<ProblemFile, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field_err(&path, e.into_inner())
        })
    }

    pub fn to_spec(&self) -> Result<ProblemSpec, ModelError> {
        let all: Vec<String> = self
            .state_vars
            .iter()
            .chain(&self.disturbance_vars)
            .cloned()
            .collect();
        let dynamics = self
            .dynamics
            .iter()
            .enumerate()
            .map(|(i, t)| parse_polynomial(t, &all).map_err(|e| field_err(&format!("dynamics[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        let disturbance = match &self.disturbance {
            DisturbanceFile::UniformBox(b) => DisturbanceSpec::UniformBox(b.clone()),
            DisturbanceFile::Finite(pts) => DisturbanceSpec::FiniteSupport(
                pts.iter().map(|p| (p.point.clone(), p.prob)).collect(),
            ),
        };
        let system = SystemSpec::new(
            self.state_vars.clone(),
            self.disturbance_vars.clone(),
            dynamics,
            disturbance,
        )?;
        let vars = &self.state_vars;
        let safe_set = parse_set(&self.safe_set, vars, "safe_set")?;
        let target_set = self
            .target_set
            .as_ref()
            .map(|t| parse_set(t, vars, "target_set"))
            .transpose()?;
        let ext = ExtendedDomain {
            set: parse_set(&self.extended_domain.conjuncts, vars, "extended_domain.conjuncts")?,
            bbox: self.extended_domain.bbox.clone(),
        };
        ProblemSpec::new(
            system,
            self.kind,
            safe_set,
            target_set,
            ext,
            self.x0.clone(),
            self.horizon,
        )
    }
}

/// Reads, parses and validates a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| field_err(&path.display().to_string(), e))?;
    ProblemFile::from_json(&text)?.to_spec()
}
