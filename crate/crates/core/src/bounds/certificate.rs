use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{evaluate_bound, validate_certificate_params, BoundReport, BoundsError, CertificateKind};
use crate::polynomial::Polynomial;

/// A candidate function `v` together with the condition it is meant to
/// satisfy and that condition's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub v: Polynomial,
    pub kind: CertificateKind,
    pub alpha: f64,
    pub beta: f64,
    pub m: Option<f64>,
}

impl Certificate {
    pub fn new(
        v: Polynomial,
        kind: CertificateKind,
        alpha: f64,
        beta: f64,
        m: Option<f64>,
    ) -> Result<Self, BoundsError> {
        validate_certificate_params(kind, alpha, beta, m)?;
        Ok(Certificate { v, kind, alpha, beta, m })
    }

    /// Bound implied by the certificate at `x0` over `n` steps.
    pub fn bound(&self, x0: &[f64], n: u32) -> Result<BoundReport, BoundsError> {
        evaluate_bound(self.kind, self.v.eval(x0), self.alpha, self.beta, self.m, n)
    }
}

/// On-disk certificate: `{kind, alpha, beta, M?, v: {"<exponents>": coeff}}`,
/// exponent tuples written comma-separated (`"2"`, `"1,0"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub kind: CertificateKind,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Variable order of the exponent tuples; defaults to the problem's
    /// state variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<String>>,
    pub v: BTreeMap<String, f64>,
}

impl CertificateFile {
    pub fn from_certificate(c: &Certificate) -> Self {
        let v = c
            .v
            .terms()
            .map(|(e, coeff)| {
                let key: Vec<String> = e.iter().map(|k| k.to_string()).collect();
                (key.join(","), coeff)
            })
            .collect();
        CertificateFile {
            kind: c.kind,
            alpha: c.alpha,
            beta: c.beta,
            m: c.m,
            vars: Some(c.v.vars().to_vec()),
            v,
        }
    }

    /// Rebuilds the certificate over `state_vars`.
    pub fn to_certificate(&self, state_vars: &[String]) -> Result<Certificate, String> {
        let vars = self.vars.clone().unwrap_or_else(|| state_vars.to_vec());
        let mut terms = Vec::with_capacity(self.v.len());
        for (key, &c) in &self.v {
            let exps = key
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|e| format!("bad exponent key `{key}`: {e}"))?;
            if exps.len() != vars.len() {
                return Err(format!(
                    "exponent key `{key}` has {} entries for {} variables",
                    exps.len(),
                    vars.len()
                ));
            }
            terms.push((exps, c));
        }
        let v = Polynomial::from_terms(&vars, terms)
            .embed(state_vars)
            .map_err(|e| e.to_string())?;
        Certificate::new(v, self.kind, self.alpha, self.beta, self.m).map_err(|e| e.to_string())
    }
}
