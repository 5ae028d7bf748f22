//! Closed-form probability bounds for the six certificate conditions, with
//! parameter validation, case dispatch on `γ = βα − (α − 1)`, clamping, and
//! a recursion oracle that re-derives every closed form by iteration.

mod certificate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ProblemKind;

pub use certificate::{Certificate, CertificateFile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("invalid parameters for {kind}: {msg}")]
    InvalidParameters { kind: CertificateKind, msg: String },
    #[error("{kind} requires v(x0) < 1, got {v0}")]
    V0NotBelowOne { kind: CertificateKind, v0: f64 },
    #[error("v(x0) = {v0} exceeds M = {m}")]
    V0ExceedsM { v0: f64, m: f64 },
    #[error("{0} requires M")]
    MissingM(CertificateKind),
    #[error("{0} takes no M")]
    UnexpectedM(CertificateKind),
    #[error("unknown certificate kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// Upper bound on exit probability, `α ∈ (0, 1]`.
    SafetyUpperT1,
    /// Upper bound on exit probability, `α ≥ 1` (Kushner-style).
    SafetyUpperKushner,
    /// Lower bound on exit probability.
    SafetyLower,
    /// Upper bound on reach-avoid probability, `α ∈ (0, 1]`.
    RaUpperT3,
    /// Upper bound on reach-avoid probability, `α ≥ 1`.
    RaUpperKushner,
    /// Lower bound on reach-avoid probability, `α > 1`.
    RaLower,
}

impl CertificateKind {
    pub const ALL: [CertificateKind; 6] = [
        CertificateKind::SafetyUpperT1,
        CertificateKind::SafetyUpperKushner,
        CertificateKind::SafetyLower,
        CertificateKind::RaUpperT3,
        CertificateKind::RaUpperKushner,
        CertificateKind::RaLower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::SafetyUpperT1 => "safety-upper-t1",
            CertificateKind::SafetyUpperKushner => "safety-upper-kushner",
            CertificateKind::SafetyLower => "safety-lower",
            CertificateKind::RaUpperT3 => "ra-upper-t3",
            CertificateKind::RaUpperKushner => "ra-upper-kushner",
            CertificateKind::RaLower => "ra-lower",
        }
    }

    pub fn is_lower(self) -> bool {
        matches!(self, CertificateKind::SafetyLower | CertificateKind::RaLower)
    }

    pub fn is_kushner(self) -> bool {
        matches!(
            self,
            CertificateKind::SafetyUpperKushner | CertificateKind::RaUpperKushner
        )
    }

    pub fn problem_kind(self) -> ProblemKind {
        match self {
            CertificateKind::SafetyUpperT1
            | CertificateKind::SafetyUpperKushner
            | CertificateKind::SafetyLower => ProblemKind::Safety,
            _ => ProblemKind::ReachAvoid,
        }
    }
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CertificateKind {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CertificateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BoundsError::UnknownKind(s.to_string()))
    }
}

/// Which closed-form branch applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    /// `v0 + βN`
    Linear,
    /// `v0·α^{-N} + (1 − α^{-N})·αβ/(α − 1)`
    Geometric,
    /// `1 − (1 − v0)(1 − β)^N`
    Complement,
    /// `((α^{N+1}v0 − M)(α−1) + β(α^{N+1}−1)) / ((α+β−1)(α^{N+1}−1))`
    LowerGeometric,
    /// `1 + (v0 − M)/(β(N+1))`
    LowerLinear,
}

/// Parameter validation result: the branch plus a human-readable tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTag {
    pub case: BoundCase,
    pub tag: String,
    pub gamma: f64,
}

fn gamma(alpha: f64, beta: f64) -> f64 {
    beta * alpha - (alpha - 1.0)
}

/// Checks the parameter ranges of `kind` and reports which closed-form
/// branch the bound uses.
pub fn validate_certificate_params(
    kind: CertificateKind,
    alpha: f64,
    beta: f64,
    m: Option<f64>,
) -> Result<CaseTag, BoundsError> {
    let bad = |msg: String| BoundsError::InvalidParameters { kind, msg };
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(bad(format!("α = {alpha}, β = {beta} must be finite")));
    }
    match (kind.is_lower(), m) {
        (true, None) => return Err(BoundsError::MissingM(kind)),
        (false, Some(_)) => return Err(BoundsError::UnexpectedM(kind)),
        (true, Some(m)) if !m.is_finite() => return Err(bad(format!("M = {m} must be finite"))),
        _ => {}
    }
    let g = gamma(alpha, beta);
    let tag = |case: BoundCase, tag: String| Ok(CaseTag { case, tag, gamma: g });
    match kind {
        CertificateKind::SafetyUpperT1 => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(bad(format!("α = {alpha} must lie in (0, 1]")));
            }
            if beta > 1.0 {
                return Err(bad(format!("β = {beta} must be ≤ 1")));
            }
            if g < 0.0 {
                tag(BoundCase::Complement, format!("γ={g}<0"))
            } else if alpha == 1.0 {
                tag(BoundCase::Linear, format!("α=1, γ={g}∈[0,1]"))
            } else {
                tag(BoundCase::Geometric, format!("α∈(0,1), γ={g}∈[0,1]"))
            }
        }
        CertificateKind::SafetyUpperKushner => {
            if !(alpha >= 1.0) {
                return Err(bad(format!("α = {alpha} must be ≥ 1")));
            }
            if !(0.0..=1.0).contains(&beta) {
                return Err(bad(format!("β = {beta} must lie in [0, 1]")));
            }
            if alpha == 1.0 {
                // γ = β here; β = 0 gives the constant bound v0
                tag(BoundCase::Linear, format!("α=1, γ={g}≥0"))
            } else if g <= 0.0 {
                tag(BoundCase::Complement, format!("α>1, γ={g}≤0"))
            } else {
                tag(BoundCase::Geometric, format!("α>1, γ={g}>0"))
            }
        }
        CertificateKind::SafetyLower => {
            if !(alpha >= 1.0) {
                return Err(bad(format!("α = {alpha} must be ≥ 1")));
            }
            if alpha == 1.0 && !(beta > 0.0) {
                return Err(bad(format!("β>0 required when α=1 (got β = {beta})")));
            }
            if !(beta > 1.0 - alpha) {
                return Err(bad(format!("β = {beta} must exceed 1 − α = {}", 1.0 - alpha)));
            }
            if alpha == 1.0 {
                tag(
                    BoundCase::LowerLinear,
                    "α=1 (the certificate also implies eventual exit with probability one)".into(),
                )
            } else {
                tag(BoundCase::LowerGeometric, "α>1".into())
            }
        }
        CertificateKind::RaUpperT3 => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(bad(format!("α = {alpha} must lie in (0, 1]")));
            }
            if !(0.0..=1.0).contains(&beta) {
                return Err(bad(format!("β = {beta} must lie in [0, 1]")));
            }
            if alpha == 1.0 {
                tag(BoundCase::Linear, "α=1".into())
            } else {
                tag(BoundCase::Geometric, "α∈(0,1)".into())
            }
        }
        CertificateKind::RaUpperKushner => {
            if !(alpha >= 1.0) {
                return Err(bad(format!("α = {alpha} must be ≥ 1")));
            }
            if !(0.0..=1.0).contains(&beta) {
                return Err(bad(format!("β = {beta} must lie in [0, 1]")));
            }
            if alpha == 1.0 {
                return tag(BoundCase::Linear, "α=1".into());
            }
            let ratio = beta * alpha / (alpha - 1.0);
            if ratio > 1.0 {
                tag(BoundCase::Geometric, format!("α>1, βα/(α−1)={ratio}>1"))
            } else {
                tag(BoundCase::Complement, format!("α>1, βα/(α−1)={ratio}≤1"))
            }
        }
        CertificateKind::RaLower => {
            if alpha == 1.0 {
                return Err(bad("α cannot equal 1".into()));
            }
            if !(alpha > 1.0) {
                return Err(bad(format!("α = {alpha} must be > 1")));
            }
            if !(beta > 1.0 - alpha) {
                return Err(bad(format!("β = {beta} must exceed 1 − α = {}", 1.0 - alpha)));
            }
            tag(BoundCase::LowerGeometric, "α>1".into())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: CertificateKind,
    pub case_tag: String,
    pub gamma: f64,
    pub raw: f64,
    pub clamped: f64,
    pub v0: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[serde(rename = "N")]
    pub n: u32,
}

/// `α^{-N}` and `(1 − α^{-N})/(α − 1)`, stable for α near 1.
fn geometric_parts(alpha: f64, n: u32) -> (f64, f64) {
    let e = -(n as f64) * (alpha - 1.0).ln_1p();
    let pow = e.exp();
    let frac = if alpha == 1.0 {
        n as f64
    } else {
        -e.exp_m1() / (alpha - 1.0)
    };
    (pow, frac)
}

fn linear(v0: f64, beta: f64, n: u32) -> f64 {
    v0 + beta * n as f64
}

fn geometric(v0: f64, alpha: f64, beta: f64, n: u32) -> f64 {
    let (pow, frac) = geometric_parts(alpha, n);
    v0 * pow + frac * alpha * beta
}

fn complement(v0: f64, beta: f64, n: u32) -> f64 {
    1.0 - (1.0 - v0) * (n as f64 * (-beta).ln_1p()).exp()
}

fn lower_geometric(v0: f64, m: f64, alpha: f64, beta: f64, n: u32) -> f64 {
    let e = (n as f64 + 1.0) * (alpha - 1.0).ln_1p();
    let a = e.exp();
    let am1 = e.exp_m1();
    ((a * v0 - m) * (alpha - 1.0) + beta * am1) / ((alpha + beta - 1.0) * am1)
}

fn lower_linear(v0: f64, m: f64, beta: f64, n: u32) -> f64 {
    1.0 + (v0 - m) / (beta * (n as f64 + 1.0))
}

fn report(
    kind: CertificateKind,
    tag: CaseTag,
    raw: f64,
    v0: f64,
    alpha: f64,
    beta: f64,
    m: Option<f64>,
    n: u32,
) -> BoundReport {
    BoundReport {
        kind,
        case_tag: tag.tag,
        gamma: tag.gamma,
        raw,
        clamped: raw.clamp(0.0, 1.0),
        v0,
        alpha,
        beta,
        m,
        n,
    }
}

fn upper(kind: CertificateKind, v0: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    let tag = validate_certificate_params(kind, alpha, beta, None)?;
    if kind.is_kushner() && !(v0 < 1.0) {
        return Err(BoundsError::V0NotBelowOne { kind, v0 });
    }
    let raw = match tag.case {
        BoundCase::Linear => linear(v0, beta, n),
        BoundCase::Geometric => geometric(v0, alpha, beta, n),
        BoundCase::Complement => complement(v0, beta, n),
        _ => unreachable!("upper kinds use upper cases"),
    };
    Ok(report(kind, tag, raw, v0, alpha, beta, None, n))
}

fn lower(kind: CertificateKind, v0: f64, m: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    let tag = validate_certificate_params(kind, alpha, beta, Some(m))?;
    if v0 > m {
        return Err(BoundsError::V0ExceedsM { v0, m });
    }
    let raw = match tag.case {
        BoundCase::LowerGeometric => lower_geometric(v0, m, alpha, beta, n),
        BoundCase::LowerLinear => lower_linear(v0, m, beta, n),
        _ => unreachable!("lower kinds use lower cases"),
    };
    Ok(report(kind, tag, raw, v0, alpha, beta, Some(m), n))
}

pub fn upper_bound_safety_t1(v0: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    upper(CertificateKind::SafetyUpperT1, v0, alpha, beta, n)
}

pub fn upper_bound_safety_kushner(v0: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    upper(CertificateKind::SafetyUpperKushner, v0, alpha, beta, n)
}

pub fn lower_bound_safety(v0: f64, m: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    lower(CertificateKind::SafetyLower, v0, m, alpha, beta, n)
}

pub fn upper_bound_ra_t3(v0: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    upper(CertificateKind::RaUpperT3, v0, alpha, beta, n)
}

pub fn upper_bound_ra_kushner(v0: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    upper(CertificateKind::RaUpperKushner, v0, alpha, beta, n)
}

pub fn lower_bound_ra(v0: f64, m: f64, alpha: f64, beta: f64, n: u32) -> Result<BoundReport, BoundsError> {
    lower(CertificateKind::RaLower, v0, m, alpha, beta, n)
}

/// Dispatches to the bound of `kind`.
pub fn evaluate_bound(
    kind: CertificateKind,
    v0: f64,
    alpha: f64,
    beta: f64,
    m: Option<f64>,
    n: u32,
) -> Result<BoundReport, BoundsError> {
    if kind.is_lower() {
        let m = m.ok_or(BoundsError::MissingM(kind))?;
        lower(kind, v0, m, alpha, beta, n)
    } else {
        if m.is_some() {
            return Err(BoundsError::UnexpectedM(kind));
        }
        upper(kind, v0, alpha, beta, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

/// Iterative evaluation of the bound chains.
///
/// Upper: `u_{k+1} = u_k/α + β` from `u_0 = v0`, `N` steps.
/// Lower: `s_{k+1} = α·s_k + β` from `s_0 = v0`, `N+1` steps, returning
/// `(s_{N+1} − M) / ((α+β−1)·Σ_{i=0}^{N} α^i)`.
pub fn recursion_oracle(v0: f64, m: Option<f64>, alpha: f64, beta: f64, n: u32, direction: Direction) -> f64 {
    match direction {
        Direction::Upper => {
            let mut u = v0;
            for _ in 0..n {
                u = u / alpha + beta;
            }
            u
        }
        Direction::Lower => {
            let m = m.unwrap_or(1.0);
            let mut s = v0;
            let mut sum = 0.0;
            let mut p = 1.0;
            for _ in 0..=n {
                s = alpha * s + beta;
                sum += p;
                p *= alpha;
            }
            (s - m) / ((alpha + beta - 1.0) * sum)
        }
    }
}

/// The sign-reversed upper-bound chain for `α ∈ (0, 1]`, `v0 ≤ 0`: its raw
/// value never exceeds zero, so it can only ever certify the trivial lower
/// bound 0.
pub fn reversed_sign_bounds(v0: f64, alpha: f64, beta: f64, n: u32) -> BoundReport {
    let g = gamma(alpha, beta);
    let (raw, case, tag) = if g < 0.0 {
        if alpha == 1.0 {
            (linear(v0, beta, n), BoundCase::Linear, format!("α=1, γ={g}<0"))
        } else {
            (geometric(v0, alpha, beta, n), BoundCase::Geometric, format!("α∈(0,1), γ={g}<0"))
        }
    } else {
        let (pow, _) = geometric_parts(alpha, n);
        (1.0 - (1.0 - v0) * pow, BoundCase::Complement, format!("γ={g}≥0"))
    };
    report(
        CertificateKind::SafetyUpperT1,
        CaseTag { case, tag, gamma: g },
        raw,
        v0,
        alpha,
        beta,
        None,
        n,
    )
}
