//! The constraint systems of the six conditions, as affine forms in
//! `v`, `E[v∘f]`, `β` and `M` attached to regions of the state space.

use serde::Serialize;

use super::CheckError;
use crate::bounds::CertificateKind;
use crate::model::{ProblemKind, ProblemSpec, SemialgebraicSet};
use crate::polynomial::{HyperBox, Polynomial};

/// Resolution (relative to the extended-domain box) of region bounding boxes.
const REGION_RESOLUTION: f64 = 1e-9;
const REGION_BUDGET: usize = 200_000;

/// `v·v + ev·E[v∘f] + one + beta·β + m·M`, required to be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Form {
    pub v: f64,
    pub ev: f64,
    pub one: f64,
    pub beta: f64,
    pub m: f64,
}

impl Form {
    const ZERO: Form = Form {
        v: 0.0,
        ev: 0.0,
        one: 0.0,
        beta: 0.0,
        m: 0.0,
    };

    pub fn instantiate(&self, v: &Polynomial, ev: &Polynomial, beta: f64, m: f64) -> Polynomial {
        let mut p = v.scale(self.v);
        if self.ev != 0.0 {
            p = &p + &ev.scale(self.ev);
        }
        p.add_constant(self.one + self.beta * beta + self.m * m)
    }

    pub fn uses_expectation(&self) -> bool {
        self.ev != 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// A semialgebraic piece together with a box containing it.
    Set { set: SemialgebraicSet, bbox: HyperBox },
    /// A single point; the residual there must be strictly positive.
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub form: Form,
    pub region: Region,
}

/// Which part of the state space a constraint line ranges over.
#[derive(Debug, Clone, Copy)]
enum Where {
    Safe,
    Target,
    SafeMinusTarget,
    DomainMinusSafe,
    DomainMinusTarget,
    Domain,
}

fn pieces(problem: &ProblemSpec, w: Where) -> Vec<SemialgebraicSet> {
    let x = &problem.safe_set;
    let d = &problem.extended_domain.set;
    let xr = problem.target();
    match w {
        Where::Safe => vec![x.clone()],
        Where::Target => vec![xr.clone()],
        Where::SafeMinusTarget => x.difference(xr),
        Where::DomainMinusSafe => d.difference(x),
        Where::DomainMinusTarget => d.difference(xr),
        Where::Domain => vec![d.clone()],
    }
}

fn region_label(w: Where, kind: ProblemKind) -> &'static str {
    let safety = kind == ProblemKind::Safety;
    match (w, safety) {
        (Where::Safe, _) => "X",
        (Where::Target, _) => "X_r",
        (Where::SafeMinusTarget, _) => "X\\X_r",
        (Where::DomainMinusSafe, true) => "X̃\\X",
        (Where::DomainMinusSafe, false) => "X̂\\X",
        (Where::DomainMinusTarget, _) => "X̂\\X_r",
        (Where::Domain, true) => "X̃",
        (Where::Domain, false) => "X̂",
    }
}

/// The constraint lines of `kind` at the given `α` over `problem`. Regions
/// that are provably empty inside the extended-domain box are omitted (their
/// constraints hold vacuously).
pub fn constraints_for(
    kind: CertificateKind,
    alpha: f64,
    problem: &ProblemSpec,
) -> Result<Vec<Constraint>, CheckError> {
    if kind.problem_kind() != problem.kind {
        return Err(CheckError::KindMismatch {
            certificate: kind,
            problem: problem.kind,
        });
    }
    let f = Form::ZERO;
    // v/α + β − E[v∘f]
    let decrease = Form {
        v: 1.0 / alpha,
        ev: -1.0,
        beta: 1.0,
        ..f
    };
    // E[v∘f] − αv − β
    let increase = Form {
        v: -alpha,
        ev: 1.0,
        beta: -1.0,
        ..f
    };
    let at_least_one = Form { v: 1.0, one: -1.0, ..f };
    let at_most_one = Form { v: -1.0, one: 1.0, ..f };
    let nonneg = Form { v: 1.0, ..f };
    let below_m = Form { v: -1.0, m: 1.0, ..f };
    // −β − (α−1)v
    let exit_cap = Form {
        v: -(alpha - 1.0),
        beta: -1.0,
        ..f
    };
    use Where::*;
    let lines: Vec<(&str, Form, Where)> = match kind {
        CertificateKind::SafetyUpperT1 | CertificateKind::SafetyUpperKushner => vec![
            ("E[v∘f] ≤ v/α + β", decrease, Safe),
            ("v ≥ 1", at_least_one, DomainMinusSafe),
            ("v ≥ 0", nonneg, Safe),
        ],
        CertificateKind::SafetyLower => {
            let mut l = vec![("β + αv ≤ E[v∘f]", increase, Safe)];
            if alpha != 1.0 {
                l.push(("v ≤ 1", at_most_one, DomainMinusSafe));
            }
            l.push(("v ≤ M", below_m, Domain));
            l
        }
        CertificateKind::RaUpperT3 => vec![
            ("E[v∘f] ≤ v/α + β", decrease, SafeMinusTarget),
            ("v ≥ 1", at_least_one, Target),
            ("v ≥ 0", nonneg, DomainMinusTarget),
        ],
        CertificateKind::RaUpperKushner => vec![
            ("E[v∘f] ≤ v/α + β", decrease, SafeMinusTarget),
            ("v ≥ 1", at_least_one, Target),
            ("v ≥ 1", at_least_one, DomainMinusSafe),
            ("v ≥ 0", nonneg, Safe),
        ],
        CertificateKind::RaLower => vec![
            ("β + αv ≤ E[v∘f]", increase, SafeMinusTarget),
            ("v ≤ 1", at_most_one, Target),
            ("(α−1)v ≤ −β", exit_cap, DomainMinusSafe),
            ("v ≤ M", below_m, Domain),
        ],
    };
    let mut out = Vec::new();
    if kind.is_kushner() {
        out.push(Constraint {
            name: "v(x0) < 1".into(),
            form: at_most_one,
            region: Region::Point(problem.x0.clone()),
        });
    }
    let outer = &problem.extended_domain.bbox;
    for (text, form, w) in lines {
        let ps = pieces(problem, w);
        let multi = ps.len() > 1;
        for (i, piece) in ps.into_iter().enumerate() {
            let Some(bbox) = piece.bounding_box_within(outer, REGION_RESOLUTION, REGION_BUDGET) else {
                continue;
            };
            let mut name = format!("{text} on {}", region_label(w, problem.kind));
            if multi {
                name.push_str(&format!(" (piece {})", i + 1));
            }
            out.push(Constraint {
                name,
                form,
                region: Region::Set { set: piece, bbox },
            });
        }
    }
    Ok(out)
}
