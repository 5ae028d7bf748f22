//! Verification of certificate conditions by Bernstein branch-and-bound,
//! and certified upper bounds on `sup v`.
//!
//! A residual counts as nonnegative on a cell when every Bernstein
//! coefficient is at least `-VERIFY_MARGIN`; a point counts as a violation
//! when the residual there is below `-FALSIFY_THRESHOLD`.

mod constraints;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{BoundReport, BoundsError, Certificate, CertificateKind};
use crate::model::{one_step_expectation, ModelError, ProblemKind, ProblemSpec, SemialgebraicSet};
use crate::polynomial::{BernsteinForm, HyperBox, Polynomial};

pub use constraints::{constraints_for, Constraint, Form, Region};

pub const VERIFY_MARGIN: f64 = 1e-9;
pub const FALSIFY_THRESHOLD: f64 = 1e-7;
pub const DEFAULT_BUDGET: usize = 100_000;
/// Samples drawn to spot-check every Verified verdict.
pub const SPOT_CHECK_SAMPLES: usize = 10_000;
/// Cells narrower than this (relative to the starting box) are not split.
const MIN_RELATIVE_WIDTH: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("certificate kind {certificate} does not apply to a {problem:?} problem")]
    KindMismatch {
        certificate: CertificateKind,
        problem: ProblemKind,
    },
    #[error(transparent)]
    Model(#[from] ModelErrorText),
}

/// Model errors carried as text so `CheckError` stays `Clone + PartialEq`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct ModelErrorText(pub String);

impl From<ModelError> for CheckError {
    fn from(e: ModelError) -> Self {
        CheckError::Model(ModelErrorText(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Falsified {
        witness: Vec<f64>,
        residual: f64,
    },
    Unknown {
        cells_remaining: usize,
        /// Smallest Bernstein lower bound among unresolved cells.
        tightest_lower_bound: f64,
        note: String,
    },
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonnegOutcome {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub cells_explored: usize,
}

struct Cell {
    lower: f64,
    form: BernsteinForm,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.lower.total_cmp(&o.lower) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    // max-heap on the negated lower bound: most negative first
    fn cmp(&self, o: &Self) -> Ordering {
        o.lower.total_cmp(&self.lower)
    }
}

fn in_region(region: &SemialgebraicSet, bbox: &HyperBox, x: &[f64]) -> bool {
    bbox.contains(x) && region.contains(x)
}

fn bernstein(p: &Polynomial, cell: &HyperBox) -> BernsteinForm {
    BernsteinForm::natural(p, cell).expect("natural degree is always sufficient")
}

/// Spot-checks a Verified verdict; returns a violating point if one is found.
fn spot_check(p: &Polynomial, region: &SemialgebraicSet, bbox: &HyperBox) -> Option<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..SPOT_CHECK_SAMPLES {
        let x = bbox.sample(&mut rng);
        if region.contains(&x) {
            let r = p.eval(&x);
            if r < -1e-6 {
                return Some((x, r));
            }
        }
    }
    None
}

/// Decides `p ≥ 0` on `region ∩ bbox` by best-first branch-and-bound.
pub fn check_nonnegativity(
    p: &Polynomial,
    region: &SemialgebraicSet,
    bbox: &HyperBox,
    budget: usize,
) -> NonnegOutcome {
    let mut heap = BinaryHeap::new();
    let mut explored = 0usize;
    let mut stuck: Vec<f64> = Vec::new();
    if !region.proven_disjoint(bbox) {
        let form = bernstein(p, bbox);
        heap.push(Cell { lower: form.min(), form });
    }
    while let Some(Cell { lower, form }) = heap.pop() {
        if lower >= -VERIFY_MARGIN {
            // every remaining cell has an even larger lower bound
            heap.clear();
            break;
        }
        explored += 1;
        let cell = &form.cell;
        let mut probes = cell.corners();
        probes.push(cell.center());
        probes.push(form.control_point(form.argmin()));
        for x in probes {
            if in_region(region, bbox, &x) {
                let r = p.eval(&x);
                if r < -FALSIFY_THRESHOLD {
                    return NonnegOutcome {
                        verdict: Verdict::Falsified { witness: x, residual: r },
                        cells_explored: explored,
                    };
                }
            }
        }
        if explored >= budget {
            let remaining = heap.len() + 1 + stuck.len();
            let tightest = heap
                .iter()
                .map(|c| c.lower)
                .chain(stuck.iter().copied())
                .fold(lower, f64::min);
            return NonnegOutcome {
                verdict: Verdict::Unknown {
                    cells_remaining: remaining,
                    tightest_lower_bound: tightest,
                    note: format!("budget of {budget} cells exhausted"),
                },
                cells_explored: explored,
            };
        }
        let axis = cell.widest_relative_to(bbox);
        let rel = if bbox.width(axis) > 0.0 {
            cell.width(axis) / bbox.width(axis)
        } else {
            0.0
        };
        if rel < MIN_RELATIVE_WIDTH {
            stuck.push(lower);
            continue;
        }
        let (l, r) = cell.bisect(axis);
        for child in [l, r] {
            if !region.proven_disjoint(&child) {
                let form = bernstein(p, &child);
                heap.push(Cell { lower: form.min(), form });
            }
        }
    }
    if !stuck.is_empty() {
        return NonnegOutcome {
            verdict: Verdict::Unknown {
                cells_remaining: stuck.len(),
                tightest_lower_bound: stuck.iter().copied().fold(f64::INFINITY, f64::min),
                note: "cells reached the minimum width without a decision".into(),
            },
            cells_explored: explored,
        };
    }
    if let Some((x, r)) = spot_check(p, region, bbox) {
        return NonnegOutcome {
            verdict: Verdict::Falsified { witness: x, residual: r },
            cells_explored: explored,
        };
    }
    NonnegOutcome {
        verdict: Verdict::Verified,
        cells_explored: explored,
    }
}

/// A residual polynomial that must be nonnegative on its region.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub poly: Polynomial,
    pub region: Region,
}

/// Instantiates every constraint line of the certificate's condition.
pub fn residuals_for(cert: &Certificate, problem: &ProblemSpec) -> Result<Vec<Residual>, CheckError> {
    let constraints = constraints_for(cert.kind, cert.alpha, problem)?;
    let v = problem.system.as_state_poly(&cert.v)?;
    let ev = one_step_expectation(&v, &problem.system)?;
    let m = cert.m.unwrap_or(0.0);
    Ok(constraints
        .into_iter()
        .map(|c| Residual {
            poly: c.form.instantiate(&v, &ev, cert.beta, m),
            name: c.name,
            region: c.region,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub name: String,
    pub residual: String,
    pub region: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub cells_explored: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Verified,
    Falsified,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub kind: CertificateKind,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub overall: Overall,
    pub constraints: Vec<ConstraintReport>,
    pub cells_explored: usize,
    pub budget_per_constraint: usize,
    pub verify_margin: f64,
}

impl CheckReport {
    pub fn is_verified(&self) -> bool {
        self.overall == Overall::Verified
    }
}

fn check_residual(r: &Residual, budget: usize) -> ConstraintReport {
    let (verdict, cells, region) = match &r.region {
        Region::Point(x) => {
            let val = r.poly.eval(x);
            let verdict = if val > 0.0 {
                Verdict::Verified
            } else {
                Verdict::Falsified {
                    witness: x.clone(),
                    residual: val,
                }
            };
            (verdict, 0, format!("point {x:?}"))
        }
        Region::Set { set, bbox } => {
            let out = check_nonnegativity(&r.poly, set, bbox, budget);
            (out.verdict, out.cells_explored, format!("{set} ∩ {:?}", bbox.bounds()))
        }
    };
    ConstraintReport {
        name: r.name.clone(),
        residual: r.poly.to_string(),
        region,
        verdict,
        cells_explored: cells,
    }
}

/// Checks every constraint of the certificate's condition.
pub fn check_certificate(
    cert: &Certificate,
    problem: &ProblemSpec,
    budget: usize,
) -> Result<CheckReport, CheckError> {
    let residuals = residuals_for(cert, problem)?;
    let constraints: Vec<ConstraintReport> = residuals.par_iter().map(|r| check_residual(r, budget)).collect();
    let overall = if constraints.iter().all(|c| c.verdict.is_verified()) {
        Overall::Verified
    } else if constraints
        .iter()
        .any(|c| matches!(c.verdict, Verdict::Falsified { .. }))
    {
        Overall::Falsified
    } else {
        Overall::Unknown
    };
    Ok(CheckReport {
        kind: cert.kind,
        alpha: cert.alpha,
        beta: cert.beta,
        m: cert.m,
        overall,
        cells_explored: constraints.iter().map(|c| c.cells_explored).sum(),
        constraints,
        budget_per_constraint: budget,
        verify_margin: VERIFY_MARGIN,
    })
}

/// Checks the certificate and, when it is verified, evaluates its bound.
pub fn check_and_bound(
    cert: &Certificate,
    problem: &ProblemSpec,
    budget: usize,
) -> Result<(CheckReport, Option<Result<BoundReport, BoundsError>>), CheckError> {
    let report = check_certificate(cert, problem, budget)?;
    let bound = report
        .is_verified()
        .then(|| cert.bound(&problem.x0, problem.horizon));
    Ok((report, bound))
}

struct SupCell {
    upper: f64,
    form: BernsteinForm,
}

impl PartialEq for SupCell {
    fn eq(&self, o: &Self) -> bool {
        self.upper.total_cmp(&o.upper) == Ordering::Equal
    }
}
impl Eq for SupCell {}
impl PartialOrd for SupCell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for SupCell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper)
    }
}

/// Bracket on `sup v` over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupBracket {
    /// Certified upper bound.
    pub upper: f64,
    /// Largest value attained at an evaluated point.
    pub lower: f64,
    pub cells_explored: usize,
}

/// Certified bracket on the supremum of `v` over `region ∩ bbox`; stops once
/// the bracket is narrower than `tolerance` or the budget runs out (the
/// upper end is sound either way).
pub fn certified_sup_on(
    v: &Polynomial,
    region: &SemialgebraicSet,
    bbox: &HyperBox,
    tolerance: f64,
    budget: usize,
) -> SupBracket {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let mut heap = BinaryHeap::new();
    let mut best = f64::NEG_INFINITY;
    let probe = |cell: &HyperBox, form: &BernsteinForm, best: &mut f64| {
        let mut pts = cell.corners();
        pts.push(cell.center());
        pts.push(form.control_point(form.argmax()));
        for x in pts {
            if in_region(region, bbox, &x) {
                *best = best.max(v.eval(&x));
            }
        }
    };
    if !region.proven_disjoint(bbox) {
        let form = bernstein(v, bbox);
        probe(bbox, &form, &mut best);
        heap.push(SupCell { upper: form.max(), form });
    }
    let mut explored = 0;
    while let Some(SupCell { upper, form }) = heap.pop() {
        if upper - best <= tolerance || explored >= budget {
            return SupBracket {
                upper,
                lower: best.min(upper),
                cells_explored: explored,
            };
        }
        explored += 1;
        let cell = &form.cell;
        let axis = cell.widest_relative_to(bbox);
        if bbox.width(axis) == 0.0 || cell.width(axis) / bbox.width(axis) < MIN_RELATIVE_WIDTH {
            return SupBracket {
                upper,
                lower: best.min(upper),
                cells_explored: explored,
            };
        }
        let (l, r) = cell.bisect(axis);
        for child in [l, r] {
            if !region.proven_disjoint(&child) {
                let f = bernstein(v, &child);
                probe(&child, &f, &mut best);
                heap.push(SupCell { upper: f.max(), form: f });
            }
        }
    }
    // empty region: nothing to bound
    SupBracket {
        upper: f64::NEG_INFINITY,
        lower: f64::NEG_INFINITY,
        cells_explored: explored,
    }
}

/// `M` with `sup_{bbox} v ≤ M ≤ sup_{bbox} v + tolerance`.
pub fn certified_sup(v: &Polynomial, bbox: &HyperBox, tolerance: f64) -> f64 {
    certified_sup_on(v, &SemialgebraicSet::whole_space(), bbox, tolerance, DEFAULT_BUDGET).upper
}
