//! Certificate synthesis by linear programming over Bernstein coefficients.
//!
//! Once `α` (and `β`, unless it is left free) is fixed, every constraint
//! line is affine in the coefficients of `v`. Each region's bounding box is
//! split into `2^depth` cells; on every cell that may meet the region we ask
//! for nonnegative Bernstein coefficients of `residual − Σ λ_i g_i`, where
//! `g_i ≥ 0` are the region's conjuncts that are not already proven on the
//! cell and `λ_i ≥ 0` are per-cell multipliers. On cells inside the region
//! there are no multipliers. Every LP optimum is audited by the checker.
//!
//! `v` is expanded in tensor Chebyshev polynomials of the extended-domain
//! box mapped to `[-1, 1]`; monomials are badly conditioned at high degree.

mod lp;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{
    validate_certificate_params, BoundReport, BoundsError, Certificate, CertificateFile, CertificateKind,
};
use crate::checker::{
    certified_sup_on, check_certificate, constraints_for, CheckError, CheckReport, Region, DEFAULT_BUDGET,
};
use crate::model::{one_step_expectation, ProblemSpec};
use crate::polynomial::{bernstein_coefficients, Exponents, HyperBox, Polynomial};

pub use lp::{LinearProgram, LpError, LpSolution};

/// Gap kept between `v(x0)` and 1 for the strict Kushner condition.
const STRICT_GAP: f64 = 1e-9;
/// Tolerance used when certifying `M = sup v` on the extended domain.
const SUP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    InvalidParameters(#[from] BoundsError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("β can only be left free for upper-bound kinds, not {0}")]
    FreeBetaUnsupported(CertificateKind),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("no certificate of degree {degree} at depth {depth} ({reason})")]
    Infeasible { degree: u32, depth: u32, reason: String },
    #[error("the LP optimum was rejected by the checker")]
    AuditFailed(Box<CheckReport>),
    #[error("every grid point was infeasible or failed the audit ({})", summarize(.attempts))]
    AllInfeasible { attempts: Vec<SweepAttempt> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum BetaChoice {
    Fixed(f64),
    /// β is an LP variable over the range where the bound is affine in it.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisOptions {
    /// Total degree of `v`.
    pub degree: u32,
    /// Number of bisections applied to each region's bounding box.
    pub depth: u32,
    /// Extra Bernstein degree per variable beyond the residual degree.
    pub elevation: u32,
    /// Lower bound imposed on every Bernstein coefficient.
    pub margin: f64,
    pub lp_tolerance: f64,
    pub audit_budget: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            degree: 2,
            depth: 6,
            elevation: 0,
            margin: 0.0,
            lp_tolerance: 1e-10,
            audit_budget: DEFAULT_BUDGET,
        }
    }
}

/// Grid explored by `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<BetaChoice>,
    pub degrees: Vec<u32>,
}

/// Meaning of each LP column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LpVariable {
    /// Coefficient of the tensor Chebyshev polynomial with these degrees.
    Basis(Exponents),
    Beta,
    M,
    /// Multiplier of conjunct `conjunct` of a region piece on one cell.
    Multiplier { constraint: String, cell: usize, conjunct: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub variables: Vec<LpVariable>,
    /// Polynomial of each `LpVariable::Basis` column, in column order.
    pub basis: Vec<Polynomial>,
    pub program: LinearProgram,
    /// The LP minimizes `objective_sign × (bound-monotone objective)`.
    pub maximize: bool,
    pub beta_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpStats {
    pub rows: usize,
    pub variables: usize,
    pub iterations: usize,
    pub objective: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Synthesis {
    pub certificate: CertificateFile,
    pub degree: u32,
    pub depth: u32,
    pub bound: BoundReport,
    pub lp: LpStats,
    pub check: CheckReport,
    #[serde(skip)]
    pub cert: Certificate,
}

/// All exponent vectors over `n` variables with total degree ≤ `d`.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<Exponents> {
    fn rec(n: usize, left: u32, cur: &mut Exponents, out: &mut Vec<Exponents>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// Range of β over which the upper bound is affine in `(v0, β)`.
fn free_beta_range(kind: CertificateKind, alpha: f64) -> Result<(f64, f64), SynthError> {
    match kind {
        CertificateKind::SafetyUpperT1 => Ok((if alpha == 1.0 { 0.0 } else { 1.0 - 1.0 / alpha }, 1.0)),
        CertificateKind::RaUpperT3 => Ok((0.0, 1.0)),
        CertificateKind::SafetyUpperKushner | CertificateKind::RaUpperKushner => {
            Ok((if alpha == 1.0 { 0.0 } else { (alpha - 1.0) / alpha }, 1.0))
        }
        k => Err(SynthError::FreeBetaUnsupported(k)),
    }
}

/// `(α^{-N}, (1 − α^{-N})α/(α − 1))`: the bound is `a·v0 + b·β` on the
/// affine branch.
fn affine_upper_coefficients(alpha: f64, n: u32) -> (f64, f64) {
    if alpha == 1.0 {
        return (1.0, n as f64);
    }
    let e = -(n as f64) * (alpha - 1.0).ln_1p();
    (e.exp(), -e.exp_m1() / (alpha - 1.0) * alpha)
}

/// `Π_i T_{e_i}((x_i − c_i)/h_i)` for the box with centers `c` and half-widths `h`.
pub fn chebyshev_basis(vars: &[String], bbox: &HyperBox, exps: &[Exponents]) -> Vec<Polynomial> {
    let top = exps.iter().flatten().copied().max().unwrap_or(0) as usize;
    // per[i][k] = T_k on axis i
    let per: Vec<Vec<Polynomial>> = (0..vars.len())
        .map(|i| {
            let c = 0.5 * (bbox.lo(i) + bbox.hi(i));
            let h = 0.5 * bbox.width(i);
            let x = Polynomial::var(vars, &vars[i]).expect("state variable");
            let u = x.add_constant(-c).scale(1.0 / h);
            let mut t = vec![Polynomial::constant(vars, 1.0), u.clone()];
            while t.len() <= top {
                let k = t.len();
                let next = &(&u * &t[k - 1]).scale(2.0) - &t[k - 2];
                t.push(next);
            }
            t
        })
        .collect();
    exps.iter()
        .map(|e| {
            e.iter()
                .enumerate()
                .fold(Polynomial::constant(vars, 1.0), |acc, (i, &k)| &acc * &per[i][k as usize])
        })
        .collect()
}

/// Builds the LP for the given kind and parameters.
pub fn build_lp(
    problem: &ProblemSpec,
    kind: CertificateKind,
    alpha: f64,
    beta: BetaChoice,
    options: &SynthesisOptions,
) -> Result<LpModel, SynthError> {
    let n_state = problem.system.state_dim();
    let state_vars = problem.system.state_vars.clone();
    // validate α (and β when fixed) before building anything
    let m_probe = kind.is_lower().then_some(1.0);
    let beta_range = match beta {
        BetaChoice::Fixed(b) => {
            validate_certificate_params(kind, alpha, b, m_probe)?;
            None
        }
        BetaChoice::Free => {
            let r = free_beta_range(kind, alpha)?;
            validate_certificate_params(kind, alpha, r.1, m_probe)?;
            Some(r)
        }
    };
    if !(options.margin.is_finite() && options.lp_tolerance > 0.0) {
        return Err(SynthError::InvalidOptions("margin must be finite and tolerance positive".into()));
    }
    let constraints = constraints_for(kind, alpha, problem)?;

    let monos = monomials_up_to(n_state, options.degree);
    let mut variables: Vec<LpVariable> = monos.iter().cloned().map(LpVariable::Basis).collect();
    let beta_idx = beta_range.map(|_| {
        variables.push(LpVariable::Beta);
        variables.len() - 1
    });
    let m_idx = kind.is_lower().then(|| {
        variables.push(LpVariable::M);
        variables.len() - 1
    });
    let basis = chebyshev_basis(&state_vars, &problem.extended_domain.bbox, &monos);
    let expectations: Vec<Polynomial> = basis
        .iter()
        .map(|b| one_step_expectation(b, &problem.system))
        .collect::<Result<_, _>>()
        .map_err(CheckError::from)?;

    // rows are collected first, since multipliers add columns as we go
    struct Row {
        coeffs: Vec<(usize, f64)>,
        rhs: f64,
    }
    let mut rows: Vec<Row> = Vec::new();
    let fixed_beta = match beta {
        BetaChoice::Fixed(b) => b,
        BetaChoice::Free => 0.0,
    };
    for c in &constraints {
        let f = c.form;
        let per_mono: Vec<Polynomial> = basis
            .iter()
            .zip(&expectations)
            .map(|(b, e)| &b.scale(f.v) + &e.scale(f.ev))
            .collect();
        // constant part when β and M are treated as variables
        let constant = f.one + if beta_idx.is_none() { f.beta * fixed_beta } else { 0.0 };
        match &c.region {
            Region::Point(x) => {
                let coeffs = basis.iter().enumerate().map(|(j, b)| (j, f.v * b.eval(x))).collect();
                // strict: residual ≥ STRICT_GAP
                rows.push(Row {
                    coeffs,
                    rhs: STRICT_GAP - constant,
                });
            }
            Region::Set { set, bbox } => {
                let mut degree = vec![0u32; n_state];
                let widen = |degree: &mut Vec<u32>, p: &Polynomial| {
                    for (d, k) in degree.iter_mut().zip(p.degrees()) {
                        *d = (*d).max(k);
                    }
                };
                for p in &per_mono {
                    widen(&mut degree, p);
                }
                for g in &set.conjuncts {
                    widen(&mut degree, &g.poly);
                }
                for d in degree.iter_mut() {
                    *d += options.elevation;
                }
                let cells: Vec<HyperBox> = bbox
                    .subdivide(options.depth)
                    .into_iter()
                    .filter(|cell| !set.proven_disjoint(cell))
                    .collect();
                for (ci, cell) in cells.iter().enumerate() {
                    let mono_bern: Vec<Vec<f64>> = per_mono
                        .iter()
                        .map(|p| bernstein_coefficients(p, cell, &degree).expect("degree covers the residual"))
                        .collect();
                    let mut mult: Vec<(usize, Vec<f64>)> = Vec::new();
                    for gi in set.unproven_conjuncts(cell) {
                        variables.push(LpVariable::Multiplier {
                            constraint: c.name.clone(),
                            cell: ci,
                            conjunct: gi,
                        });
                        let g = set.conjuncts[gi].as_nonneg();
                        let gb = bernstein_coefficients(&g, cell, &degree).expect("degree covers the conjunct");
                        let idx = variables.len() - 1;
                        rows.push(Row {
                            coeffs: vec![(idx, 1.0)],
                            rhs: 0.0,
                        });
                        mult.push((idx, gb));
                    }
                    for k in 0..mono_bern[0].len() {
                        let mut coeffs: Vec<(usize, f64)> =
                            mono_bern.iter().enumerate().map(|(j, b)| (j, b[k])).collect();
                        if let Some(bi) = beta_idx {
                            coeffs.push((bi, f.beta));
                        }
                        if let Some(mi) = m_idx {
                            coeffs.push((mi, f.m));
                        }
                        for (idx, gb) in &mult {
                            coeffs.push((*idx, -gb[k]));
                        }
                        rows.push(Row {
                            coeffs,
                            rhs: options.margin - constant,
                        });
                    }
                }
            }
        }
    }
    if let (Some(bi), Some((lo, hi))) = (beta_idx, beta_range) {
        rows.push(Row {
            coeffs: vec![(bi, 1.0)],
            rhs: lo,
        });
        rows.push(Row {
            coeffs: vec![(bi, -1.0)],
            rhs: -hi,
        });
    }

    let nv = variables.len();
    let x0_monos: Vec<f64> = basis.iter().map(|b| b.eval(&problem.x0)).collect();
    let mut objective = vec![0.0; nv];
    let n = problem.horizon;
    let maximize = kind.is_lower();
    if maximize {
        // maximize A·v0 − M, i.e. minimize M − A·v0
        let a = if alpha == 1.0 {
            1.0
        } else {
            ((n as f64 + 1.0) * (alpha - 1.0).ln_1p()).exp()
        };
        for (j, v) in x0_monos.iter().enumerate() {
            objective[j] = -a * v;
        }
        objective[m_idx.expect("lower kinds carry M")] = 1.0;
    } else {
        let (a, b) = affine_upper_coefficients(alpha, n);
        for (j, v) in x0_monos.iter().enumerate() {
            objective[j] = a * v;
        }
        if let Some(bi) = beta_idx {
            objective[bi] = b;
        }
    }
    let mut program = LinearProgram::new(nv, objective);
    for r in rows {
        let mut a = vec![0.0; nv];
        for (j, v) in r.coeffs {
            a[j] += v;
        }
        program.push_row(a, r.rhs);
    }
    Ok(LpModel {
        variables,
        basis,
        program,
        maximize,
        beta_range,
    })
}

/// Solves the LP and audits the resulting certificate with the checker.
pub fn synthesize(
    problem: &ProblemSpec,
    kind: CertificateKind,
    alpha: f64,
    beta: BetaChoice,
    options: &SynthesisOptions,
) -> Result<Synthesis, SynthError> {
    let model = build_lp(problem, kind, alpha, beta, options)?;
    let infeasible = |reason: &str| SynthError::Infeasible {
        degree: options.degree,
        depth: options.depth,
        reason: reason.into(),
    };
    let sol = match model.program.solve(options.lp_tolerance) {
        Ok(s) => s,
        Err(LpError::Infeasible) => return Err(infeasible("LP infeasible")),
        Err(LpError::Unbounded) => return Err(infeasible("LP unbounded")),
        Err(e @ LpError::IterationLimit(_)) => return Err(infeasible(&e.to_string())),
    };
    let state_vars = &problem.system.state_vars;
    let mut v = Polynomial::zero(state_vars);
    let mut beta_val = match beta {
        BetaChoice::Fixed(b) => b,
        BetaChoice::Free => 0.0,
    };
    for (var, &x) in model.variables.iter().zip(&sol.x) {
        match var {
            LpVariable::Basis(_) => {}
            LpVariable::Beta => beta_val = x,
            _ => {}
        }
    }
    if let Some((lo, hi)) = model.beta_range {
        beta_val = beta_val.clamp(lo, hi);
    }
    for (b, &x) in model.basis.iter().zip(&sol.x) {
        v = &v + &b.scale(x);
    }
    let m = if kind.is_lower() {
        // certify sup v on the extended domain rather than trusting the LP's M
        let d = &problem.extended_domain;
        Some(certified_sup_on(&v, &d.set, &d.bbox, SUP_TOLERANCE, DEFAULT_BUDGET).upper)
    } else {
        None
    };
    let cert = Certificate::new(v, kind, alpha, beta_val, m)?;
    let check = check_certificate(&cert, problem, options.audit_budget)?;
    if !check.is_verified() {
        return Err(SynthError::AuditFailed(Box::new(check)));
    }
    let bound = cert.bound(&problem.x0, problem.horizon)?;
    Ok(Synthesis {
        certificate: CertificateFile::from_certificate(&cert),
        degree: options.degree,
        depth: options.depth,
        bound,
        lp: LpStats {
            rows: model.program.rows.len(),
            variables: model.variables.len(),
            iterations: sol.iterations,
            objective: sol.objective,
            max_violation: sol.max_violation,
        },
        check,
        cert,
    })
}

/// One grid point of a sweep and what became of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAttempt {
    pub alpha: f64,
    pub beta: BetaChoice,
    pub degree: u32,
    /// Clamped bound when the certificate was audited successfully.
    pub bound: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub best: Synthesis,
    pub attempts: Vec<SweepAttempt>,
}

fn summarize(attempts: &[SweepAttempt]) -> String {
    let mut errors: Vec<&str> = attempts.iter().filter_map(|a| a.error.as_deref()).collect();
    errors.sort_unstable();
    errors.dedup();
    match errors.as_slice() {
        [] => "empty grid".into(),
        [e] => e.to_string(),
        [e, rest @ ..] => format!("{e}; and {} other errors", rest.len()),
    }
}

/// Whether `a` is preferable to `b` as a sweep result.
fn better(kind: CertificateKind, a: &Synthesis, b: &Synthesis) -> bool {
    let (x, y) = (a.bound.raw, b.bound.raw);
    let ord = if kind.is_lower() { y.total_cmp(&x) } else { x.total_cmp(&y) };
    match ord {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            (a.degree, (a.cert.alpha - 1.0).abs()) < (b.degree, (b.cert.alpha - 1.0).abs())
        }
    }
}

/// Runs `synthesize` over the grid and keeps the best audited bound.
pub fn sweep(
    problem: &ProblemSpec,
    kind: CertificateKind,
    grid: &SweepGrid,
    options: &SynthesisOptions,
) -> Result<SweepResult, SynthError> {
    let points: Vec<(f64, BetaChoice, u32)> = grid
        .alphas
        .iter()
        .flat_map(|&a| {
            grid.betas
                .iter()
                .flat_map(move |&b| grid.degrees.iter().map(move |&d| (a, b, d)))
        })
        .collect();
    let outcomes: Vec<((f64, BetaChoice, u32), Result<Synthesis, SynthError>)> = points
        .par_iter()
        .map(|&(a, b, d)| {
            let opts = SynthesisOptions {
                degree: d,
                ..options.clone()
            };
            ((a, b, d), synthesize(problem, kind, a, b, &opts))
        })
        .collect();
    let mut best: Option<Synthesis> = None;
    let mut attempts = Vec::with_capacity(outcomes.len());
    for ((alpha, beta, degree), r) in outcomes {
        match r {
            Ok(s) => {
                attempts.push(SweepAttempt {
                    alpha,
                    beta,
                    degree,
                    bound: Some(s.bound.clamped),
                    error: None,
                });
                if best.as_ref().is_none_or(|b| better(kind, &s, b)) {
                    best = Some(s);
                }
            }
            Err(e) => attempts.push(SweepAttempt {
                alpha,
                beta,
                degree,
                bound: None,
                error: Some(e.to_string()),
            }),
        }
    }
    match best {
        Some(best) => Ok(SweepResult { best, attempts }),
        None => Err(SynthError::AllInfeasible { attempts }),
    }
}
