//! Bound tables for the bundled examples over a degree grid.

use anyhow::Result;
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use ftbarrier::bounds::CertificateKind;
use ftbarrier::bundled;
use ftbarrier::model::{ProblemKind, ProblemSpec};
use ftbarrier::montecarlo::{simulate_event, MCResult};
use ftbarrier::synth::{synthesize, BetaChoice, SynthError, SynthesisOptions};

use crate::output::beta_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    #[value(name = "random_walk")]
    RandomWalk,
    #[value(name = "contraction")]
    Contraction,
}

impl Example {
    fn name(self) -> &'static str {
        match self {
            Example::RandomWalk => "random_walk",
            Example::Contraction => "contraction",
        }
    }

    fn problem(self, kind: ProblemKind) -> ProblemSpec {
        bundled::by_name(self.name(), kind).expect("bundled example")
    }
}

/// One table row: a certificate kind at one α.
struct RowSpec {
    kind: CertificateKind,
    alpha_label: &'static str,
    beta: BetaChoice,
}

fn row(kind: CertificateKind, alpha_label: &'static str) -> RowSpec {
    RowSpec {
        kind,
        alpha_label,
        beta: BetaChoice::Free,
    }
}

fn fixed(kind: CertificateKind, alpha_label: &'static str, beta: f64) -> RowSpec {
    RowSpec {
        kind,
        alpha_label,
        beta: BetaChoice::Fixed(beta),
    }
}

fn row_specs(example: Example, condition: ProblemKind) -> Vec<RowSpec> {
    use CertificateKind::*;
    match (example, condition) {
        (Example::RandomWalk, ProblemKind::Safety) => vec![
            row(SafetyUpperKushner, "1.1"),
            row(SafetyUpperT1, "1/1.1"),
            row(SafetyUpperT1, "1"),
        ],
        (Example::RandomWalk, ProblemKind::ReachAvoid) => vec![
            row(RaUpperKushner, "1.1"),
            row(RaUpperT3, "1/1.1"),
            row(RaUpperT3, "1"),
        ],
        (Example::Contraction, ProblemKind::Safety) => vec![
            row(SafetyUpperKushner, "1.01"),
            row(SafetyUpperKushner, "1.001"),
            row(SafetyUpperT1, "1/1.01"),
            row(SafetyUpperT1, "1/1.001"),
            row(SafetyUpperT1, "1"),
            fixed(SafetyLower, "1.1", 0.0),
        ],
        (Example::Contraction, ProblemKind::ReachAvoid) => vec![
            row(RaUpperKushner, "1.001"),
            row(RaUpperKushner, "1.0001"),
            row(RaUpperKushner, "1"),
            row(RaUpperT3, "1/1.001"),
            row(RaUpperT3, "1/1.0001"),
            row(RaUpperT3, "1"),
            fixed(RaLower, "1.06", 0.0),
        ],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub degree: u32,
    /// Clamped bound of the audited certificate.
    pub bound: Option<f64>,
    /// `ok`, `infeasible`, `audit_failed` or `error`.
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub kind: CertificateKind,
    pub alpha_label: String,
    pub alpha: f64,
    pub beta: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub example: String,
    pub condition: String,
    pub horizon: u32,
    pub rows: Vec<Row>,
    pub monte_carlo: Option<MCResult>,
}

fn cell(problem: &ProblemSpec, spec: &RowSpec, alpha: f64, degree: u32, options: &SynthesisOptions) -> Cell {
    let opts = SynthesisOptions {
        degree,
        ..options.clone()
    };
    let (bound, status) = match synthesize(problem, spec.kind, alpha, spec.beta, &opts) {
        Ok(s) => (Some(s.bound.clamped), "ok"),
        Err(SynthError::Infeasible { .. }) => (None, "infeasible"),
        Err(SynthError::AuditFailed(_)) => (None, "audit_failed"),
        Err(_) => (None, "error"),
    };
    Cell {
        degree,
        bound,
        status: status.into(),
    }
}

/// Runs every table of `example` (both examples when `None`). A zero
/// `n_paths` skips the Monte-Carlo reference rows.
pub fn run(
    example: Option<Example>,
    degrees: &[u32],
    n_paths: u64,
    seed: u64,
    options: &SynthesisOptions,
) -> Result<Vec<Table>> {
    let examples = match example {
        Some(e) => vec![e],
        None => vec![Example::RandomWalk, Example::Contraction],
    };
    let mut tables = Vec::new();
    for ex in examples {
        for condition in [ProblemKind::Safety, ProblemKind::ReachAvoid] {
            let problem = ex.problem(condition);
            let specs = row_specs(ex, condition);
            let mut rows = Vec::with_capacity(specs.len());
            for spec in &specs {
                let alpha = crate::parse_number(spec.alpha_label)?;
                let cells = degrees
                    .par_iter()
                    .map(|&d| cell(&problem, spec, alpha, d, options))
                    .collect();
                rows.push(Row {
                    kind: spec.kind,
                    alpha_label: spec.alpha_label.into(),
                    alpha,
                    beta: beta_label(&spec.beta),
                    cells,
                });
            }
            let monte_carlo = if n_paths > 0 {
                Some(simulate_event(&problem, n_paths, seed)?)
            } else {
                None
            };
            tables.push(Table {
                example: ex.name().into(),
                condition: match condition {
                    ProblemKind::Safety => "safety".into(),
                    ProblemKind::ReachAvoid => "reach_avoid".into(),
                },
                horizon: problem.horizon,
                rows,
                monte_carlo,
            });
        }
    }
    Ok(tables)
}
