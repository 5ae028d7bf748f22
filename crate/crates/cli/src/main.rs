//! `ftbarrier` command-line tool.

mod output;
mod problem;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ftbarrier::bounds::{evaluate_bound, CertificateFile, CertificateKind};
use ftbarrier::checker::{check_and_bound, DEFAULT_BUDGET};
use ftbarrier::model::ProblemKind;
use ftbarrier::montecarlo::{exact_probability, simulate_event};
use ftbarrier::synth::{sweep, BetaChoice, SweepGrid, SynthesisOptions};

use output::{Emitter, Format};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "ftbarrier", version, about = "Finite-time safety and reach-avoid bounds for stochastic polynomial systems")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem file, or the name of a bundled example (random_walk, contraction).
    #[arg(long, global = true)]
    problem: Option<String>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EventKind {
    Safety,
    ReachAvoid,
}

impl From<EventKind> for ProblemKind {
    fn from(k: EventKind) -> ProblemKind {
        match k {
            EventKind::Safety => ProblemKind::Safety,
            EventKind::ReachAvoid => ProblemKind::ReachAvoid,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo estimate of the exit or reach-avoid probability.
    Simulate {
        /// Event to estimate; defaults to the problem file's kind.
        #[arg(long, value_enum)]
        kind: Option<EventKind>,
        /// Number of sample paths.
        #[arg(long = "n", default_value_t = 100_000)]
        n_paths: u64,
    },
    /// Exact probability by enumeration (finite-support disturbances only).
    Exact {
        #[arg(long, value_enum)]
        kind: Option<EventKind>,
        /// Horizon; defaults to the problem's.
        #[arg(long = "N")]
        horizon: Option<u32>,
    },
    /// Check a certificate file and evaluate its bound when verified.
    Check {
        #[arg(long)]
        certificate: PathBuf,
        /// Cells explored per constraint before giving up.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Evaluate a closed-form bound from explicit parameters.
    Bound {
        #[arg(long)]
        kind: CertificateKind,
        #[arg(long, allow_negative_numbers = true)]
        v0: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long = "M", allow_negative_numbers = true)]
        m: Option<f64>,
        #[arg(long = "N")]
        n: u32,
    },
    /// Synthesize certificates over an α × β × degree grid and keep the best.
    Synthesize {
        #[arg(long)]
        kind: CertificateKind,
        /// Comma-separated α values; `1/1.1` style fractions are accepted.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        alphas: Vec<String>,
        /// Comma-separated β values, or `free` to optimize β in the LP.
        #[arg(long, value_delimiter = ',', default_value = "free")]
        betas: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        degrees: Vec<u32>,
        #[command(flatten)]
        lp: LpArgs,
    },
    /// Recompute the bound tables of both bundled examples.
    Reproduce {
        /// Restrict to one bundled example.
        #[arg(long, value_enum)]
        example: Option<reproduce::Example>,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14,16,18,20")]
        degrees: Vec<u32>,
        /// Paths for the Monte-Carlo reference row of each table.
        #[arg(long = "n", default_value_t = 200_000)]
        n_paths: u64,
        #[command(flatten)]
        lp: LpArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct LpArgs {
    /// Bisections applied to each region's bounding box.
    #[arg(long, default_value_t = SynthesisOptions::default().depth)]
    depth: u32,
    /// Extra Bernstein degree beyond the residual degree.
    #[arg(long, default_value_t = 0)]
    elevation: u32,
    /// Cells explored per constraint by the audit.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
}

impl LpArgs {
    fn options(&self) -> SynthesisOptions {
        SynthesisOptions {
            depth: self.depth,
            elevation: self.elevation,
            audit_budget: self.budget,
            ..Default::default()
        }
    }
}

/// Parses `1.1`, `1/1.1` or `2/3`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>()? / b.trim().parse::<f64>()?,
        None => s.parse::<f64>()?,
    };
    if !v.is_finite() {
        bail!("`{s}` is not a finite number");
    }
    Ok(v)
}

fn parse_beta(s: &str) -> Result<BetaChoice> {
    if s.trim().eq_ignore_ascii_case("free") {
        Ok(BetaChoice::Free)
    } else {
        Ok(BetaChoice::Fixed(parse_number(s)?))
    }
}

#[derive(Serialize)]
struct ExactOutput {
    probability: f64,
    horizon: u32,
    event: ftbarrier::montecarlo::Event,
}

#[derive(Serialize)]
pub struct CheckOutput {
    pub check: ftbarrier::checker::CheckReport,
    pub bound: Option<ftbarrier::bounds::BoundReport>,
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let emit = Emitter::new(common.format, common.out.clone());
    match &cli.command {
        Command::Simulate { kind, n_paths } => {
            let p = problem::load(common.problem.as_deref(), kind.map(Into::into))?;
            let r = simulate_event(&p, *n_paths, common.seed)?;
            emit.record(&r)
        }
        Command::Exact { kind, horizon } => {
            let p = problem::load(common.problem.as_deref(), kind.map(Into::into))?;
            let n = horizon.unwrap_or(p.horizon);
            let probability = exact_probability(&p, n)?;
            emit.record(&ExactOutput {
                probability,
                horizon: n,
                event: ftbarrier::montecarlo::Event::of(p.kind),
            })
        }
        Command::Check { certificate, budget } => {
            let text = std::fs::read_to_string(certificate)
                .with_context(|| format!("reading {}", certificate.display()))?;
            let file: CertificateFile =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", certificate.display()))?;
            let p = problem::load(common.problem.as_deref(), Some(file.kind.problem_kind()))?;
            let cert = file
                .to_certificate(&p.system.state_vars)
                .map_err(anyhow::Error::msg)?;
            let (check, bound) = check_and_bound(&cert, &p, *budget)?;
            let bound = bound.transpose()?;
            let out = CheckOutput { check, bound };
            emit.json_or_table(&out, output::check_table(&out))
        }
        Command::Bound {
            kind,
            v0,
            alpha,
            beta,
            m,
            n,
        } => {
            let r = evaluate_bound(*kind, *v0, *alpha, *beta, *m, *n)?;
            emit.record(&r)
        }
        Command::Synthesize {
            kind,
            alphas,
            betas,
            degrees,
            lp,
        } => {
            let grid = SweepGrid {
                alphas: alphas.iter().map(|a| parse_number(a)).collect::<Result<_>>()?,
                betas: betas.iter().map(|b| parse_beta(b)).collect::<Result<_>>()?,
                degrees: degrees.clone(),
            };
            if grid.alphas.is_empty() || grid.betas.is_empty() || grid.degrees.is_empty() {
                bail!("the α, β and degree grids must be nonempty");
            }
            let p = problem::load(common.problem.as_deref(), Some(kind.problem_kind()))?;
            let result = sweep(&p, *kind, &grid, &lp.options())?;
            emit.json_or_table(&result, output::sweep_table(&result))
        }
        Command::Reproduce {
            example,
            degrees,
            n_paths,
            lp,
        } => {
            if degrees.is_empty() {
                bail!("the degree grid must be nonempty");
            }
            let tables = reproduce::run(*example, degrees, *n_paths, common.seed, &lp.options())?;
            emit.json_or_table(&tables, output::reproduce_table(&tables, degrees))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            let body = serde_json::json!({ "error": e.to_string(), "causes": chain });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_fractions() {
        assert_eq!(parse_number("1.1").unwrap(), 1.1);
        assert_eq!(parse_number("1/1.1").unwrap(), 1.0 / 1.1);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("abc").is_err());
        assert_eq!(parse_beta("free").unwrap(), BetaChoice::Free);
        assert_eq!(parse_beta("0").unwrap(), BetaChoice::Fixed(0.0));
    }
}
