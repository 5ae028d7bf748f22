#![allow(dead_code)]

use ftbarrier::bounds::{recursion_oracle, BoundCase, BoundReport, CertificateKind, Direction};
use ftbarrier::bundled;
use ftbarrier::model::{ProblemKind, ProblemSpec};
use ftbarrier::montecarlo::simulate_switched_coupled;
use ftbarrier::synth::{synthesize, BetaChoice, Synthesis, SynthesisOptions};
use rand::Rng;

/// A parameter tuple that passes validation for its kind.
#[derive(Debug, Clone, Copy)]
pub struct Tuple {
    pub kind: CertificateKind,
    pub v0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m: Option<f64>,
    pub n: u32,
}

/// Draws α from a range, hitting the endpoint `pin` one time in five.
fn alpha_in<R: Rng>(rng: &mut R, lo: f64, hi: f64, pin: Option<f64>) -> f64 {
    match pin {
        Some(p) if rng.random_bool(0.2) => p,
        _ => rng.random_range(lo..hi),
    }
}

pub fn random_tuple<R: Rng>(rng: &mut R, kind: CertificateKind) -> Tuple {
    let n = rng.random_range(0..=60);
    let (v0, alpha, beta, m) = match kind {
        CertificateKind::SafetyUpperT1 => {
            let a = alpha_in(rng, 0.5, 1.0, Some(1.0));
            (rng.random_range(0.0..1.0), a, rng.random_range(-0.5..=1.0), None)
        }
        CertificateKind::SafetyUpperKushner | CertificateKind::RaUpperKushner => {
            let a = alpha_in(rng, 1.0, 2.0, Some(1.0));
            (rng.random_range(0.0..1.0), a, rng.random_range(0.0..=1.0), None)
        }
        CertificateKind::RaUpperT3 => {
            let a = alpha_in(rng, 0.5, 1.0, Some(1.0));
            (rng.random_range(0.0..1.0), a, rng.random_range(0.0..=1.0), None)
        }
        CertificateKind::SafetyLower | CertificateKind::RaLower => {
            let pin = (kind == CertificateKind::SafetyLower).then_some(1.0);
            let mut a = alpha_in(rng, 1.0, 1.5, pin);
            if a == 1.0 && kind == CertificateKind::RaLower {
                a = 1.25;
            }
            // β > 1 − α, kept away from the pole at α + β = 1
            let b = rng.random_range(1.0 - a + 1e-3..=1.0);
            let m = rng.random_range(0.0..3.0);
            (rng.random_range(0.0..=m), a, b, Some(m))
        }
    };
    Tuple { kind, v0, alpha, beta, m, n }
}

/// Independent evaluation of a report by iterating the chain that its
/// closed form sums.
pub fn oracle_for(report: &BoundReport, case: BoundCase) -> f64 {
    let (v0, a, b, n) = (report.v0, report.alpha, report.beta, report.n);
    match case {
        BoundCase::Linear | BoundCase::Geometric => recursion_oracle(v0, None, a, b, n, Direction::Upper),
        // 1 - (1-v0)(1-β)^N is the chain u ↦ (1-β)u + β
        BoundCase::Complement => recursion_oracle(v0, None, 1.0 / (1.0 - b), b, n, Direction::Upper),
        BoundCase::LowerGeometric | BoundCase::LowerLinear => {
            recursion_oracle(v0, report.m, a, b, n, Direction::Lower)
        }
    }
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

pub const COUPLED_PATHS: u64 = 10_000;

fn in_extended_minus_safe(p: &ProblemSpec, x: &[f64]) -> bool {
    p.extended_domain.set.contains(x) && p.extended_domain.bbox.contains(x) && !p.safe_set.contains(x)
}

/// Path-wise exit coupling between the original and the switched system.
pub fn exit_coupling_holds(p: &ProblemSpec) -> Result<(), String> {
    let paths = simulate_switched_coupled(p, COUPLED_PATHS, 2024).map_err(|e| e.to_string())?;
    let n = p.horizon as usize;
    let mut counts = vec![0u64; n + 1];
    for path in &paths {
        let mut exited = false;
        for i in 0..=n {
            exited |= !p.safe_set.contains(&path.original.states[i]);
            let frozen_outside = in_extended_minus_safe(p, &path.switched.states[i]);
            if exited != frozen_outside {
                return Err(format!("exit coupling broken at step {i}"));
            }
            counts[i] += frozen_outside as u64;
        }
        if let Some(first) = (0..=n).find(|&i| !p.safe_set.contains(&path.original.states[i])) {
            if !path.switched.states[first..].iter().all(|s| *s == path.switched.states[first]) {
                return Err(format!("switched path moves after its exit at step {first}"));
            }
        }
    }
    for w in counts.windows(2) {
        let q = w[0] as f64 / COUPLED_PATHS as f64;
        let se = (q * (1.0 - q) / COUPLED_PATHS as f64).sqrt();
        if (w[1] as f64 / COUPLED_PATHS as f64) < q - 3.0 * se {
            return Err(format!("exit frequency decreases: {w:?}"));
        }
    }
    Ok(())
}

/// Path-wise reach coupling: the switched path sits in the target exactly
/// from the first time the original reaches it without leaving X.
pub fn reach_coupling_holds(p: &ProblemSpec) -> Result<(), String> {
    let paths = simulate_switched_coupled(p, COUPLED_PATHS, 77).map_err(|e| e.to_string())?;
    let n = p.horizon as usize;
    for path in &paths {
        let mut reached = false;
        let mut left = false;
        for i in 0..=n {
            let x = &path.original.states[i];
            if !reached && !left {
                if !p.safe_set.contains(x) {
                    left = true;
                } else if p.in_target(x) {
                    reached = true;
                }
            }
            if reached != p.in_target(&path.switched.states[i]) {
                return Err(format!("reach coupling broken at step {i}"));
            }
        }
        if let Some(k) = (0..=n).find(|&i| p.in_target(&path.switched.states[i])) {
            if !path.switched.states[k..].iter().all(|s| *s == path.switched.states[k]) {
                return Err(format!("switched path moves after reaching the target at step {k}"));
            }
        }
    }
    Ok(())
}

pub fn options(degree: u32, depth: u32) -> SynthesisOptions {
    SynthesisOptions {
        degree,
        depth,
        ..Default::default()
    }
}

pub struct Case {
    pub problem: ProblemSpec,
    pub kind: CertificateKind,
    pub alpha: f64,
    pub beta: BetaChoice,
}

/// One certificate kind per example and condition, at parameters that are
/// feasible from low degree on.
pub fn cases() -> Vec<Case> {
    vec![
        Case {
            problem: bundled::random_walk(ProblemKind::Safety),
            kind: CertificateKind::SafetyUpperT1,
            alpha: 1.0 / 1.1,
            beta: BetaChoice::Free,
        },
        Case {
            problem: bundled::random_walk(ProblemKind::ReachAvoid),
            kind: CertificateKind::RaUpperT3,
            alpha: 1.0,
            beta: BetaChoice::Free,
        },
        Case {
            problem: bundled::contraction(ProblemKind::Safety),
            kind: CertificateKind::SafetyUpperT1,
            alpha: 1.0,
            beta: BetaChoice::Free,
        },
        Case {
            problem: bundled::contraction(ProblemKind::Safety),
            kind: CertificateKind::SafetyLower,
            alpha: 1.1,
            beta: BetaChoice::Fixed(0.0),
        },
        Case {
            problem: bundled::contraction(ProblemKind::ReachAvoid),
            kind: CertificateKind::RaLower,
            alpha: 1.06,
            beta: BetaChoice::Fixed(0.0),
        },
    ]
}

pub fn run(c: &Case, degree: u32, depth: u32) -> Synthesis {
    synthesize(&c.problem, c.kind, c.alpha, c.beta, &options(degree, depth))
        .unwrap_or_else(|e| panic!("{} degree {degree} depth {depth}: {e}", c.kind))
}

/// True when `next` is no worse than `prev` up to `tol`.
pub fn no_worse(kind: CertificateKind, prev: f64, next: f64, tol: f64) -> bool {
    if kind.is_lower() {
        next >= prev - tol
    } else {
        next <= prev + tol
    }
}

pub const LP_TOL: f64 = 1e-7;
