//! Monte-Carlo estimation of the exit and reach-avoid probabilities,
//! coupled simulation of the original and frozen systems, and exact
//! enumeration for finite-support disturbances.
//!
//! Path `i` of a run with seed `s` draws from `ChaCha8Rng::seed_from_u64(s)`
//! on stream `i`, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::model::{
    switched_step_reach_avoid, switched_step_safety, DisturbanceSpec, ProblemKind, ProblemSpec,
};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;
/// Largest number of disturbance sequences `exact_probability` will enumerate.
pub const EXACT_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("initial state violates the problem precondition: {0}")]
    InitialState(String),
    #[error("n_paths must be at least 1")]
    NoPaths,
    #[error("exact enumeration needs a finite-support disturbance")]
    NotFinite,
    #[error("exact enumeration of {points}^{horizon} sequences exceeds the budget of 1e7")]
    BudgetExceeded { points: usize, horizon: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    /// Leaves the safe set within the horizon.
    Exit,
    /// Hits the target within the horizon while staying in the safe set.
    ReachAvoid,
}

impl Event {
    pub fn of(kind: ProblemKind) -> Event {
        match kind {
            ProblemKind::Safety => Event::Exit,
            ProblemKind::ReachAvoid => Event::ReachAvoid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub estimate: f64,
    pub n: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `N + 1` states.
    pub states: Vec<Vec<f64>>,
    /// `N` disturbances; `disturbances[l]` drives `states[l] → states[l+1]`.
    pub disturbances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPath {
    pub original: Trajectory,
    pub switched: Trajectory,
}

/// Exact (Clopper–Pearson) two-sided interval for `k` successes in `n`
/// trials at the given confidence level.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n);
    let tail = (1.0 - level) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).unwrap().inverse_cdf(tail)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).unwrap().inverse_cdf(1.0 - tail)
    };
    (lo, hi)
}

fn check_initial(problem: &ProblemSpec) -> Result<(), McError> {
    let x0 = &problem.x0;
    if !problem.safe_set.contains(x0) {
        return Err(McError::InitialState(format!("x0 = {x0:?} ∉ X")));
    }
    if problem.kind == ProblemKind::ReachAvoid && problem.in_target(x0) {
        return Err(McError::InitialState(format!("x0 = {x0:?} ∈ X_r")));
    }
    Ok(())
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Whether one sampled path of the original system realizes the problem's event.
fn path_event(problem: &ProblemSpec, rng: &mut ChaCha8Rng) -> bool {
    let sys = &problem.system;
    let mut x = problem.x0.clone();
    for k in 0..=problem.horizon {
        match problem.kind {
            ProblemKind::Safety => {
                if !problem.safe_set.contains(&x) {
                    return true;
                }
            }
            ProblemKind::ReachAvoid => {
                if !problem.safe_set.contains(&x) {
                    return false;
                }
                if problem.in_target(&x) {
                    return true;
                }
            }
        }
        if k < problem.horizon {
            let theta = sys.disturbance.sample(rng);
            x = sys.step(&x, &theta);
        }
    }
    false
}

/// Estimates the probability of the problem's event from `n_paths`
/// independent paths.
pub fn simulate_event(problem: &ProblemSpec, n_paths: u64, seed: u64) -> Result<MCResult, McError> {
    check_initial(problem)?;
    if n_paths == 0 {
        return Err(McError::NoPaths);
    }
    let hits = (0..n_paths)
        .into_par_iter()
        .filter(|&i| path_event(problem, &mut path_rng(seed, i)))
        .count() as u64;
    let (ci_lo, ci_hi) = clopper_pearson(hits, n_paths, CONFIDENCE);
    Ok(MCResult {
        estimate: hits as f64 / n_paths as f64,
        n: n_paths,
        ci_lo,
        ci_hi,
        seed,
        event: Event::of(problem.kind),
    })
}

fn coupled_path(problem: &ProblemSpec, rng: &mut ChaCha8Rng) -> CoupledPath {
    let sys = &problem.system;
    let n = problem.horizon as usize;
    let disturbances: Vec<Vec<f64>> = (0..n).map(|_| sys.disturbance.sample(rng)).collect();
    let mut original = vec![problem.x0.clone()];
    let mut switched = vec![problem.x0.clone()];
    for theta in &disturbances {
        let x = original.last().unwrap();
        original.push(sys.step(x, theta));
        let y = switched.last().unwrap();
        switched.push(match problem.kind {
            ProblemKind::Safety => switched_step_safety(y, theta, problem),
            ProblemKind::ReachAvoid => switched_step_reach_avoid(y, theta, problem),
        });
    }
    CoupledPath {
        original: Trajectory {
            states: original,
            disturbances: disturbances.clone(),
        },
        switched: Trajectory {
            states: switched,
            disturbances,
        },
    }
}

/// Simulates the original and the frozen system on identical disturbance
/// sequences (frozen outside `X` for safety; on `X_r` and outside `X` for
/// reach-avoid).
pub fn simulate_switched_coupled(
    problem: &ProblemSpec,
    n_paths: u64,
    seed: u64,
) -> Result<Vec<CoupledPath>, McError> {
    check_initial(problem)?;
    if n_paths == 0 {
        return Err(McError::NoPaths);
    }
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| coupled_path(problem, &mut path_rng(seed, i)))
        .collect())
}

fn exact_rec(problem: &ProblemSpec, support: &[(Vec<f64>, f64)], x: &[f64], k: u32) -> f64 {
    match problem.kind {
        ProblemKind::Safety => {
            if !problem.safe_set.contains(x) {
                return 1.0;
            }
        }
        ProblemKind::ReachAvoid => {
            if problem.in_target(x) {
                return 1.0;
            }
            if !problem.safe_set.contains(x) {
                return 0.0;
            }
        }
    }
    if k == 0 {
        return 0.0;
    }
    support
        .iter()
        .map(|(theta, p)| p * exact_rec(problem, support, &problem.system.step(x, theta), k - 1))
        .sum()
}

/// Exact event probability over horizon `n` for a finite-support
/// disturbance, by enumerating every disturbance sequence.
pub fn exact_probability(problem: &ProblemSpec, n: u32) -> Result<f64, McError> {
    let DisturbanceSpec::FiniteSupport(support) = &problem.system.disturbance else {
        return Err(McError::NotFinite);
    };
    if (support.len() as f64).powi(n as i32) > EXACT_BUDGET {
        return Err(McError::BudgetExceeded {
            points: support.len(),
            horizon: n,
        });
    }
    check_initial(problem)?;
    Ok(exact_rec(problem, support, &problem.x0, n))
}
