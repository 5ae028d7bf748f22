//! Stochastic polynomial systems, verification problems, and the operators
//! the certificate conditions are built from: the one-step expectation, the
//! reachable-set enclosure, and the two frozen (switched) step maps.

mod file;
mod sets;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polynomial::{interval_enclosure, HyperBox, PolyError, Polynomial};

pub use file::{load_problem, ConjunctText, DisturbanceFile, ExtendedDomainFile, FinitePoint, ProblemFile};
pub use sets::{Conjunct, Relation, SemialgebraicSet};

/// Relative resolution used when computing bounding boxes of sets.
pub const BOUNDING_RESOLUTION: f64 = 1e-9;
/// Containment slack for the extended-domain check, relative to the box width.
pub const CONTAINMENT_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("initial state: {0}")]
    InitialState(String),
    #[error("extended domain does not contain the one-step reachable set: {0}")]
    Containment(String),
    #[error("target set is not contained in the safe set (sample {0:?} lies outside)")]
    TargetNotInSafe(Vec<f64>),
    #[error("expectation operand mentions disturbance variable `{0}`")]
    ExpectationOfDisturbance(String),
    #[error("problem file {path}: {msg}")]
    File { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSpec {
    /// Independent uniform coordinates on a box.
    UniformBox(HyperBox),
    /// Finitely many points with probabilities.
    FiniteSupport(Vec<(Vec<f64>, f64)>),
}

impl DisturbanceSpec {
    pub fn validate(&self, dim: usize) -> Result<(), ModelError> {
        match self {
            DisturbanceSpec::UniformBox(b) => {
                if b.dim() != dim {
                    return Err(ModelError::Invalid(format!(
                        "uniform box has {} coordinates, expected {dim}",
                        b.dim()
                    )));
                }
            }
            DisturbanceSpec::FiniteSupport(pts) => {
                if pts.is_empty() {
                    return Err(ModelError::Invalid("finite support is empty".into()));
                }
                let mut total = 0.0;
                for (pt, p) in pts {
                    if pt.len() != dim {
                        return Err(ModelError::Invalid(format!(
                            "support point {pt:?} has {} coordinates, expected {dim}",
                            pt.len()
                        )));
                    }
                    if !(*p >= 0.0) || !p.is_finite() {
                        return Err(ModelError::Invalid(format!("probability {p} is negative")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(ModelError::Invalid(format!(
                        "probabilities sum to {total}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            DisturbanceSpec::UniformBox(b) => b.sample(rng),
            DisturbanceSpec::FiniteSupport(pts) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (pt, p) in pts {
                    acc += p;
                    if u < acc {
                        return pt.clone();
                    }
                }
                pts.last().unwrap().0.clone()
            }
        }
    }

    /// Midpoint-rule discretization of a one-dimensional-per-axis uniform box
    /// into `n` points per axis.
    pub fn midpoint_rule(b: &HyperBox, n: usize) -> DisturbanceSpec {
        let axes: Vec<Vec<f64>> = (0..b.dim())
            .map(|i| {
                (0..n)
                    .map(|k| b.lo(i) + (k as f64 + 0.5) * b.width(i) / n as f64)
                    .collect()
            })
            .collect();
        let total = n.pow(b.dim() as u32);
        let prob = 1.0 / total as f64;
        let pts = (0..total)
            .map(|mut flat| {
                let mut pt = vec![0.0; b.dim()];
                for i in (0..b.dim()).rev() {
                    pt[i] = axes[i][flat % n];
                    flat /= n;
                }
                (pt, prob)
            })
            .collect();
        DisturbanceSpec::FiniteSupport(pts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub state_vars: Vec<String>,
    pub disturbance_vars: Vec<String>,
    /// One polynomial per state variable, over `all_vars()`.
    pub dynamics: Vec<Polynomial>,
    pub disturbance: DisturbanceSpec,
}

impl SystemSpec {
    pub fn new(
        state_vars: Vec<String>,
        disturbance_vars: Vec<String>,
        dynamics: Vec<Polynomial>,
        disturbance: DisturbanceSpec,
    ) -> Result<Self, ModelError> {
        let all: Vec<String> = state_vars.iter().chain(&disturbance_vars).cloned().collect();
        let mut seen = std::collections::HashSet::new();
        for v in &all {
            if !seen.insert(v) {
                return Err(ModelError::Invalid(format!("variable `{v}` declared twice")));
            }
        }
        if dynamics.len() != state_vars.len() {
            return Err(ModelError::Invalid(format!(
                "{} dynamics components for {} state variables",
                dynamics.len(),
                state_vars.len()
            )));
        }
        let dynamics = dynamics
            .iter()
            .map(|f| f.embed(&all))
            .collect::<Result<Vec<_>, _>>()?;
        disturbance.validate(disturbance_vars.len())?;
        Ok(SystemSpec {
            state_vars,
            disturbance_vars,
            dynamics,
            disturbance,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_vars.len()
    }

    /// State variables followed by disturbance variables.
    pub fn all_vars(&self) -> Vec<String> {
        self.state_vars
            .iter()
            .chain(&self.disturbance_vars)
            .cloned()
            .collect()
    }

    pub fn step(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut point = Vec::with_capacity(x.len() + theta.len());
        point.extend_from_slice(x);
        point.extend_from_slice(theta);
        self.dynamics.iter().map(|f| f.eval(&point)).collect()
    }

    /// `v ∘ f`, over `all_vars()`.
    pub fn compose_with_dynamics(&self, v: &Polynomial) -> Result<Polynomial, ModelError> {
        let v = self.as_state_poly(v)?;
        let subs: BTreeMap<String, Polynomial> = self
            .state_vars
            .iter()
            .cloned()
            .zip(self.dynamics.iter().cloned())
            .collect();
        Ok(v.compose(&subs)?)
    }

    /// Re-expresses `v` over the state variables, rejecting any dependence on
    /// disturbance variables.
    pub fn as_state_poly(&self, v: &Polynomial) -> Result<Polynomial, ModelError> {
        if let Some(d) = self.disturbance_vars.iter().find(|d| v.mentions(d)) {
            return Err(ModelError::ExpectationOfDisturbance(d.clone()));
        }
        Ok(v.embed(&self.state_vars)?)
    }
}

/// `E[θ^k]` for θ uniform on `[a, b]`.
fn uniform_moment(a: f64, b: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if a == b {
        return a.powi(k as i32);
    }
    (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / ((k as f64 + 1.0) * (b - a))
}

/// `x ↦ E[v(f(x, θ))]` as a polynomial in the state variables.
pub fn one_step_expectation(v: &Polynomial, system: &SystemSpec) -> Result<Polynomial, ModelError> {
    let composed = system.compose_with_dynamics(v)?;
    let n = system.state_dim();
    let terms: Vec<(Vec<u32>, f64)> = match &system.disturbance {
        DisturbanceSpec::UniformBox(b) => composed
            .terms()
            .map(|(e, c)| {
                let m: f64 = e[n..]
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| uniform_moment(b.lo(j), b.hi(j), k))
                    .product();
                (e[..n].to_vec(), c * m)
            })
            .collect(),
        DisturbanceSpec::FiniteSupport(pts) => composed
            .terms()
            .map(|(e, c)| {
                let m: f64 = pts
                    .iter()
                    .map(|(pt, p)| {
                        p * e[n..]
                            .iter()
                            .zip(pt)
                            .map(|(&k, &t)| t.powi(k as i32))
                            .product::<f64>()
                    })
                    .sum();
                (e[..n].to_vec(), c * m)
            })
            .collect(),
    };
    Ok(Polynomial::from_terms(&system.state_vars, terms))
}

/// Box containing `x_box` and every `f(x, θ)` with `x ∈ x_box`, θ in the
/// disturbance support.
pub fn enclose_one_step_reachable(system: &SystemSpec, x_box: &HyperBox) -> HyperBox {
    let n = system.state_dim();
    let mut bounds: Vec<[f64; 2]> = Vec::with_capacity(n);
    match &system.disturbance {
        DisturbanceSpec::UniformBox(theta_box) => {
            let joint = HyperBox::new(
                x_box
                    .bounds()
                    .iter()
                    .chain(theta_box.bounds())
                    .copied()
                    .collect(),
            )
            .expect("boxes are valid");
            for f in &system.dynamics {
                let e = interval_enclosure(f, &joint);
                bounds.push([e.lo, e.hi]);
            }
        }
        DisturbanceSpec::FiniteSupport(pts) => {
            for f in &system.dynamics {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (pt, _) in pts {
                    let joint = HyperBox::new(
                        x_box
                            .bounds()
                            .iter()
                            .copied()
                            .chain(pt.iter().map(|&t| [t, t]))
                            .collect(),
                    )
                    .expect("boxes are valid");
                    let e = interval_enclosure(f, &joint);
                    lo = lo.min(e.lo);
                    hi = hi.max(e.hi);
                }
                bounds.push([lo, hi]);
            }
        }
    }
    HyperBox::new(bounds).expect("enclosure is ordered").hull(x_box)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Safety,
    ReachAvoid,
}

/// Extended domain (the certificate's domain): a semialgebraic set plus a
/// bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedDomain {
    pub set: SemialgebraicSet,
    pub bbox: HyperBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub system: SystemSpec,
    pub kind: ProblemKind,
    pub safe_set: SemialgebraicSet,
    /// Required for reach-avoid; may also be carried by a safety problem so
    /// one file describes both events.
    pub target_set: Option<SemialgebraicSet>,
    pub extended_domain: ExtendedDomain,
    pub x0: Vec<f64>,
    pub horizon: u32,
    safe_box: HyperBox,
    target_box: Option<HyperBox>,
}

impl ProblemSpec {
    /// Builds and validates a problem: initial-state membership, extended
    /// domain containment of the one-step reachable set, and (for
    /// reach-avoid) target-in-safe-set sampling.
    pub fn new(
        system: SystemSpec,
        kind: ProblemKind,
        safe_set: SemialgebraicSet,
        target_set: Option<SemialgebraicSet>,
        extended_domain: ExtendedDomain,
        x0: Vec<f64>,
        horizon: u32,
    ) -> Result<Self, ModelError> {
        let n = system.state_dim();
        if x0.len() != n {
            return Err(ModelError::Invalid(format!(
                "x0 has {} coordinates, expected {n}",
                x0.len()
            )));
        }
        if extended_domain.bbox.dim() != n {
            return Err(ModelError::Invalid(format!(
                "extended domain box has {} coordinates, expected {n}",
                extended_domain.bbox.dim()
            )));
        }
        let sets = [Some(&safe_set), target_set.as_ref(), Some(&extended_domain.set)];
        for s in sets.into_iter().flatten() {
            for c in &s.conjuncts {
                if c.poly.vars() != system.state_vars.as_slice() {
                    return Err(ModelError::Invalid(format!(
                        "set polynomial `{}` must be over the state variables",
                        c.poly
                    )));
                }
            }
        }
        if kind == ProblemKind::ReachAvoid && target_set.is_none() {
            return Err(ModelError::Invalid("reach-avoid problem needs a target set".into()));
        }
        if !safe_set.contains(&x0) {
            return Err(ModelError::InitialState(format!("x0 = {x0:?} ∉ X")));
        }
        if let (ProblemKind::ReachAvoid, Some(t)) = (kind, &target_set) {
            if t.contains(&x0) {
                return Err(ModelError::InitialState(format!("x0 = {x0:?} ∈ X_r")));
            }
        }
        let outer = &extended_domain.bbox;
        let safe_box = safe_set
            .bounding_box_within(outer, BOUNDING_RESOLUTION, 200_000)
            .ok_or_else(|| ModelError::Invalid("safe set is empty inside the extended box".into()))?;
        let reach = enclose_one_step_reachable(&system, &safe_box);
        let slack = CONTAINMENT_SLACK * outer.max_width();
        if !outer.contains_box(&reach, slack) {
            return Err(ModelError::Containment(format!(
                "reachable enclosure {:?} exceeds box {:?}",
                reach.bounds(),
                outer.bounds()
            )));
        }
        // the reachable enclosure, clipped to the box, must satisfy the
        // extended-domain conjuncts as well
        let clipped = HyperBox::new(
            reach
                .bounds()
                .iter()
                .zip(outer.bounds())
                .map(|([a, b], [c, d])| [a.max(*c), b.min(*d)])
                .collect(),
        )?;
        for c in &extended_domain.set.conjuncts {
            let e = interval_enclosure(&c.poly, &clipped);
            let scale = e.hi.abs().max(e.lo.abs()).max(1.0);
            let ok = match c.rel {
                Relation::Le => e.hi <= slack * scale,
                Relation::Ge => e.lo >= -slack * scale,
            };
            if !ok {
                return Err(ModelError::Containment(format!(
                    "conjunct `{c}` fails on reachable enclosure {:?}",
                    clipped.bounds()
                )));
            }
        }
        let target_box = match &target_set {
            Some(t) => t.bounding_box_within(outer, BOUNDING_RESOLUTION, 200_000),
            None => None,
        };
        let spec = ProblemSpec {
            system,
            kind,
            safe_set,
            target_set,
            extended_domain,
            x0,
            horizon,
            safe_box,
            target_box,
        };
        spec.check_target_in_safe()?;
        Ok(spec)
    }

    fn check_target_in_safe(&self) -> Result<(), ModelError> {
        let (Some(t), Some(tb)) = (&self.target_set, &self.target_box) else {
            return Ok(());
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x7a12);
        for _ in 0..1000 {
            let p = tb.sample(&mut rng);
            if t.contains(&p) && !self.safe_set.contains(&p) {
                return Err(ModelError::TargetNotInSafe(p));
            }
        }
        Ok(())
    }

    /// Bounding box of the safe set inside the extended-domain box.
    pub fn safe_box(&self) -> &HyperBox {
        &self.safe_box
    }

    /// Bounding box of the target set, if any and nonempty.
    pub fn target_box(&self) -> Option<&HyperBox> {
        self.target_box.as_ref()
    }

    pub fn target(&self) -> &SemialgebraicSet {
        static EMPTY: std::sync::OnceLock<SemialgebraicSet> = std::sync::OnceLock::new();
        self.target_set.as_ref().unwrap_or_else(|| {
            EMPTY.get_or_init(|| {
                // an unsatisfiable conjunction: -1 >= 0
                SemialgebraicSet::new(vec![Conjunct::new(
                    Polynomial::constant(&[], -1.0),
                    Relation::Ge,
                )])
            })
        })
    }

    /// True if `x` is in the target set (false when there is none).
    pub fn in_target(&self, x: &[f64]) -> bool {
        self.target_set.as_ref().is_some_and(|t| t.contains(x))
    }

    /// Same problem with a different kind and target set.
    pub fn with_kind(
        &self,
        kind: ProblemKind,
        target: Option<SemialgebraicSet>,
    ) -> Result<ProblemSpec, ModelError> {
        ProblemSpec::new(
            self.system.clone(),
            kind,
            self.safe_set.clone(),
            target,
            self.extended_domain.clone(),
            self.x0.clone(),
            self.horizon,
        )
    }

    pub fn with_horizon(&self, horizon: u32) -> ProblemSpec {
        ProblemSpec {
            horizon,
            ..self.clone()
        }
    }

    pub fn with_disturbance(&self, disturbance: DisturbanceSpec) -> Result<ProblemSpec, ModelError> {
        let system = SystemSpec::new(
            self.system.state_vars.clone(),
            self.system.disturbance_vars.clone(),
            self.system.dynamics.clone(),
            disturbance,
        )?;
        ProblemSpec::new(
            system,
            self.kind,
            self.safe_set.clone(),
            self.target_set.clone(),
            self.extended_domain.clone(),
            self.x0.clone(),
            self.horizon,
        )
    }

    pub fn with_x0(&self, x0: Vec<f64>) -> Result<ProblemSpec, ModelError> {
        ProblemSpec::new(
            self.system.clone(),
            self.kind,
            self.safe_set.clone(),
            self.target_set.clone(),
            self.extended_domain.clone(),
            x0,
            self.horizon,
        )
    }
}

/// Step of the system frozen outside the safe set: `f(x, θ)` on `X`,
/// identity elsewhere.
pub fn switched_step_safety(x: &[f64], theta: &[f64], spec: &ProblemSpec) -> Vec<f64> {
    if spec.safe_set.contains(x) {
        spec.system.step(x, theta)
    } else {
        x.to_vec()
    }
}

/// Step of the system frozen on the target and outside the safe set:
/// `f(x, θ)` on `X \ X_r`, identity elsewhere.
pub fn switched_step_reach_avoid(x: &[f64], theta: &[f64], spec: &ProblemSpec) -> Vec<f64> {
    if spec.safe_set.contains(x) && !spec.in_target(x) {
        spec.system.step(x, theta)
    } else {
        x.to_vec()
    }
}
