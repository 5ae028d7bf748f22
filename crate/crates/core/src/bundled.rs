//! The two one-dimensional example problems shipped with the crate.

use crate::model::{ModelError, ProblemFile, ProblemKind, ProblemSpec};

pub const RANDOM_WALK_JSON: &str = include_str!("../examples/random_walk.json");
pub const CONTRACTION_JSON: &str = include_str!("../examples/contraction.json");

/// `x' = x + d`, `d ~ U[-0.1, 0.1]`, `X = {x² ≤ 1}`, `X_r = {(x-0.9)² ≤ 1e-4}`,
/// `x0 = 0.2`, `N = 30`.
pub fn random_walk(kind: ProblemKind) -> ProblemSpec {
    load(RANDOM_WALK_JSON, kind).expect("bundled problem is valid")
}

/// `x' = (-0.5 + d)x`, `d ~ U[-1, 1]`, `X = {x² ≤ 1}`, `X_r = {x² ≤ 0.36}`,
/// `x0 = -0.9`, `N = 50`.
pub fn contraction(kind: ProblemKind) -> ProblemSpec {
    load(CONTRACTION_JSON, kind).expect("bundled problem is valid")
}

fn load(text: &str, kind: ProblemKind) -> Result<ProblemSpec, ModelError> {
    let mut file = ProblemFile::from_json(text)?;
    file.kind = kind;
    file.to_spec()
}

/// Looks up a bundled problem by name (`random_walk` or `contraction`).
pub fn by_name(name: &str, kind: ProblemKind) -> Option<ProblemSpec> {
    match name {
        "random_walk" => Some(random_walk(kind)),
        "contraction" => Some(contraction(kind)),
        _ => None,
    }
}
