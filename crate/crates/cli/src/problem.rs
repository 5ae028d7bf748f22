//! Resolving `--problem` into a validated problem of the requested kind.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use ftbarrier::bundled;
use ftbarrier::model::{load_problem, ProblemKind, ProblemSpec};

/// Loads `name` as a file, or as a bundled example when no such file exists.
/// When `kind` differs from the file's, the problem is rebuilt with that kind.
pub fn load(name: Option<&str>, kind: Option<ProblemKind>) -> Result<ProblemSpec> {
    let name = name.ok_or_else(|| anyhow!("--problem is required for this command"))?;
    let problem = if Path::new(name).exists() {
        load_problem(name).with_context(|| format!("loading problem {name}"))?
    } else {
        let k = kind.unwrap_or(ProblemKind::Safety);
        return bundled::by_name(name, k)
            .ok_or_else(|| anyhow!("no problem file or bundled example named `{name}`"));
    };
    match kind {
        Some(k) if k != problem.kind => problem
            .with_kind(k, problem.target_set.clone())
            .with_context(|| format!("using {name} as a {k:?} problem")),
        _ => Ok(problem),
    }
}
