use std::fmt;

use serde::{Deserialize, Serialize};

use crate::polynomial::{interval_enclosure, parse_polynomial, HyperBox, PolyError, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `p(x) ≤ 0`
    #[serde(rename = "<=0")]
    Le,
    /// `p(x) ≥ 0`
    #[serde(rename = ">=0")]
    Ge,
}

impl Relation {
    pub fn flipped(self) -> Relation {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conjunct {
    pub poly: Polynomial,
    pub rel: Relation,
}

impl Conjunct {
    pub fn new(poly: Polynomial, rel: Relation) -> Self {
        Conjunct { poly, rel }
    }

    pub fn holds(&self, point: &[f64]) -> bool {
        let v = self.poly.eval(point);
        match self.rel {
            Relation::Le => v <= 0.0,
            Relation::Ge => v >= 0.0,
        }
    }

    /// The conjunct rewritten as `g(x) ≥ 0`.
    pub fn as_nonneg(&self) -> Polynomial {
        match self.rel {
            Relation::Ge => self.poly.clone(),
            Relation::Le => -&self.poly,
        }
    }

    pub fn flipped(&self) -> Conjunct {
        Conjunct::new(self.poly.clone(), self.rel.flipped())
    }

    /// Parses `"lhs <= rhs"` or `"lhs >= rhs"` into `lhs - rhs` with the
    /// matching relation.
    pub fn parse(text: &str, vars: &[String]) -> Result<Conjunct, PolyError> {
        let (idx, rel) = match (text.find("<="), text.find(">=")) {
            (Some(i), None) => (i, Relation::Le),
            (None, Some(i)) => (i, Relation::Ge),
            _ => {
                return Err(PolyError::Syntax {
                    pos: 0,
                    msg: "expected exactly one of `<=` or `>=`".into(),
                })
            }
        };
        let lhs = parse_polynomial(&text[..idx], vars)?;
        let rhs = parse_polynomial(&text[idx + 2..], vars).map_err(|e| match e {
            PolyError::Syntax { pos, msg } => PolyError::Syntax {
                pos: pos + idx + 2,
                msg,
            },
            other => other,
        })?;
        Ok(Conjunct::new(&lhs - &rhs, rel))
    }
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rel {
            Relation::Le => write!(f, "{} <= 0", self.poly),
            Relation::Ge => write!(f, "{} >= 0", self.poly),
        }
    }
}

/// Conjunction of closed polynomial inequalities. The empty conjunction is
/// the whole space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SemialgebraicSet {
    pub conjuncts: Vec<Conjunct>,
}

impl SemialgebraicSet {
    pub fn new(conjuncts: Vec<Conjunct>) -> Self {
        SemialgebraicSet { conjuncts }
    }

    pub fn whole_space() -> Self {
        SemialgebraicSet::default()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.conjuncts.iter().all(|c| c.holds(point))
    }

    pub fn intersect(&self, other: &SemialgebraicSet) -> SemialgebraicSet {
        let mut conjuncts = self.conjuncts.clone();
        conjuncts.extend(other.conjuncts.iter().cloned());
        SemialgebraicSet { conjuncts }
    }

    /// Closure of `self \ other`, as a union of conjunctions: one piece per
    /// conjunct of `other`, with that conjunct's relation flipped.
    pub fn difference(&self, other: &SemialgebraicSet) -> Vec<SemialgebraicSet> {
        other
            .conjuncts
            .iter()
            .map(|c| {
                let mut conjuncts = self.conjuncts.clone();
                conjuncts.push(c.flipped());
                SemialgebraicSet { conjuncts }
            })
            .collect()
    }

    /// True if interval enclosures prove that no point of `cell` is in the set.
    pub fn proven_disjoint(&self, cell: &HyperBox) -> bool {
        self.conjuncts.iter().any(|c| {
            let e = interval_enclosure(&c.poly, cell);
            match c.rel {
                Relation::Le => e.lo > 0.0,
                Relation::Ge => e.hi < 0.0,
            }
        })
    }

    /// Indices of conjuncts not proven to hold on all of `cell`.
    pub fn unproven_conjuncts(&self, cell: &HyperBox) -> Vec<usize> {
        self.conjuncts
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                let e = interval_enclosure(&c.poly, cell);
                match c.rel {
                    Relation::Le => e.hi > 0.0,
                    Relation::Ge => e.lo < 0.0,
                }
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn proven_inside(&self, cell: &HyperBox) -> bool {
        self.unproven_conjuncts(cell).is_empty()
    }

    /// Smallest box (up to `resolution`, relative to `outer`'s widths) that
    /// contains the part of the set inside `outer`. `None` when the set is
    /// provably empty there. Sound: never excludes a point of the set.
    pub fn bounding_box_within(
        &self,
        outer: &HyperBox,
        resolution: f64,
        budget: usize,
    ) -> Option<HyperBox> {
        let mut hull: Option<HyperBox> = None;
        let mut stack = vec![outer.clone()];
        let mut splits = 0usize;
        while let Some(cell) = stack.pop() {
            if self.proven_disjoint(&cell) {
                continue;
            }
            if let Some(h) = &hull {
                if h.contains_box(&cell, 0.0) {
                    continue;
                }
            }
            let small = (0..cell.dim())
                .all(|i| outer.width(i) == 0.0 || cell.width(i) <= resolution * outer.width(i));
            if small || splits >= budget || self.proven_inside(&cell) {
                hull = Some(match hull {
                    Some(h) => h.hull(&cell),
                    None => cell,
                });
                continue;
            }
            splits += 1;
            let (l, r) = cell.bisect(cell.widest_relative_to(outer));
            stack.push(l);
            stack.push(r);
        }
        hull
    }
}

impl fmt::Display for SemialgebraicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return write!(f, "{{all}}");
        }
        let parts: Vec<String> = self.conjuncts.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
