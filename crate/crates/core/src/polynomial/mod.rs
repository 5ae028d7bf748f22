//! Sparse multivariate polynomials over named variables.
//!
//! A [`Polynomial`] is an ordered list of variable names plus a sparse map
//! from exponent vectors to `f64` coefficients. Every constructor and
//! arithmetic operation normalizes the map, dropping coefficients whose
//! magnitude falls below [`DROP_TOLERANCE`].

mod bernstein;
mod hyperbox;
mod interval;
mod parse;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

pub use bernstein::{bernstein_coefficients, BernsteinForm};
pub use hyperbox::HyperBox;
pub use interval::{interval_enclosure, naive_enclosure, Interval};
pub use parse::parse_polynomial;

/// Coefficients with magnitude below this are removed during normalization.
pub const DROP_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("missing assignment for variable `{0}`")]
    MissingAssignment(String),
    #[error("missing substitution for variable `{0}`")]
    MissingSubstitution(String),
    #[error("variable lists differ: {0:?} vs {1:?}")]
    VariableMismatch(Vec<String>, Vec<String>),
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Bernstein degree {requested:?} is below the polynomial degree {actual:?}")]
    DegreeTooLow { requested: Vec<u32>, actual: Vec<u32> },
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

/// Exponent vector, one entry per variable of the owning polynomial.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    vars: Vec<String>,
    terms: BTreeMap<Exponents, f64>,
}

impl Polynomial {
    pub fn zero(vars: &[String]) -> Self {
        Polynomial {
            vars: vars.to_vec(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[String], c: f64) -> Self {
        Self::from_terms(vars, [(vec![0; vars.len()], c)])
    }

    /// The polynomial consisting of the single variable `name`.
    pub fn var(vars: &[String], name: &str) -> Result<Self, PolyError> {
        let idx = vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| PolyError::UndeclaredVariable(name.to_string()))?;
        let mut exps = vec![0; vars.len()];
        exps[idx] = 1;
        Ok(Self::from_terms(vars, [(exps, 1.0)]))
    }

    pub fn monomial(vars: &[String], exps: Exponents, coeff: f64) -> Self {
        assert_eq!(exps.len(), vars.len(), "exponent arity mismatch");
        Self::from_terms(vars, [(exps, coeff)])
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing
    /// duplicates and normalizing.
    pub fn from_terms<I>(vars: &[String], terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponents, f64)>,
    {
        let mut map: BTreeMap<Exponents, f64> = BTreeMap::new();
        for (exps, c) in terms {
            assert_eq!(exps.len(), vars.len(), "exponent arity mismatch");
            *map.entry(exps).or_insert(0.0) += c;
        }
        let mut p = Polynomial {
            vars: vars.to_vec(),
            terms: map,
        };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| c.abs() >= DROP_TOLERANCE);
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, f64)> + '_ {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the constant value if the polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then_some(*c)
            }
            _ => None,
        }
    }

    /// Per-variable maximum exponent.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0; self.vars.len()];
        for e in self.terms.keys() {
            for (di, &ei) in d.iter_mut().zip(e) {
                *di = (*di).max(ei);
            }
        }
        d
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// True if the polynomial depends on variable `name`.
    pub fn mentions(&self, name: &str) -> bool {
        match self.vars.iter().position(|v| v == name) {
            Some(i) => self.terms.keys().any(|e| e[i] > 0),
            None => false,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(&self.vars, self.terms.iter().map(|(e, c)| (e.clone(), c * s)))
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self + &Polynomial::constant(&self.vars, c)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Polynomial::constant(&self.vars, 1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Evaluates at a point given positionally in `vars()` order.
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.vars.len());
        let degs = self.degrees();
        let powers: Vec<Vec<f64>> = point
            .iter()
            .zip(&degs)
            .map(|(&x, &d)| {
                let mut pw = Vec::with_capacity(d as usize + 1);
                let mut acc = 1.0;
                for _ in 0..=d {
                    pw.push(acc);
                    acc *= x;
                }
                pw
            })
            .collect();
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .enumerate()
                    .fold(*c, |acc, (i, &k)| acc * powers[i][k as usize])
            })
            .sum()
    }

    /// Evaluates at a named assignment; every variable must be assigned.
    pub fn evaluate(&self, assignment: &HashMap<String, f64>) -> Result<f64, PolyError> {
        let point = self
            .vars
            .iter()
            .map(|v| {
                assignment
                    .get(v)
                    .copied()
                    .ok_or_else(|| PolyError::MissingAssignment(v.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.eval(&point))
    }

    /// Substitutes a polynomial for every variable. All substituted
    /// polynomials must share one variable list, which becomes the variable
    /// list of the result.
    pub fn compose(&self, subs: &BTreeMap<String, Polynomial>) -> Result<Polynomial, PolyError> {
        let images = self
            .vars
            .iter()
            .map(|v| {
                subs.get(v)
                    .ok_or_else(|| PolyError::MissingSubstitution(v.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let target_vars: Vec<String> = match images.first() {
            Some(p) => p.vars.clone(),
            None => subs
                .values()
                .next()
                .map(|p| p.vars.clone())
                .unwrap_or_default(),
        };
        for img in &images {
            if img.vars != target_vars {
                return Err(PolyError::VariableMismatch(
                    target_vars.clone(),
                    img.vars.clone(),
                ));
            }
        }
        Ok(self.compose_positional(&images, &target_vars))
    }

    /// Composition where `images[i]` replaces `vars()[i]`.
    pub(crate) fn compose_positional(
        &self,
        images: &[&Polynomial],
        target_vars: &[String],
    ) -> Polynomial {
        let degs = self.degrees();
        // powers[i][k] = images[i]^k
        let powers: Vec<Vec<Polynomial>> = images
            .iter()
            .zip(&degs)
            .map(|(img, &d)| {
                let mut pw = Vec::with_capacity(d as usize + 1);
                pw.push(Polynomial::constant(target_vars, 1.0));
                for k in 1..=d as usize {
                    let next = &pw[k - 1] * *img;
                    pw.push(next);
                }
                pw
            })
            .collect();
        let mut acc: BTreeMap<Exponents, f64> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(target_vars, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = &term * &powers[i][k as usize];
                }
            }
            for (te, tc) in term.terms {
                *acc.entry(te).or_insert(0.0) += tc;
            }
        }
        let mut p = Polynomial {
            vars: target_vars.to_vec(),
            terms: acc,
        };
        p.normalize();
        p
    }

    /// Re-expresses the polynomial over `new_vars`, which must contain every
    /// variable the polynomial actually mentions.
    pub fn embed(&self, new_vars: &[String]) -> Result<Polynomial, PolyError> {
        let mut map = Vec::with_capacity(self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            let pos = new_vars.iter().position(|w| w == v);
            if pos.is_none() && self.terms.keys().any(|e| e[i] > 0) {
                return Err(PolyError::UndeclaredVariable(v.clone()));
            }
            map.push(pos);
        }
        Ok(Polynomial::from_terms(
            new_vars,
            self.terms.iter().map(|(e, c)| {
                let mut ne = vec![0; new_vars.len()];
                for (i, &k) in e.iter().enumerate() {
                    if let Some(j) = map[i] {
                        ne[j] += k;
                    }
                }
                (ne, *c)
            }),
        ))
    }

    /// Largest coefficient-wise absolute difference to `other`.
    pub fn max_coeff_diff(&self, other: &Polynomial) -> f64 {
        let mut keys: Vec<&Exponents> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| (self.coefficient(k) - other.coefficient(k)).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_vars(&self, other: &Polynomial) {
        assert_eq!(
            self.vars, other.vars,
            "polynomial arithmetic requires identical variable lists"
        );
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_vars(rhs);
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            *terms.entry(e.clone()).or_insert(0.0) += c;
        }
        let mut p = Polynomial {
            vars: self.vars.clone(),
            terms,
        };
        p.normalize();
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_vars(rhs);
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            *terms.entry(e.clone()).or_insert(0.0) -= c;
        }
        let mut p = Polynomial {
            vars: self.vars.clone(),
            terms,
        };
        p.normalize();
        p
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_vars(rhs);
        let mut terms: BTreeMap<Exponents, f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        let mut p = Polynomial {
            vars: self.vars.clone(),
            terms,
        };
        p.normalize();
        p
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

fn format_magnitude(c: f64) -> String {
    let a = c.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{a}")
    } else {
        format!("{a:e}")
    }
}

/// Prints in the parser's grammar, highest total degree first, so that
/// printing and re-parsing is a fixed point.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<(&Exponents, &f64)> = self.terms.iter().collect();
        ordered.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (i, (e, &c)) in ordered.into_iter().enumerate() {
            let neg = c < 0.0;
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let factors: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    if k == 1 {
                        self.vars[j].clone()
                    } else {
                        format!("{}^{}", self.vars[j], k)
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{}", format_magnitude(c))?;
            } else if c.abs() == 1.0 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", format_magnitude(c), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Convenience for building variable lists from string literals.
pub fn var_names(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str, vars: &[&str]) -> Polynomial {
        parse_polynomial(text, &var_names(vars)).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert!((p("x^2 - 1", &["x"]).eval(&[0.2]) + 0.96).abs() < 1e-15);
        assert_eq!(p("x^2 + 2*x*t + t^2", &["x", "t"]).eval(&[1.0, -1.0]), 0.0);
        assert!((p("x^2 - 2", &["x"]).eval(&[1.5]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn evaluate_reports_missing_variable() {
        let q = p("x + t", &["x", "t"]);
        let mut a = HashMap::new();
        a.insert("x".to_string(), 1.0);
        assert_eq!(
            q.evaluate(&a),
            Err(PolyError::MissingAssignment("t".to_string()))
        );
        a.insert("t".to_string(), 2.0);
        assert_eq!(q.evaluate(&a), Ok(3.0));
    }

    #[test]
    fn compose_binomial() {
        let vars = var_names(&["x", "t"]);
        let sq = p("x^2", &["x"]);
        let mut s = BTreeMap::new();
        s.insert("x".to_string(), parse_polynomial("x + t", &vars).unwrap());
        let c = sq.compose(&s).unwrap();
        assert_eq!(c, parse_polynomial("x^2 + 2*x*t + t^2", &vars).unwrap());
    }

    #[test]
    fn compose_contraction_dynamics() {
        let vars = var_names(&["x", "t"]);
        let sq = p("x^2", &["x"]);
        let mut s = BTreeMap::new();
        s.insert(
            "x".to_string(),
            parse_polynomial("(-0.5 + t)*x", &vars).unwrap(),
        );
        let c = sq.compose(&s).unwrap();
        let expected = parse_polynomial("(0.25 - t + t^2)*x^2", &vars).unwrap();
        assert!(c.max_coeff_diff(&expected) < 1e-15);
    }

    #[test]
    fn compose_constant_and_missing() {
        let vars = var_names(&["x"]);
        let c = Polynomial::constant(&vars, 3.5);
        let mut s = BTreeMap::new();
        s.insert("x".to_string(), p("y^3", &["y"]));
        assert_eq!(c.compose(&s).unwrap().as_constant(), Some(3.5));
        let q = p("x*y", &["x", "y"]);
        assert_eq!(
            q.compose(&s),
            Err(PolyError::MissingSubstitution("y".to_string()))
        );
    }

    #[test]
    fn normalization_drops_tiny_terms() {
        let vars = var_names(&["x"]);
        let q = Polynomial::from_terms(&vars, [(vec![1], 1e-17), (vec![0], 2.0)]);
        assert_eq!(q.num_terms(), 1);
        let z = &q - &q;
        assert!(z.is_zero());
    }

    #[test]
    fn pow_matches_repeated_product() {
        let q = p("x - 2*y + 0.5", &["x", "y"]);
        let direct = &(&q * &q) * &q;
        assert!(q.pow(3).max_coeff_diff(&direct) < 1e-12);
        assert_eq!(q.pow(0).as_constant(), Some(1.0));
    }

    #[test]
    fn embed_reorders_variables() {
        let q = p("x*y^2", &["x", "y"]);
        let e = q.embed(&var_names(&["y", "z", "x"])).unwrap();
        assert_eq!(e.coefficient(&[2, 0, 1]), 1.0);
        assert!(q.embed(&var_names(&["x"])).is_err());
    }

    #[test]
    fn display_is_reparseable() {
        let q = p("-3*x^2*y + 0.1*y - 1/3 + 2.5e-12*x", &["x", "y"]);
        let text = q.to_string();
        assert_eq!(p(&text, &["x", "y"]), q);
        assert_eq!(p("x^2 - 1", &["x"]).to_string(), "x^2 - 1");
    }
}
