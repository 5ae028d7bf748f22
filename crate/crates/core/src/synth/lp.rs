//! Dense two-phase simplex for `minimize c·x subject to A x ≥ b`, `x` free.
//!
//! The solver works on the dual `maximize b·y subject to Aᵀy = c, y ≥ 0`,
//! whose tableau has one row per primal variable, which is small for
//! certificate synthesis (tens of coefficients, thousands of rows). The
//! primal point is read off the optimal dual basis and then refined by
//! re-solving the active rows exactly.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("the linear program is infeasible")]
    Infeasible,
    #[error("the linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit of {0} reached")]
    IterationLimit(usize),
}

/// `minimize objective·x` subject to `row.0 · x ≥ row.1` for every row.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Largest `b_i − a_i·x` over all rows (≤ 0 when `x` is exactly feasible).
    pub max_violation: f64,
}

const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 50;
/// Pivots between refactorizations from the original data.
const REINVERT_EVERY: usize = 100;
/// Primal infeasibility tolerated by the ratio test.
const HARRIS_TOL: f64 = 1e-9;

struct Tableau {
    m: usize,
    /// number of columns, excluding the right-hand side
    cols: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for (k, pk) in prow.iter().enumerate() {
                    self.t[i * w + k] -= f * pk;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (k, pk) in prow.iter().enumerate() {
                self.obj[k] -= f * pk;
            }
        }
        self.basis[r] = c;
    }

    /// Rebuilds the tableau for the current basis from the original data,
    /// discarding accumulated rounding. Keeps the old tableau if the basis
    /// turns out to be numerically singular.
    fn reinvert(&mut self, original: &[f64]) {
        let old = std::mem::replace(&mut self.t, original.to_vec());
        let old_basis = self.basis.clone();
        let mut assigned = vec![false; self.m];
        let initial: Vec<usize> = (self.cols - self.m..self.cols).collect();
        self.basis = initial;
        for &c in &old_basis {
            let pick = (0..self.m)
                .filter(|&r| !assigned[r])
                .max_by(|&a, &b| self.at(a, c).abs().total_cmp(&self.at(b, c).abs()));
            match pick {
                Some(r) if self.at(r, c).abs() > PIVOT_TOL => {
                    let obj = std::mem::take(&mut self.obj);
                    self.obj = vec![0.0; self.cols + 1];
                    self.pivot(r, c);
                    self.obj = obj;
                    assigned[r] = true;
                }
                _ => {
                    self.t = old;
                    self.basis = old_basis;
                    return;
                }
            }
        }
    }

    /// Sets the reduced costs for maximizing `d·z` in the current basis.
    fn price(&mut self, d: &[f64]) {
        let w = self.cols + 1;
        self.obj = d.to_vec();
        self.obj.push(0.0);
        for r in 0..self.m {
            let db = d[self.basis[r]];
            if db != 0.0 {
                for k in 0..w {
                    self.obj[k] -= db * self.t[r * w + k];
                }
            }
        }
    }

    /// Runs simplex iterations maximizing `d·z` over columns with
    /// `allowed[c]`. Returns `Ok(true)` at optimum and `Ok(false)` when a
    /// column is unbounded even after a fresh factorization.
    fn optimize(
        &mut self,
        allowed: &[bool],
        d: &[f64],
        original: &[f64],
        opt_tol: f64,
        iterations: &mut usize,
        limit: usize,
    ) -> Result<bool, LpError> {
        let mut degenerate = 0usize;
        let mut since_reinvert = 0usize;
        let mut rechecked = false;
        loop {
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert(original);
                self.price(d);
                since_reinvert = 0;
            }
            let bland = degenerate >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = opt_tol;
            for c in 0..self.cols {
                if !allowed[c] || self.obj[c] <= opt_tol {
                    continue;
                }
                if bland {
                    enter = Some(c);
                    break;
                }
                if self.obj[c] > best {
                    best = self.obj[c];
                    enter = Some(c);
                }
            }
            let Some(c) = enter else {
                return Ok(true);
            };
            let Some((r, ratio)) = self.ratio_test(c, bland) else {
                // a column that looks unbounded may be an artifact of drift
                if rechecked {
                    return Ok(false);
                }
                rechecked = true;
                self.reinvert(original);
                self.price(d);
                since_reinvert = 0;
                continue;
            };
            rechecked = false;
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            since_reinvert += 1;
            *iterations += 1;
            if *iterations >= limit {
                return Err(LpError::IterationLimit(limit));
            }
        }
    }

    /// Leaving row for entering column `c`. Harris's two passes: find the
    /// largest step allowed when every row may go `HARRIS_TOL` infeasible,
    /// then take the largest pivot among rows within that step. Under
    /// Bland's rule ties go to the smallest basic index instead.
    fn ratio_test(&self, c: usize, bland: bool) -> Option<(usize, f64)> {
        let candidates = (0..self.m).filter(|&r| self.at(r, c) > PIVOT_TOL);
        if bland {
            let mut leave: Option<(usize, f64)> = None;
            for r in candidates {
                let ratio = self.rhs(r).max(0.0) / self.at(r, c);
                leave = match leave {
                    Some((lr, lratio))
                        if ratio > lratio + 1e-12 * (1.0 + lratio.abs())
                            || ((ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs())
                                && self.basis[r] > self.basis[lr]) =>
                    {
                        Some((lr, lratio))
                    }
                    _ => Some((r, ratio)),
                };
            }
            return leave;
        }
        let bound = (0..self.m)
            .filter(|&r| self.at(r, c) > PIVOT_TOL)
            .map(|r| (self.rhs(r).max(0.0) + HARRIS_TOL) / self.at(r, c))
            .fold(f64::INFINITY, f64::min);
        if !bound.is_finite() {
            return None;
        }
        candidates
            .map(|r| (r, self.rhs(r).max(0.0) / self.at(r, c)))
            .filter(|&(_, ratio)| ratio <= bound)
            .max_by(|a, b| self.at(a.0, c).total_cmp(&self.at(b.0, c)))
    }
}

/// Solves `A_S x = b_S` by Gaussian elimination with full pivoting,
/// returning the correction to add to `x0` (free directions stay at zero).
fn refine(rows: &[(Vec<f64>, f64)], active: &[usize], x0: &[f64]) -> Vec<f64> {
    let n = x0.len();
    let mut a: Vec<Vec<f64>> = active.iter().map(|&i| rows[i].0.clone()).collect();
    let mut rhs: Vec<f64> = active
        .iter()
        .map(|&i| rows[i].1 - rows[i].0.iter().zip(x0).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    let k = a.len();
    let mut col_of = Vec::new();
    let mut row = 0;
    let mut used = vec![false; n];
    while row < k {
        let mut best = (0.0, 0, 0);
        for (i, ai) in a.iter().enumerate().skip(row) {
            for (j, &v) in ai.iter().enumerate() {
                if !used[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if best.0 < 1e-12 {
            break;
        }
        let (_, i, j) = best;
        a.swap(row, i);
        rhs.swap(row, i);
        used[j] = true;
        for r in 0..k {
            if r != row {
                let f = a[r][j] / a[row][j];
                if f != 0.0 {
                    for c in 0..n {
                        a[r][c] -= f * a[row][c];
                    }
                    rhs[r] -= f * rhs[row];
                }
            }
        }
        col_of.push(j);
        row += 1;
    }
    let mut dx = vec![0.0; n];
    for (r, &j) in col_of.iter().enumerate() {
        dx[j] = rhs[r] / a[r][j];
    }
    dx
}

impl LinearProgram {
    pub fn new(n_vars: usize, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), n_vars);
        LinearProgram {
            n_vars,
            objective,
            rows: Vec::new(),
        }
    }

    /// Adds `a·x ≥ b`.
    pub fn push_row(&mut self, a: Vec<f64>, b: f64) {
        assert_eq!(a.len(), self.n_vars);
        self.rows.push((a, b));
    }

    pub fn solve(&self, opt_tol: f64) -> Result<LpSolution, LpError> {
        let n = self.n_vars;
        // normalize rows; all-zero rows are either trivially true or infeasible
        let mut rows: Vec<(Vec<f64>, f64, usize)> = Vec::with_capacity(self.rows.len());
        for (i, (a, b)) in self.rows.iter().enumerate() {
            let s = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if s < 1e-14 {
                if *b > opt_tol {
                    return Err(LpError::Infeasible);
                }
                continue;
            }
            rows.push((a.iter().map(|v| v / s).collect(), b / s, i));
        }
        let m_rows = rows.len();
        let cols = m_rows + n;
        let w = cols + 1;
        let mut t = vec![0.0; n * w];
        let mut sign = vec![1.0; n];
        for j in 0..n {
            if self.objective[j] < 0.0 {
                sign[j] = -1.0;
            }
            for (i, (a, _, _)) in rows.iter().enumerate() {
                t[j * w + i] = sign[j] * a[j];
            }
            t[j * w + m_rows + j] = 1.0;
            t[j * w + cols] = sign[j] * self.objective[j];
        }
        let original = t.clone();
        let mut tab = Tableau {
            m: n,
            cols,
            t,
            obj: Vec::new(),
            basis: (m_rows..cols).collect(),
        };
        let limit = 50 * (cols + n) + 10_000;
        let mut iterations = 0;

        // phase 1: drive the artificials to zero
        let mut d1 = vec![0.0; cols];
        for d in d1.iter_mut().skip(m_rows) {
            *d = -1.0;
        }
        tab.price(&d1);
        let all = vec![true; cols];
        tab.optimize(&all, &d1, &original, opt_tol, &mut iterations, limit)?;
        let scale = 1.0 + self.objective.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if tab.obj[cols] > 1e-7 * scale {
            // the dual is infeasible, so the primal has no finite optimum
            return Err(LpError::Unbounded);
        }
        for r in 0..n {
            if tab.basis[r] >= m_rows {
                if let Some(c) = (0..m_rows).find(|&c| tab.at(r, c).abs() > PIVOT_TOL) {
                    tab.pivot(r, c);
                }
            }
        }

        // phase 2: maximize b·y with artificials barred from entering
        let mut d2 = vec![0.0; cols];
        for (i, (_, b, _)) in rows.iter().enumerate() {
            d2[i] = *b;
        }
        tab.price(&d2);
        let allowed: Vec<bool> = (0..cols).map(|c| c < m_rows).collect();
        if !tab.optimize(&allowed, &d2, &original, opt_tol, &mut iterations, limit)? {
            return Err(LpError::Infeasible);
        }
        // clean up drift and make sure the optimum survives a fresh factorization
        for _ in 0..3 {
            tab.reinvert(&original);
            tab.price(&d2);
            let before = iterations;
            if !tab.optimize(&allowed, &d2, &original, opt_tol, &mut iterations, limit)? {
                return Err(LpError::Infeasible);
            }
            if iterations == before {
                break;
            }
        }

        // reduced cost of artificial j is −π_j; the primal point is x = sign ∘ π
        let x0: Vec<f64> = (0..n).map(|j| -sign[j] * tab.obj[m_rows + j]).collect();
        let active_norm: Vec<usize> = tab.basis.iter().copied().filter(|&c| c < m_rows).collect();
        let norm_rows: Vec<(Vec<f64>, f64)> = rows.iter().map(|(a, b, _)| (a.clone(), *b)).collect();
        let dx = refine(&norm_rows, &active_norm, &x0);
        let refined: Vec<f64> = x0.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let violation = |x: &[f64]| {
            norm_rows
                .iter()
                .map(|(a, b)| b - a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        };
        // refinement can go wrong on a nearly singular active set
        let x = if violation(&refined) <= violation(&x0) { refined } else { x0 };
        let max_violation = self
            .rows
            .iter()
            .map(|(a, b)| b - a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations,
            max_violation,
        })
    }
}
