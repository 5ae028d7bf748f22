//! Tensor-product Bernstein forms over boxes.
//!
//! Conversion maps the box affinely onto the unit cube and then changes
//! basis from monomials to Bernstein polynomials axis by axis:
//! `b_k = Σ_{j≤k} C(k,j)/C(D,j) · a_j`.

use super::{HyperBox, PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinForm {
    pub cell: HyperBox,
    pub degree: Vec<u32>,
    /// Row-major tensor (last variable varies fastest) of shape `degree + 1`.
    pub coefficients: Vec<f64>,
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1.0;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j <= i - 1 { t[i - 1][j] } else { 0.0 };
        }
    }
    t
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Applies `f(input_line, output_line)` to every 1-D fibre along `axis`.
fn map_axis(data: &mut [f64], shape: &[usize], axis: usize, f: &mut dyn FnMut(&[f64], &mut [f64])) {
    let st = strides(shape);
    let len = shape[axis];
    let step = st[axis];
    let total = data.len();
    let mut line = vec![0.0; len];
    let mut out = vec![0.0; len];
    for base in 0..total {
        // a fibre starts where the axis index is zero
        if (base / step) % len != 0 {
            continue;
        }
        for k in 0..len {
            line[k] = data[base + k * step];
        }
        f(&line, &mut out);
        for k in 0..len {
            data[base + k * step] = out[k];
        }
    }
}

/// Bernstein coefficients of `p` over `cell` at the given per-variable
/// degree, as a row-major tensor of shape `degree + 1`.
pub fn bernstein_coefficients(
    p: &Polynomial,
    cell: &HyperBox,
    degree: &[u32],
) -> Result<Vec<f64>, PolyError> {
    let n = p.nvars();
    if cell.dim() != n || degree.len() != n {
        return Err(PolyError::DimensionMismatch {
            expected: n,
            got: cell.dim().min(degree.len()),
        });
    }
    let actual = p.degrees();
    if actual.iter().zip(degree).any(|(a, d)| a > d) {
        return Err(PolyError::DegreeTooLow {
            requested: degree.to_vec(),
            actual,
        });
    }
    let shape: Vec<usize> = degree.iter().map(|&d| d as usize + 1).collect();
    let st = strides(&shape);
    let size: usize = shape.iter().product();
    let mut data = vec![0.0; size];
    for (e, c) in p.terms() {
        let idx: usize = e.iter().zip(&st).map(|(&k, &s)| k as usize * s).sum();
        data[idx] += c;
    }
    let max_deg = degree.iter().copied().max().unwrap_or(0) as usize;
    let binom = binomial_table(max_deg);
    for axis in 0..n {
        let d = degree[axis] as usize;
        let lo = cell.lo(axis);
        let w = cell.width(axis);
        // monomial in x -> monomial in u, with x = lo + w u
        let mut lo_pows = vec![1.0; d + 1];
        let mut w_pows = vec![1.0; d + 1];
        for k in 1..=d {
            lo_pows[k] = lo_pows[k - 1] * lo;
            w_pows[k] = w_pows[k - 1] * w;
        }
        map_axis(&mut data, &shape, axis, &mut |a, out| {
            for k in 0..=d {
                let mut s = 0.0;
                for j in k..=d {
                    s += a[j] * binom[j][k] * lo_pows[j - k];
                }
                out[k] = s * w_pows[k];
            }
        });
        // monomial in u -> Bernstein basis of degree d
        map_axis(&mut data, &shape, axis, &mut |a, out| {
            for k in 0..=d {
                let mut s = 0.0;
                for j in 0..=k {
                    s += binom[k][j] / binom[d][j] * a[j];
                }
                out[k] = s;
            }
        });
    }
    Ok(data)
}

impl BernsteinForm {
    pub fn new(p: &Polynomial, cell: &HyperBox, degree: &[u32]) -> Result<Self, PolyError> {
        Ok(BernsteinForm {
            cell: cell.clone(),
            degree: degree.to_vec(),
            coefficients: bernstein_coefficients(p, cell, degree)?,
        })
    }

    /// Bernstein form at the polynomial's own per-variable degree.
    pub fn natural(p: &Polynomial, cell: &HyperBox) -> Result<Self, PolyError> {
        Self::new(p, cell, &p.degrees())
    }

    pub fn min(&self) -> f64 {
        self.coefficients.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.coefficients
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index tuple of the tensor entry at flat position `flat`.
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let shape: Vec<usize> = self.degree.iter().map(|&d| d as usize + 1).collect();
        let st = strides(&shape);
        st.iter()
            .zip(&shape)
            .map(|(&s, &len)| (flat / s) % len)
            .collect()
    }

    /// Point of the cell associated with the coefficient at `flat`
    /// (the Greville abscissa `k/D` on each axis).
    pub fn control_point(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        let u: Vec<f64> = idx
            .iter()
            .zip(&self.degree)
            .map(|(&k, &d)| if d == 0 { 0.5 } else { k as f64 / d as f64 })
            .collect();
        self.cell.from_unit(&u)
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c < self.coefficients[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c > self.coefficients[best] {
                best = i;
            }
        }
        best
    }

    /// Evaluates the Bernstein representation at a point of the cell.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        let n = self.degree.len();
        let max_deg = self.degree.iter().copied().max().unwrap_or(0) as usize;
        let binom = binomial_table(max_deg);
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let d = self.degree[i] as usize;
                let w = self.cell.width(i);
                let u = if w > 0.0 {
                    (point[i] - self.cell.lo(i)) / w
                } else {
                    0.0
                };
                (0..=d)
                    .map(|k| {
                        binom[d][k] * u.powi(k as i32) * (1.0 - u).powi((d - k) as i32)
                    })
                    .collect()
            })
            .collect();
        let shape: Vec<usize> = self.degree.iter().map(|&d| d as usize + 1).collect();
        let st = strides(&shape);
        self.coefficients
            .iter()
            .enumerate()
            .map(|(flat, &b)| {
                let mut w = b;
                for i in 0..n {
                    w *= basis[i][(flat / st[i]) % shape[i]];
                }
                w
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::{parse_polynomial, var_names};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_on_unit_interval() {
        let p = parse_polynomial("x", &var_names(&["x"])).unwrap();
        let cell = HyperBox::new(vec![[0.0, 1.0]]).unwrap();
        let b = bernstein_coefficients(&p, &cell, &[1]).unwrap();
        assert!(close(&b, &[0.0, 1.0], 1e-15));
    }

    #[test]
    fn square_on_symmetric_interval_uses_endpoint_products() {
        // b0 = a^2, b1 = a*b, b2 = b^2 for x^2 on [a, b]
        let s = 2f64.sqrt();
        let p = parse_polynomial("x^2", &var_names(&["x"])).unwrap();
        let cell = HyperBox::new(vec![[-s, s]]).unwrap();
        let b = bernstein_coefficients(&p, &cell, &[2]).unwrap();
        assert!(close(&b, &[2.0, -2.0, 2.0], 1e-12));
    }

    #[test]
    fn constant_has_constant_coefficients() {
        let vars = var_names(&["x", "y"]);
        let p = Polynomial::constant(&vars, 1.0);
        let cell = HyperBox::new(vec![[-3.0, 0.5], [2.0, 7.0]]).unwrap();
        let b = bernstein_coefficients(&p, &cell, &[3, 2]).unwrap();
        assert_eq!(b.len(), 12);
        assert!(b.iter().all(|&c| (c - 1.0).abs() < 1e-14));
    }

    #[test]
    fn degree_too_low_is_rejected() {
        let p = parse_polynomial("x^3", &var_names(&["x"])).unwrap();
        let cell = HyperBox::new(vec![[0.0, 1.0]]).unwrap();
        assert!(matches!(
            bernstein_coefficients(&p, &cell, &[2]),
            Err(PolyError::DegreeTooLow { .. })
        ));
    }

    #[test]
    fn corner_coefficients_are_corner_values() {
        let vars = var_names(&["x", "y"]);
        let p = parse_polynomial("x^2*y - 3*x*y^2 + y - 0.25", &vars).unwrap();
        let cell = HyperBox::new(vec![[-0.5, 1.5], [0.25, 2.0]]).unwrap();
        let f = BernsteinForm::new(&p, &cell, &[3, 2]).unwrap();
        let last = f.coefficients.len() - 1;
        assert!((f.coefficients[0] - p.eval(&[-0.5, 0.25])).abs() < 1e-12);
        assert!((f.coefficients[last] - p.eval(&[1.5, 2.0])).abs() < 1e-12);
        assert!((f.coefficients[2] - p.eval(&[-0.5, 2.0])).abs() < 1e-12);
        assert!((f.evaluate(&[0.3, 1.1]) - p.eval(&[0.3, 1.1])).abs() < 1e-12);
    }
}
