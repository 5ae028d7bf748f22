use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PolyError;

/// Axis-aligned box: one closed interval `[lo, hi]` per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct HyperBox {
    bounds: Vec<[f64; 2]>,
}

impl HyperBox {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self, PolyError> {
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(PolyError::InvalidBox(format!(
                    "coordinate {i} has a non-finite bound"
                )));
            }
            if lo > hi {
                return Err(PolyError::InvalidBox(format!(
                    "coordinate {i} has lo {lo} > hi {hi}"
                )));
            }
        }
        Ok(HyperBox { bounds })
    }

    /// Degenerate box containing exactly `point`.
    pub fn point(point: &[f64]) -> Self {
        HyperBox {
            bounds: point.iter().map(|&x| [x, x]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.bounds[i][0]
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.bounds[i][1]
    }

    pub fn width(&self, i: usize) -> f64 {
        self.bounds[i][1] - self.bounds[i][0]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|[a, b]| 0.5 * (a + b)).collect()
    }

    /// Maps unit-cube coordinates `u ∈ [0,1]^n` into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(u)
            .map(|([a, b], &t)| a + (b - a) * t)
            .collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && self
                .bounds
                .iter()
                .zip(point)
                .all(|([a, b], &x)| *a <= x && x <= *b)
    }

    /// True if `other` lies inside `self` widened by `slack` on every side.
    pub fn contains_box(&self, other: &HyperBox, slack: f64) -> bool {
        self.dim() == other.dim()
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|([a, b], [c, d])| *a - slack <= *c && *d <= *b + slack)
    }

    pub fn hull(&self, other: &HyperBox) -> HyperBox {
        HyperBox {
            bounds: self
                .bounds
                .iter()
                .zip(&other.bounds)
                .map(|([a, b], [c, d])| [a.min(*c), b.max(*d)])
                .collect(),
        }
    }

    pub fn bisect(&self, dim: usize) -> (HyperBox, HyperBox) {
        let mid = 0.5 * (self.bounds[dim][0] + self.bounds[dim][1]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.bounds[dim][1] = mid;
        right.bounds[dim][0] = mid;
        (left, right)
    }

    /// Dimension with the largest width relative to `reference`'s widths.
    /// Dimensions where the reference is degenerate are never chosen.
    pub fn widest_relative_to(&self, reference: &HyperBox) -> usize {
        let mut best = 0;
        let mut best_ratio = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            let rw = reference.width(i);
            let ratio = if rw > 0.0 { self.width(i) / rw } else { -1.0 };
            if ratio > best_ratio {
                best_ratio = ratio;
                best = i;
            }
        }
        best
    }

    /// All `2^n` corners.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| self.bounds[i][(mask >> i) & 1])
                    .collect()
            })
            .collect()
    }

    /// Uniform sample by per-coordinate inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|[a, b]| a + (b - a) * rng.random::<f64>())
            .collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    /// Splits into `2^depth` cells by repeated bisection of the widest
    /// dimension (relative to this box).
    pub fn subdivide(&self, depth: u32) -> Vec<HyperBox> {
        let mut cells = vec![self.clone()];
        for _ in 0..depth {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    let d = c.widest_relative_to(self);
                    let (l, r) = c.bisect(d);
                    [l, r]
                })
                .collect();
        }
        cells
    }
}

impl TryFrom<Vec<[f64; 2]>> for HyperBox {
    type Error = PolyError;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, PolyError> {
        HyperBox::new(v)
    }
}

impl From<HyperBox> for Vec<[f64; 2]> {
    fn from(b: HyperBox) -> Self {
        b.bounds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_bounds() {
        assert!(HyperBox::new(vec![[1.0, 0.0]]).is_err());
        assert!(HyperBox::new(vec![[0.0, f64::INFINITY]]).is_err());
        assert!(HyperBox::new(vec![[0.0, 0.0]]).is_ok());
    }

    #[test]
    fn subdivide_partitions_widest_first() {
        let b = HyperBox::new(vec![[0.0, 4.0], [0.0, 1.0]]).unwrap();
        let cells = b.subdivide(3);
        assert_eq!(cells.len(), 8);
        let vol: f64 = cells.iter().map(|c| c.volume()).sum();
        assert!((vol - 4.0).abs() < 1e-12);
        // relative widths are balanced: each cell is 1/2 x 1/4 of the parent in some order
        for c in &cells {
            assert!((c.width(0) / 4.0 - 0.5).abs() < 1e-12 || (c.width(0) / 4.0 - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn corners_and_contains() {
        let b = HyperBox::new(vec![[-1.0, 1.0], [2.0, 3.0]]).unwrap();
        let cs = b.corners();
        assert_eq!(cs.len(), 4);
        assert!(cs.iter().all(|c| b.contains(c)));
        assert!(!b.contains(&[0.0, 3.5]));
    }
}
