use serde::{Deserialize, Serialize};

use super::{bernstein_coefficients, HyperBox, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn mul(self, o: Interval) -> Interval {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        Interval::new(
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    pub fn scale(self, s: f64) -> Interval {
        if s >= 0.0 {
            Interval::new(self.lo * s, self.hi * s)
        } else {
            Interval::new(self.hi * s, self.lo * s)
        }
    }

    /// Tight integer power (even powers of a zero-straddling interval start at 0).
    pub fn powi(self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(1.0);
        }
        let a = self.lo.powi(k as i32);
        let b = self.hi.powi(k as i32);
        if k % 2 == 1 {
            Interval::new(a, b)
        } else if self.lo <= 0.0 && self.hi >= 0.0 {
            Interval::new(0.0, a.max(b))
        } else {
            Interval::new(a.min(b), a.max(b))
        }
    }

    pub fn intersect(self, o: Interval) -> Interval {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        if lo <= hi {
            Interval::new(lo, hi)
        } else {
            // both enclosures are sound, so an empty intersection can only be
            // floating-point noise; fall back to the hull of the overlap point
            Interval::new(hi, lo)
        }
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }
}

/// Term-by-term interval arithmetic over the box.
pub fn naive_enclosure(p: &Polynomial, cell: &HyperBox) -> Interval {
    let ranges: Vec<Interval> = cell
        .bounds()
        .iter()
        .map(|[a, b]| Interval::new(*a, *b))
        .collect();
    p.terms().fold(Interval::point(0.0), |acc, (e, c)| {
        let mono = e
            .iter()
            .enumerate()
            .fold(Interval::point(1.0), |m, (i, &k)| m.mul(ranges[i].powi(k)));
        acc.add(mono.scale(c))
    })
}

/// Range enclosure of `p` over `cell`: the intersection of naive interval
/// arithmetic and the Bernstein coefficient range.
pub fn interval_enclosure(p: &Polynomial, cell: &HyperBox) -> Interval {
    let naive = naive_enclosure(p, cell);
    match bernstein_coefficients(p, cell, &p.degrees()) {
        Ok(b) => {
            let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            naive.intersect(Interval::new(lo, hi))
        }
        Err(_) => naive,
    }
}
