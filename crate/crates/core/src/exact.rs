//! Exact floating-point accumulation.
//!
//! [`ExactSum`] keeps a list of non-overlapping partials (Shewchuk's
//! algorithm) so the represented value is the exact real sum of everything
//! added. [`ExactSum::value`] rounds that real once, correctly. Two
//! accumulators holding the same real therefore report bit-identical values
//! no matter in which order or grouping the terms arrived.

use std::ops::{AddAssign, SubAssign};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        debug_assert!(value.is_finite(), "ExactSum only accepts finite terms");
        let mut x = value;
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    /// Adds the exact product `a * b` (via a fused multiply-add error term).
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let err = a.mul_add(b, -p);
        self.add(p);
        if err != 0.0 {
            self.add(err);
        }
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// The exact sum rounded to the nearest double (ties to even).
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            let y = p[n - 1];
            n -= 1;
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Half-way cases: the remaining partials decide the rounding direction.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl AddAssign<f64> for ExactSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl AddAssign<&ExactSum> for ExactSum {
    fn add_assign(&mut self, rhs: &ExactSum) {
        self.merge(rhs);
    }
}

impl SubAssign<&ExactSum> for ExactSum {
    fn sub_assign(&mut self, rhs: &ExactSum) {
        for &p in &rhs.partials {
            self.add(-p);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = ExactSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
