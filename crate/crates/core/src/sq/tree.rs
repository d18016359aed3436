//! Complete binary tree of partial sums over nonnegative leaf weights.
//! Supports O(log n) sampling and O(log n) point updates; this is the
//! updatable counterpart to the alias table.

use rand::RngCore;

use crate::rng::unit_f64;

#[derive(Debug, Clone)]
pub struct CumulativeTree {
    n: usize,
    // 1-based heap layout: sums[1] is the root, leaves at sums[n..2n).
    sums: Vec<f64>,
}

impl CumulativeTree {
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        assert!(n > 0, "cumulative tree over empty support");
        let mut sums = vec![0.0f64; 2 * n];
        sums[n..2 * n].copy_from_slice(weights);
        for i in (1..n).rev() {
            sums[i] = sums[i << 1] + sums[(i << 1) | 1];
        }
        Self { n, sums }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn total(&self) -> f64 {
        if self.n == 1 {
            self.sums[1]
        } else {
            self.sums[1]
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.sums[self.n + i]
    }

    pub fn set_weight(&mut self, i: usize, w: f64) {
        debug_assert!(w >= 0.0);
        let mut idx = self.n + i;
        self.sums[idx] = w;
        while idx > 1 {
            idx >>= 1;
            self.sums[idx] = self.sums[idx << 1] + self.sums[(idx << 1) | 1];
        }
    }

    /// Sample a leaf with probability weight/total. Zero-weight leaves are
    /// unreachable: the descent keeps the residual strictly below the current
    /// subtree total.
    pub fn sample(&self, rng: &mut dyn RngCore) -> usize {
        let total = self.total();
        assert!(total > 0.0, "sampling from a zero-weight tree");
        let mut u = unit_f64(rng) * total;
        // Guard against u == total from rounding.
        if u >= total {
            u = total * (1.0 - f64::EPSILON);
        }
        let mut idx = 1usize;
        while idx < self.n {
            let left = self.sums[idx << 1];
            if u < left {
                idx <<= 1;
            } else {
                u -= left;
                idx = (idx << 1) | 1;
            }
        }
        idx - self.n
    }

    /// Recomputed sum of leaves, for consistency checks against the root.
    pub fn recomputed_total(&self) -> f64 {
        self.sums[self.n..].iter().sum()
    }
}
