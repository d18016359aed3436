//! Vose alias table: O(n) construction, O(1) sampling from a fixed discrete
//! distribution. Zero-weight entries are never produced.

use rand::RngCore;

use crate::rng::{uniform_index, unit_f64};

#[derive(Debug, Clone)]
pub struct AliasTable {
    accept: Vec<f64>,
    alias: Vec<usize>,
    total: f64,
}

impl AliasTable {
    /// Build from nonnegative weights with positive total.
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        assert!(n > 0, "alias table over empty support");
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "alias table needs positive total weight");

        let mut accept = vec![0.0f64; n];
        let mut alias = vec![0usize; n];
        let scale = n as f64 / total;

        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        for (i, &w) in scaled.iter().enumerate() {
            if w < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            accept[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are numerically 1; note a zero-weight entry can only end
        // up here with accept exactly 0 via the small list, and column i
        // returning i requires u < accept[i], so it stays unreachable.
        for &i in small.iter().chain(large.iter()) {
            accept[i] = 1.0;
            alias[i] = i;
        }
        // A fully processed small entry with zero weight keeps accept 0 and a
        // valid alias, so it is never returned.
        Self {
            accept,
            alias,
            total,
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut dyn RngCore) -> usize {
        let col = uniform_index(rng, self.accept.len());
        if unit_f64(rng) < self.accept[col] {
            col
        } else {
            self.alias[col]
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.accept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accept.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use crate::stats::chi_square_gof;

    #[test]
    fn zero_weight_entries_never_sampled() {
        let table = AliasTable::new(&[0.0, 1.0, 0.0, 3.0, 0.0]);
        let mut rng = rng_for(3, 0);
        for _ in 0..20_000 {
            let i = table.sample(&mut rng);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn matches_distribution_chi_square() {
        let weights: Vec<f64> = (0..64).map(|i| ((i * 37 + 11) % 101) as f64).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let table = AliasTable::new(&weights);
        let mut rng = rng_for(11, 0);
        let mut counts = vec![0u64; weights.len()];
        for _ in 0..200_000 {
            counts[table.sample(&mut rng)] += 1;
        }
        assert!(chi_square_gof(&counts, &probs, 0.001));
    }

    #[test]
    fn single_support_point() {
        let table = AliasTable::new(&[0.0, 5.0]);
        let mut rng = rng_for(5, 0);
        for _ in 0..100 {
            assert_eq!(table.sample(&mut rng), 1);
        }
    }
}
