//! Sampling-and-query access to vectors: entry queries, importance samples
//! with probability |v(i)|^2 / ||v||^2, and norm queries.

use num_complex::Complex64;
use rand::RngCore;

use super::alias::AliasTable;
use super::tree::CumulativeTree;
use crate::error::{Error, Result};

/// Entry-level query access to a vector, possibly virtual.
pub trait VectorQuery: Send + Sync {
    fn len(&self) -> usize;
    fn entry(&self, i: usize) -> Complex64;

    fn to_dense(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.entry(i)).collect()
    }
}

/// Full sampling-and-query access: queries, importance samples, and the norm.
pub trait SampleVector: VectorQuery {
    /// Draw an index with probability |v(i)|^2 / ||v||^2.
    fn sample(&self, rng: &mut dyn RngCore) -> usize;
    fn norm_sq(&self) -> f64;
    fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Construction-time choice between the immutable O(1)-sample alias backend
/// and the updatable O(log n) partial-sum tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone)]
enum Sampler {
    Alias { table: AliasTable },
    Tree { tree: CumulativeTree },
    /// All-zero vector; only valid as an internal matrix row.
    Zero,
}

/// Concrete sampling-and-query handle over owned entries.
#[derive(Debug, Clone)]
pub struct SqVector {
    entries: Vec<Complex64>,
    sampler: Sampler,
    norm_sq: f64,
}

fn validate_finite(entries: &[Complex64]) -> Result<()> {
    for (i, z) in entries.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

impl SqVector {
    /// Build sampling-and-query access over a dense vector.
    pub fn build(entries: Vec<Complex64>, mode: Mode) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParam("empty vector".into()));
        }
        validate_finite(&entries)?;
        let v = Self::build_allow_zero(entries, mode);
        if v.norm_sq == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(v)
    }

    pub fn build_real(entries: &[f64], mode: Mode) -> Result<Self> {
        Self::build(
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            mode,
        )
    }

    /// Internal constructor that tolerates the all-zero vector, for matrix
    /// rows that carry zero weight in the row-norm distribution.
    pub(crate) fn build_allow_zero(entries: Vec<Complex64>, mode: Mode) -> Self {
        let weights: Vec<f64> = entries.iter().map(|z| z.norm_sqr()).collect();
        let norm_sq: f64 = weights.iter().sum();
        let sampler = if norm_sq == 0.0 {
            match mode {
                Mode::Static => Sampler::Zero,
                // A dynamic zero row may later gain weight via updates.
                Mode::Dynamic => Sampler::Tree {
                    tree: CumulativeTree::new(&weights),
                },
            }
        } else {
            match mode {
                Mode::Static => Sampler::Alias {
                    table: AliasTable::new(&weights),
                },
                Mode::Dynamic => Sampler::Tree {
                    tree: CumulativeTree::new(&weights),
                },
            }
        };
        Self {
            entries,
            sampler,
            norm_sq,
        }
    }

    pub fn mode(&self) -> Mode {
        match self.sampler {
            Sampler::Alias { .. } | Sampler::Zero => Mode::Static,
            Sampler::Tree { .. } => Mode::Dynamic,
        }
    }

    /// Point update; dynamic handles only. O(log n).
    pub fn update_entry(&mut self, i: usize, val: Complex64) -> Result<()> {
        if !val.re.is_finite() || !val.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
        match &mut self.sampler {
            Sampler::Tree { tree } => {
                self.entries[i] = val;
                tree.set_weight(i, val.norm_sqr());
                self.norm_sq = tree.total();
                Ok(())
            }
            _ => Err(Error::StaticHandle),
        }
    }

    /// Root-vs-leaves drift of the dynamic weight tree (0 for static handles).
    pub fn tree_drift(&self) -> f64 {
        match &self.sampler {
            Sampler::Tree { tree } => {
                let total = tree.total();
                let recomputed = tree.recomputed_total();
                if recomputed == 0.0 {
                    total.abs()
                } else {
                    (total - recomputed).abs() / recomputed
                }
            }
            _ => 0.0,
        }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

impl VectorQuery for SqVector {
    fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    fn entry(&self, i: usize) -> Complex64 {
        self.entries[i]
    }
}

impl SampleVector for SqVector {
    fn sample(&self, rng: &mut dyn RngCore) -> usize {
        match &self.sampler {
            Sampler::Alias { table } => table.sample(rng),
            Sampler::Tree { tree } => tree.sample(rng),
            Sampler::Zero => panic!("sampling from a zero vector"),
        }
    }

    fn norm_sq(&self) -> f64 {
        self.norm_sq
    }
}

impl VectorQuery for Vec<Complex64> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn entry(&self, i: usize) -> Complex64 {
        self[i]
    }
}
