//! Sampling-and-query access to matrices: per-row SQ access plus SQ access
//! to the vector of row norms, giving joint entry sampling proportional to
//! |A(i,j)|^2 / ||A||_F^2.

use num_complex::Complex64;
use rand::RngCore;

use super::vector::{Mode, SampleVector, SqVector, VectorQuery};
use crate::dense::CMatrix;
use crate::error::{Error, Result};

/// Entry-level query access to a matrix, possibly virtual.
pub trait MatrixQuery: Send + Sync {
    fn shape(&self) -> (usize, usize);
    fn entry(&self, i: usize, j: usize) -> Complex64;

    fn to_dense(&self) -> CMatrix {
        let (m, n) = self.shape();
        CMatrix::from_fn(m, n, |i, j| self.entry(i, j))
    }
}

/// Row-norm and within-row sampling access, the matrix analogue of
/// [`SampleVector`].
pub trait SampleMatrix: MatrixQuery {
    /// Draw a row index with probability ||A(i,.)||^2 / ||A||_F^2.
    fn sample_row(&self, rng: &mut dyn RngCore) -> usize;
    /// Draw a column index from row i with probability |A(i,j)|^2 / ||A(i,.)||^2.
    fn sample_in_row(&self, i: usize, rng: &mut dyn RngCore) -> usize;
    fn row_norm_sq(&self, i: usize) -> f64;
    fn frob_sq(&self) -> f64;
    fn frob_norm(&self) -> f64 {
        self.frob_sq().sqrt()
    }

    /// Joint entry sample: row from the row-norm distribution, then a column
    /// within that row. Hits (i,j) with probability |A(i,j)|^2 / ||A||_F^2.
    fn sample_entry(&self, rng: &mut dyn RngCore) -> (usize, usize) {
        let i = self.sample_row(rng);
        (i, self.sample_in_row(i, rng))
    }
}

/// Concrete SQ access over an owned dense matrix: one sampler per row plus a
/// sampler over the row norms.
pub struct SqMatrix {
    rows: Vec<SqVector>,
    row_norms: SqVector,
    ncols: usize,
    frob_sq: f64,
    mode: Mode,
}

impl SqMatrix {
    /// Build from row-major data. All-zero rows are allowed (they carry zero
    /// sampling weight); the all-zero matrix is rejected.
    pub fn build(rows: Vec<Vec<Complex64>>, mode: Mode) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParam("empty matrix".into()));
        }
        let ncols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::ShapeMismatch {
                    expected: format!("{ncols} columns"),
                    got: format!("{} in row {i}", r.len()),
                });
            }
            for (j, z) in r.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite(i * ncols + j));
                }
            }
        }
        let sq_rows: Vec<SqVector> = rows
            .into_iter()
            .map(|r| SqVector::build_allow_zero(r, mode))
            .collect();
        let norms: Vec<Complex64> = sq_rows
            .iter()
            .map(|r| Complex64::new(r.norm(), 0.0))
            .collect();
        let frob_sq: f64 = sq_rows.iter().map(|r| r.norm_sq()).sum();
        if frob_sq == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let row_norms = SqVector::build_allow_zero(norms, mode);
        Ok(Self {
            rows: sq_rows,
            row_norms,
            ncols,
            frob_sq,
            mode,
        })
    }

    pub fn from_dense(a: &CMatrix, mode: Mode) -> Result<Self> {
        let rows = (0..a.nrows())
            .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
            .collect();
        Self::build(rows, mode)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Point update; dynamic handles only. Updates the row tree and the
    /// row-norm tree, O(log mn) total.
    pub fn update_entry(&mut self, i: usize, j: usize, val: Complex64) -> Result<()> {
        if self.mode != Mode::Dynamic {
            return Err(Error::StaticHandle);
        }
        self.rows[i].update_entry(j, val)?;
        let new_norm = self.rows[i].norm();
        self.row_norms
            .update_entry(i, Complex64::new(new_norm, 0.0))?;
        self.frob_sq = self.row_norms.norm_sq();
        Ok(())
    }

    pub fn row(&self, i: usize) -> &SqVector {
        &self.rows[i]
    }

    /// SQ handle over the vector of row norms.
    pub fn row_norm_vector(&self) -> &SqVector {
        &self.row_norms
    }
}

impl MatrixQuery for SqMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.ncols)
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i].entry(j)
    }
}

impl SampleMatrix for SqMatrix {
    fn sample_row(&self, rng: &mut dyn RngCore) -> usize {
        self.row_norms.sample(rng)
    }

    fn sample_in_row(&self, i: usize, rng: &mut dyn RngCore) -> usize {
        self.rows[i].sample(rng)
    }

    fn row_norm_sq(&self, i: usize) -> f64 {
        self.rows[i].norm_sq()
    }

    fn frob_sq(&self) -> f64 {
        self.frob_sq
    }
}
