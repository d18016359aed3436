//! Approximate projective isometries from sketched cores: inserting the
//! pseudoinverse of the truncated core C_k into an RUR expression yields
//! factors (C_k)+ R whose adjoints are close to (projective) isometries.

use crate::dense::{c, svd, CMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub enum Truncation {
    /// Keep the top k singular values (clamped to the numerical rank).
    Rank(usize),
    /// Keep singular values >= threshold.
    SigmaThreshold(f64),
}

/// Truncated SVD of the core C with everything needed to apply (C_k)+.
pub struct IsometryFactor {
    /// Left singular vectors of C, truncated: r x k'.
    pub u: CMatrix,
    /// Retained singular values, descending.
    pub d: Vec<f64>,
    /// Right singular vectors (as V†, truncated): k' x c.
    pub v_t: CMatrix,
    pub core_cols: usize,
}

/// Factor the truncated core. Ties at the cut retain the lower original
/// index first (the SVD is already sorted with deterministic tie-breaking).
pub fn projective_isometry_factor(core: &CMatrix, trunc: Truncation) -> Result<IsometryFactor> {
    let d = svd(core);
    let numerical_floor = d.singular_values.first().copied().unwrap_or(0.0) * 1e-12;
    let rank = match trunc {
        Truncation::Rank(k) => d
            .singular_values
            .iter()
            .take(k)
            .filter(|&&s| s > numerical_floor)
            .count(),
        Truncation::SigmaThreshold(t) => {
            d.singular_values.iter().filter(|&&s| s >= t).count()
        }
    };
    if rank == 0 {
        let threshold = match trunc {
            Truncation::Rank(_) => numerical_floor,
            Truncation::SigmaThreshold(t) => t,
        };
        return Err(Error::EmptyFactor { threshold });
    }
    Ok(IsometryFactor {
        u: d.u.columns(0, rank).clone_owned(),
        d: d.singular_values[..rank].to_vec(),
        v_t: d.v_t.rows(0, rank).clone_owned(),
        core_cols: core.ncols(),
    })
}

impl IsometryFactor {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    /// (C_k)+ M = V D^-1 U† M for a dense operand with r rows.
    pub fn apply_pinv(&self, m: &CMatrix) -> CMatrix {
        let ut_m = self.u.adjoint() * m;
        let mut scaled = ut_m;
        for (k, &s) in self.d.iter().enumerate() {
            let inv = c(1.0 / s);
            for j in 0..scaled.ncols() {
                scaled[(k, j)] *= inv;
            }
        }
        self.v_t.adjoint() * scaled
    }

    /// D^-1 U† M: the trimmed variant whose adjoint is an approximate
    /// isometry (not merely projective).
    pub fn apply_trimmed(&self, m: &CMatrix) -> CMatrix {
        let ut_m = self.u.adjoint() * m;
        let mut scaled = ut_m;
        for (k, &s) in self.d.iter().enumerate() {
            let inv = c(1.0 / s);
            for j in 0..scaled.ncols() {
                scaled[(k, j)] *= inv;
            }
        }
        scaled
    }

    /// Measured alpha of the projective-isometry claim: with F = (C_k)+ R,
    /// || F F† - Pi || for Pi the projector onto the image of (C_k)+.
    pub fn alpha_projective(&self, r_dense: &CMatrix) -> f64 {
        let f = self.apply_pinv(r_dense);
        let gram = &f * f.adjoint();
        let pi = self.v_t.adjoint() * &self.v_t;
        crate::dense::spectral_norm(&(gram - pi))
    }

    /// Measured alpha of the isometry claim for the trimmed factor
    /// G = D^-1 U† R: || G G† - I ||.
    pub fn alpha_trimmed(&self, r_dense: &CMatrix) -> f64 {
        let g = self.apply_trimmed(r_dense);
        let gram = &g * g.adjoint();
        let eye = CMatrix::identity(self.rank(), self.rank());
        crate::dense::spectral_norm(&(gram - eye))
    }
}
