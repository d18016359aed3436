//! Shared pipeline pieces: threshold specifications, guarantee manifests,
//! and small query adapters.

use num_complex::Complex64;

use crate::dense::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sq::{MatrixQuery, VectorQuery};

/// Singular-value threshold with interpolation width.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdSpec {
    pub sigma: f64,
    pub eta: f64,
}

impl ThresholdSpec {
    pub fn new(sigma: f64, eta: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::InvalidParam("threshold sigma must be positive".into()));
        }
        if !(0.0 < eta && eta <= 0.99) {
            return Err(Error::InvalidParam(
                "threshold eta must lie in (0, 0.99]".into(),
            ));
        }
        Ok(Self { sigma, eta })
    }

    /// The assumption-free choice sigma = eps ||A||_F, eta = 1/2, giving a
    /// spectral low-rank approximation without singular-value assumptions.
    pub fn assumption_free(frob_norm: f64, eps: f64) -> Result<Self> {
        Self::new(eps * frob_norm, 0.5)
    }
}

/// Dense-backed query adapters for oracle-side operands.
pub struct DenseVectorQuery(pub CVector);

impl VectorQuery for DenseVectorQuery {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn entry(&self, i: usize) -> Complex64 {
        self.0[i]
    }
}

pub struct DenseMatrixQuery(pub CMatrix);

impl MatrixQuery for DenseMatrixQuery {
    fn shape(&self) -> (usize, usize) {
        (self.0.nrows(), self.0.ncols())
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }
}

/// I * scale as a virtual query (used for the trivial Gibbs iterate I/n).
pub struct ScaledIdentityQuery {
    pub n: usize,
    pub scale: f64,
}

impl MatrixQuery for ScaledIdentityQuery {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        if i == j {
            Complex64::new(self.scale, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// Base guarantee manifest shared by all pipelines.
pub fn base_guarantee(pipeline: &str, eps: f64, delta: f64) -> Manifest {
    let mut m = Manifest::new();
    m.insert("pipeline".into(), pipeline.into());
    m.insert("eps".into(), format!("{eps}"));
    m.insert("delta".into(), format!("{delta}"));
    m
}
